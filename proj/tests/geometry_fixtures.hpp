#pragma once

#include <Eigen/Geometry>

#include <random>

#include "covis/core.hpp"
#include "covis/geometry.hpp"

namespace covis::test {

inline Eigen::Matrix3d rot(const Eigen::Vector3d& axis, double deg) {
  return Eigen::AngleAxisd(deg * M_PI / 180.0, axis.normalized()).toRotationMatrix();
}

// Projects random points in front of both cameras, x2 = R x1 + t.
struct TwoView {
  Points2 x1;
  Points2 x2;
};

inline TwoView project_cloud(const RelativePose& pose, const CameraIntrinsics& K1,
                             const CameraIntrinsics& K2, int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> xy(-2.0, 2.0), z(4.0, 10.0);
  TwoView out{Points2(2, n), Points2(2, n)};
  int k = 0;
  while (k < n) {
    const Eigen::Vector3d X(xy(rng), xy(rng), z(rng));
    const Eigen::Vector3d Y = pose.R * X + pose.t;
    if (Y.z() <= 0.1) continue;
    out.x1.col(k) = (K1.K() * X).hnormalized();
    out.x2.col(k) = (K2.K() * Y).hnormalized();
    ++k;
  }
  return out;
}

inline MatchSet to_matches(const Points2& x1, const Points2& x2, int w = 4000, int h = 4000) {
  MatchSet m{{}, {"a", w, h}, {"b", w, h}};
  for (Eigen::Index i = 0; i < x1.cols(); ++i) m.items.push_back({x1.col(i), x2.col(i)});
  return m;
}

}  // namespace covis::test
