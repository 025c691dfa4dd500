#include <doctest.h>

#include <random>

#include "covis/geometry.hpp"
#include "covis/metrics.hpp"
#include "geometry_fixtures.hpp"
#include "support.hpp"

using namespace covis;
using covis::test::error_of;

namespace {

const CameraIntrinsics kK{500, 500, 320, 240, 0};

struct Noisy {
  MatchSet matches;
  std::vector<bool> truth;
};

// Inliers with Gaussian noise on image 2, then uniform outliers in 640x480.
Noisy noisy_scene(const RelativePose& pose, int n_in, int n_out, double sigma,
                  std::uint64_t seed) {
  const auto v = test::project_cloud(pose, kK, kK, n_in, seed);
  std::mt19937_64 rng(seed ^ 0xabcdef);
  std::normal_distribution<double> g(0.0, sigma);
  std::uniform_real_distribution<double> ux(0, 640), uy(0, 480);
  Noisy out{test::to_matches(v.x1, v.x2), std::vector<bool>(n_in, true)};
  for (auto& c : out.matches.items) c.p2 += Point2(g(rng), g(rng));
  for (int i = 0; i < n_out; ++i) {
    out.matches.items.push_back({{ux(rng), uy(rng)}, {ux(rng), uy(rng)}});
    out.truth.push_back(false);
  }
  return out;
}

}  // namespace

TEST_CASE("ransac recovers inliers among uniform outliers") {
  const RelativePose pose{test::rot({0, 1, 0}, 10), Eigen::Vector3d(1, 0, 0.3).normalized()};
  int good = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Noisy s = noisy_scene(pose, 100, 43, 0.5, seed);
    EstimatorParams p;
    p.seed = seed;
    const Model3x3 m = ransac(s.matches, ModelKind::kFundamental, p);
    int recovered = 0, false_in = 0;
    for (std::size_t i = 0; i < s.truth.size(); ++i) {
      recovered += s.truth[i] && m.inliers[i];
      false_in += !s.truth[i] && m.inliers[i];
    }
    good += recovered >= 95 && false_in <= 2;

    // Every flagged inlier is within threshold, and F is rank 2.
    const auto res = residuals(m, s.matches);
    for (std::size_t i = 0; i < res.size(); ++i) {
      if (m.inliers[i]) REQUIRE(res[i] < p.threshold * p.threshold);
    }
    REQUIRE(std::abs(m.m.determinant()) <= 1e-9);
  }
  CHECK(good >= 95);
}

TEST_CASE("ransac stops early on clean data") {
  const RelativePose pose{test::rot({0, 1, 0}, 5), Eigen::Vector3d(1, 0, 0).normalized()};
  const auto v = test::project_cloud(pose, kK, kK, 60, 3);
  const MatchSet m = test::to_matches(v.x1, v.x2);
  const Model3x3 model = ransac(m, ModelKind::kFundamental, {});
  CHECK(model.score == 60);
  CHECK(model.iterations <= 2);
  CHECK(adaptive_iteration_bound(1.0, 8, 0.9999, 10000) == 1);
  CHECK(adaptive_iteration_bound(0.0, 8, 0.9999, 10000) == 10000);
  // w^s below double resolution must not collapse the bound.
  CHECK(adaptive_iteration_bound(1.0 / 143, 8, 0.9999, 10000) == 10000);
  // w = 0.5, s = 4: log(1e-4) / log(15/16) = 142.7 -> 143.
  CHECK(adaptive_iteration_bound(0.5, 4, 0.9999, 10000) == 143);
}

TEST_CASE("ransac on exactly eight matches equals the direct solve") {
  const RelativePose pose{test::rot({1, 0, 0}, 7), Eigen::Vector3d(0.2, 1, 0).normalized()};
  const auto v = test::project_cloud(pose, kK, kK, 8, 5);
  const Model3x3 m = ransac(test::to_matches(v.x1, v.x2), ModelKind::kFundamental, {});
  Eigen::Matrix3d direct = eight_point<double>(v.x1, v.x2);
  if (direct.cwiseProduct(m.m).sum() < 0) direct = -direct;
  CHECK((direct - m.m).norm() < 1e-9);
}

TEST_CASE("ransac error paths") {
  const auto v = test::project_cloud({}, kK, kK, 7, 1);
  CHECK(error_of([&] { ransac(test::to_matches(v.x1, v.x2), ModelKind::kFundamental, {}); }) ==
        ErrorCode::kInsufficientData);

  EstimatorParams magsac;
  magsac.method = RobustMethod::kMagsac;
  const auto w = test::project_cloud({}, kK, kK, 20, 1);
  CHECK(error_of([&] { ransac(test::to_matches(w.x1, w.x2), ModelKind::kFundamental, magsac); }) ==
        ErrorCode::kNotImplemented);
  CHECK(error_of([&] { ransac(test::to_matches(w.x1, w.x2), ModelKind::kEssential, {}); }) ==
        ErrorCode::kInvalidArgument);

  EstimatorParams bad;
  bad.threshold = 0.0;
  CHECK(error_of([&] { ransac(test::to_matches(w.x1, w.x2), ModelKind::kFundamental, bad); }) ==
        ErrorCode::kInvalidArgument);

  // Pure noise: no hypothesis gathers more than the minimal sample.
  MatchSet noise{{}, {"a", 640, 480}, {"b", 640, 480}};
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0, 480);
  for (int i = 0; i < 9; ++i) noise.items.push_back({{u(rng), u(rng)}, {u(rng), u(rng)}});
  EstimatorParams tight;
  tight.threshold = 1e-6;
  CHECK(error_of([&] { ransac(noise, ModelKind::kFundamental, tight); }) ==
        ErrorCode::kEstimationFailed);

  // Planar scene: every sample is degenerate for F.
  MatchSet planar{{}, {"a", 1000, 1000}, {"b", 1000, 1000}};
  for (int i = 0; i < 40; ++i) {
    const Point2 p(u(rng), u(rng));
    planar.items.push_back({p, p + Point2(10, 0)});
  }
  CHECK(error_of([&] { ransac(planar, ModelKind::kFundamental, {}); }) ==
        ErrorCode::kDegenerateConfiguration);
  // The same scene is fine for a homography.
  CHECK(ransac(planar, ModelKind::kHomography, {}).score == 40);
}

TEST_CASE("ransac mask is invariant to a power-of-two rescale") {
  const RelativePose pose{test::rot({0, 1, 0}, 10), Eigen::Vector3d(1, 0, 0.3).normalized()};
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Noisy s = noisy_scene(pose, 80, 30, 0.5, seed);
    MatchSet scaled = s.matches;
    for (auto& c : scaled.items) {
      c.p1 *= 2.0;
      c.p2 *= 2.0;
    }
    EstimatorParams p;
    p.seed = seed;
    const Model3x3 a = ransac(s.matches, ModelKind::kFundamental, p);
    p.threshold *= 2.0;
    const Model3x3 b = ransac(scaled, ModelKind::kFundamental, p);
    CHECK(a.inliers == b.inliers);
  }
}

TEST_CASE("ransac is deterministic for a seed") {
  const RelativePose pose{test::rot({0, 1, 0}, 10), Eigen::Vector3d(1, 0, 0.3).normalized()};
  const Noisy s = noisy_scene(pose, 80, 60, 0.5, 77);
  EstimatorParams p;
  p.seed = 12;
  const Model3x3 a = ransac(s.matches, ModelKind::kFundamental, p);
  const Model3x3 b = ransac(s.matches, ModelKind::kFundamental, p);
  CHECK(a.m == b.m);
  CHECK(a.inliers == b.inliers);
  CHECK(a.iterations == b.iterations);
}

TEST_CASE("essential ransac and pose") {
  const RelativePose pose{test::rot({0.2, 1, 0}, 15), Eigen::Vector3d(-1, 0.1, 0.2).normalized()};
  const Noisy s = noisy_scene(pose, 120, 40, 0.5, 9);
  const Model3x3 m = ransac(s.matches, ModelKind::kEssential, {}, &kK, &kK);
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(m.m);
  CHECK(svd.singularValues()(0) == doctest::Approx(svd.singularValues()(1)));
  CHECK(std::abs(m.m.determinant()) <= 1e-9);
  const auto res = residuals(m, s.matches, &kK, &kK);
  int flagged = 0;
  for (std::size_t i = 0; i < res.size(); ++i) {
    if (!m.inliers[i]) continue;
    ++flagged;
    CHECK(res[i] < 1.5 * 1.5);
  }
  CHECK(flagged == m.score);
  CHECK(m.score >= 110);
  const RelativePose est = pose_from_fundamental(m, kK, kK, s.matches);
  CHECK(rotation_error(est.R, pose.R) < 1.0);
  CHECK(translation_error(est.t, pose.t) < 2.0);
}

TEST_CASE("pose from a constructed essential matrix") {
  const RelativePose gt{test::rot({0, 1, 0}, 10), Eigen::Vector3d(1, 0, 0)};
  const auto v = test::project_cloud(gt, kK, kK, 30, 2);
  const Eigen::Matrix3d E = skew<double>(gt.t) * gt.R;
  const RelativePose est = pose_from_essential(E, kK, kK, test::to_matches(v.x1, v.x2));
  const Eigen::AngleAxisd diff(est.R.transpose() * gt.R);
  CHECK(std::abs(diff.angle()) < 1e-6);
  CHECK((est.t - gt.t).norm() < 1e-6);
  CHECK((est.R.transpose() * est.R - Eigen::Matrix3d::Identity()).norm() < 1e-9);
  CHECK(est.R.determinant() == doctest::Approx(1.0).epsilon(1e-9));

  // Forward motion.
  const RelativePose fwd{Eigen::Matrix3d::Identity(), Eigen::Vector3d(0, 0, 1)};
  const auto f = test::project_cloud(fwd, kK, kK, 30, 3);
  const RelativePose est2 =
      pose_from_essential(skew<double>(fwd.t), kK, kK, test::to_matches(f.x1, f.x2));
  CHECK((est2.R - Eigen::Matrix3d::Identity()).norm() < 1e-6);
  CHECK((est2.t - fwd.t).norm() < 1e-6);
}

TEST_CASE("decompose then recompose on random poses") {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Vector3d axis(g(rng), g(rng), g(rng));
    const RelativePose gt{test::rot(axis, 20 * std::abs(g(rng))),
                          Eigen::Vector3d(g(rng), g(rng), 0.3 * g(rng)).normalized()};
    const auto v = test::project_cloud(gt, kK, kK, 25, trial);
    const RelativePose est =
        pose_from_essential(skew<double>(gt.t) * gt.R, kK, kK, test::to_matches(v.x1, v.x2));
    CHECK(rotation_error(est.R, gt.R) < 1e-6 * 180 / M_PI);
    CHECK((est.t - gt.t).norm() < 1e-6);
  }
}

TEST_CASE("pose recovery fails with no usable points") {
  const RelativePose gt{test::rot({0, 1, 0}, 10), Eigen::Vector3d(1, 0, 0)};
  const auto v = test::project_cloud(gt, kK, kK, 10, 2);
  Model3x3 F;
  F.kind = ModelKind::kFundamental;
  F.m = fundamental_from_pose(gt, kK, kK);
  F.inliers.assign(10, false);
  CHECK(error_of([&] { pose_from_fundamental(F, kK, kK, test::to_matches(v.x1, v.x2)); }) ==
        ErrorCode::kEstimationFailed);
  F.kind = ModelKind::kHomography;
  CHECK(error_of([&] { pose_from_fundamental(F, kK, kK, test::to_matches(v.x1, v.x2)); }) ==
        ErrorCode::kInvalidArgument);
}

TEST_CASE("fundamental and essential conversions") {
  const RelativePose gt{test::rot({1, 2, 3}, 17), Eigen::Vector3d(1, -2, 0.5).normalized()};
  const CameraIntrinsics K2{700, 710, 300, 260, 0};
  const Eigen::Matrix3d F = fundamental_from_pose(gt, kK, K2);
  const Eigen::Matrix3d E = essential_from_fundamental(F, kK, K2);
  Eigen::Matrix3d E_gt = project_essential<double>(skew<double>(gt.t) * gt.R);
  if (E_gt.cwiseProduct(E).sum() < 0) E_gt = -E_gt;
  CHECK((E - E_gt).norm() < 1e-9);
  CHECK(CameraIntrinsics::from_matrix(K2.K()).fx == 700);
  CHECK(error_of([] { CameraIntrinsics::from_matrix(Eigen::Matrix3d::Zero()); }) ==
        ErrorCode::kInvalidArgument);
}
