#pragma once

#include <Eigen/Core>

#include <optional>
#include <vector>

#include "covis/core.hpp"
#include "covis/solvers.hpp"

namespace covis {

enum class ModelKind { kFundamental, kEssential, kHomography };

struct Model3x3 {
  ModelKind kind = ModelKind::kFundamental;
  Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
  std::vector<bool> inliers;
  int score = 0;       // inlier count
  int iterations = 0;  // hypotheses drawn by the robust loop
};

enum class RobustMethod {
  kRansac,
  // Reserved slot for a MAGSAC-style scorer; selecting it raises kNotImplemented.
  kMagsac,
};

struct EstimatorParams {
  double threshold = 1.5;  // pixels
  int max_iters = 10000;
  double confidence = 0.9999;
  std::uint64_t seed = 0;
  RobustMethod method = RobustMethod::kRansac;
};

void validate(const EstimatorParams& params);

struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  double skew = 0.0;

  Eigen::Matrix3d K() const;
  static CameraIntrinsics from_matrix(const Eigen::Matrix3d& K);
};

struct RelativePose {
  Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
  Eigen::Vector3d t = Eigen::Vector3d::UnitX();  // unit direction, x2 = R x1 + t
};

// Minimal sample size of the linear solver behind `kind`.
int minimal_sample_size(ModelKind kind);

// Per-correspondence squared residual in pixels: Sampson for F and E
// (E is lifted to pixels through the intrinsics), symmetric transfer for H.
std::vector<double> residuals(const Model3x3& model, const MatchSet& matches,
                              const CameraIntrinsics* K1 = nullptr,
                              const CameraIntrinsics* K2 = nullptr);

// Linear fit on every given match (no sampling).
Eigen::Matrix3d fit_model(ModelKind kind, const Points2& x1, const Points2& x2,
                          const CameraIntrinsics* K1 = nullptr,
                          const CameraIntrinsics* K2 = nullptr);

// Adaptive hypothesize-and-verify. An inlier has residual < threshold^2.
// The Essential kind needs both intrinsics.
Model3x3 ransac(const MatchSet& matches, ModelKind kind, const EstimatorParams& params,
                const CameraIntrinsics* K1 = nullptr, const CameraIntrinsics* K2 = nullptr);

// Upper bound on the iterations needed to draw one all-inlier sample with
// the given confidence: log(1 - confidence) / log(1 - w^s).
int adaptive_iteration_bound(double inlier_ratio, int sample_size, double confidence,
                             int max_iters);

Eigen::Matrix3d essential_from_fundamental(const Eigen::Matrix3d& F,
                                           const CameraIntrinsics& K1,
                                           const CameraIntrinsics& K2);
Eigen::Matrix3d fundamental_from_essential(const Eigen::Matrix3d& E,
                                           const CameraIntrinsics& K1,
                                           const CameraIntrinsics& K2);
Eigen::Matrix3d fundamental_from_pose(const RelativePose& pose, const CameraIntrinsics& K1,
                                      const CameraIntrinsics& K2);

// The four (R, t) factorizations of an essential matrix.
std::vector<RelativePose> decompose_essential(const Eigen::Matrix3d& E);

// Linear triangulation with P1 = [I|0], P2 = [R|t] on normalized image points.
Eigen::Vector3d triangulate(const RelativePose& pose, const Eigen::Vector2d& n1,
                            const Eigen::Vector2d& n2);

// Cheirality-resolved pose. Uses the inlier mask when present, else all matches.
RelativePose pose_from_essential(const Eigen::Matrix3d& E, const CameraIntrinsics& K1,
                                 const CameraIntrinsics& K2, const MatchSet& matches,
                                 const std::vector<bool>* mask = nullptr);
RelativePose pose_from_fundamental(const Model3x3& F, const CameraIntrinsics& K1,
                                   const CameraIntrinsics& K2, const MatchSet& matches);

}  // namespace covis
