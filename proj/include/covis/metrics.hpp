#pragma once

#include <Eigen/Core>

#include <optional>
#include <vector>

#include "covis/geometry.hpp"

namespace covis {

struct PoseError {
  double rot_deg = 0.0;
  double trans_deg = 0.0;
  double combined = 0.0;  // max(rot_deg, trans_deg)
  bool failed = false;
  // Metric translation error; present only when the ground truth has scale.
  std::optional<double> trans_m;

  static PoseError make(double rot_deg, double trans_deg,
                        std::optional<double> trans_m = std::nullopt);
  static PoseError failure();
};

// Geodesic angle between two rotations, degrees.
double rotation_error(const Eigen::Matrix3d& R_est, const Eigen::Matrix3d& R_gt);

// Sign-free angle between translation directions, degrees in [0, 90].
double translation_error(const Eigen::Vector3d& t_est, const Eigen::Vector3d& t_gt);

// ||t_gt - |t_gt| * t_est/|t_est||; t_gt carries the metric scale.
double translation_error_m(const Eigen::Vector3d& t_est, const Eigen::Vector3d& t_gt);

// Full comparison; metric error is filled in when `metric_gt` is set.
PoseError pose_error(const RelativePose& est, const Eigen::Matrix3d& R_gt,
                     const Eigen::Vector3d& t_gt, bool metric_gt);

enum class AucMode {
  kExact,   // exact integral of the recall step function
  kBinned,  // mean recall sampled at multiples of a bin width
};

// AUC percentages, one per threshold (degrees).
std::vector<double> pose_auc(const std::vector<PoseError>& errors,
                             const std::vector<double>& thresholds,
                             AucMode mode = AucMode::kExact, double bin_deg = 5.0);

// Fraction of pairs whose combined error is <= e.
double recall_at(const std::vector<PoseError>& errors, double e);

struct ThresholdGrid {
  std::vector<double> rot_thresholds;    // degrees
  std::vector<double> trans_thresholds;  // meters

  // 10 levels: 1..10 degrees paired with 0.2..2.0 meters.
  static ThresholdGrid standard();
  void validate() const;
};

// Mean over grid levels of the fraction of pairs within both thresholds, in
// percent. Every pair needs a metric translation error.
double maa(const std::vector<PoseError>& errors, const ThresholdGrid& grid);

}  // namespace covis
