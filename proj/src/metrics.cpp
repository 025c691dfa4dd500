#include "covis/metrics.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "covis/error.hpp"

namespace covis {
namespace {

constexpr double kRadToDeg = 180.0 / std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();

void require_rotation(const Eigen::Matrix3d& R) {
  if (!R.allFinite() ||
      !(R.transpose() * R).isApprox(Eigen::Matrix3d::Identity(), 1e-6) ||
      std::abs(R.determinant() - 1.0) > 1e-6) {
    throw Error(ErrorCode::kInvalidArgument, "matrix is not a rotation");
  }
}

}  // namespace

PoseError PoseError::make(double rot_deg, double trans_deg, std::optional<double> trans_m) {
  return {rot_deg, trans_deg, std::max(rot_deg, trans_deg), false, trans_m};
}

PoseError PoseError::failure() { return {kInf, kInf, kInf, true, kInf}; }

double rotation_error(const Eigen::Matrix3d& R_est, const Eigen::Matrix3d& R_gt) {
  require_rotation(R_est);
  require_rotation(R_gt);
  const double c = ((R_gt.transpose() * R_est).trace() - 1.0) / 2.0;
  return std::acos(std::clamp(c, -1.0, 1.0)) * kRadToDeg;
}

double translation_error(const Eigen::Vector3d& t_est, const Eigen::Vector3d& t_gt) {
  const double n_est = t_est.norm();
  const double n_gt = t_gt.norm();
  if (!(n_est > 0.0) || !(n_gt > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "translation must be nonzero");
  }
  const double c = std::abs(t_est.dot(t_gt)) / (n_est * n_gt);
  return std::acos(std::clamp(c, 0.0, 1.0)) * kRadToDeg;
}

double translation_error_m(const Eigen::Vector3d& t_est, const Eigen::Vector3d& t_gt) {
  const double n_est = t_est.norm();
  if (!(n_est > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "translation must be nonzero");
  }
  return (t_gt - t_gt.norm() * t_est / n_est).norm();
}

PoseError pose_error(const RelativePose& est, const Eigen::Matrix3d& R_gt,
                     const Eigen::Vector3d& t_gt, bool metric_gt) {
  std::optional<double> metric;
  if (metric_gt) metric = translation_error_m(est.t, t_gt);
  return PoseError::make(rotation_error(est.R, R_gt), translation_error(est.t, t_gt), metric);
}

double recall_at(const std::vector<PoseError>& errors, double e) {
  if (errors.empty()) return 0.0;
  const auto hits = std::count_if(errors.begin(), errors.end(), [e](const PoseError& p) {
    return !p.failed && p.combined <= e;
  });
  return static_cast<double>(hits) / static_cast<double>(errors.size());
}

std::vector<double> pose_auc(const std::vector<PoseError>& errors,
                             const std::vector<double>& thresholds, AucMode mode,
                             double bin_deg) {
  if (errors.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "AUC of an empty error list");
  }
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    if (!(thresholds[i] > 0.0) || (i > 0 && !(thresholds[i] > thresholds[i - 1]))) {
      throw Error(ErrorCode::kInvalidArgument, "thresholds must be positive and increasing");
    }
  }
  const double n = static_cast<double>(errors.size());
  std::vector<double> out;
  out.reserve(thresholds.size());
  for (double tau : thresholds) {
    double area = 0.0;
    if (mode == AucMode::kExact) {
      // Each pair with error e < tau is recalled on [e, tau].
      for (const PoseError& p : errors) {
        if (!p.failed && p.combined < tau) area += tau - std::max(0.0, p.combined);
      }
      area /= n * tau;
    } else {
      if (!(bin_deg > 0.0)) {
        throw Error(ErrorCode::kInvalidArgument, "bin width must be positive");
      }
      const int bins = std::max(1, static_cast<int>(std::lround(tau / bin_deg)));
      for (int b = 1; b <= bins; ++b) area += recall_at(errors, tau * b / bins);
      area /= bins;
    }
    out.push_back(100.0 * area);
  }
  return out;
}

ThresholdGrid ThresholdGrid::standard() {
  ThresholdGrid grid;
  for (int i = 1; i <= 10; ++i) {
    grid.rot_thresholds.push_back(static_cast<double>(i));
    grid.trans_thresholds.push_back(0.2 * i);
  }
  return grid;
}

void ThresholdGrid::validate() const {
  if (rot_thresholds.empty() || rot_thresholds.size() != trans_thresholds.size()) {
    throw Error(ErrorCode::kInvalidArgument, "threshold grid lists must be non-empty and paired");
  }
  for (std::size_t i = 1; i < rot_thresholds.size(); ++i) {
    if (!(rot_thresholds[i] > rot_thresholds[i - 1]) ||
        !(trans_thresholds[i] > trans_thresholds[i - 1])) {
      throw Error(ErrorCode::kInvalidArgument, "threshold grid must be strictly increasing");
    }
  }
}

double maa(const std::vector<PoseError>& errors, const ThresholdGrid& grid) {
  grid.validate();
  if (errors.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "mAA of an empty error list");
  }
  for (const PoseError& p : errors) {
    if (!p.failed && !p.trans_m) {
      throw Error(ErrorCode::kUnsupportedMetric,
                  "mAA needs metric ground-truth translation for every pair");
    }
  }
  double total = 0.0;
  for (std::size_t level = 0; level < grid.rot_thresholds.size(); ++level) {
    int hits = 0;
    for (const PoseError& p : errors) {
      if (!p.failed && p.rot_deg <= grid.rot_thresholds[level] &&
          *p.trans_m <= grid.trans_thresholds[level]) {
        ++hits;
      }
    }
    total += static_cast<double>(hits) / errors.size();
  }
  return 100.0 * total / grid.rot_thresholds.size();
}

}  // namespace covis
