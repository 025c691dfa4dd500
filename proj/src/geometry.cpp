#include "covis/geometry.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "covis/error.hpp"

namespace covis {

void validate(const EstimatorParams& params) {
  if (!(params.threshold > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "threshold must be positive");
  }
  if (!(params.confidence > 0.0 && params.confidence < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "confidence must lie in (0, 1)");
  }
  if (params.max_iters < 1) {
    throw Error(ErrorCode::kInvalidArgument, "max_iters must be >= 1");
  }
}

Eigen::Matrix3d CameraIntrinsics::K() const {
  Eigen::Matrix3d k;
  k << fx, skew, cx,
       0, fy, cy,
       0, 0, 1;
  return k;
}

CameraIntrinsics CameraIntrinsics::from_matrix(const Eigen::Matrix3d& K) {
  if (!(K(0, 0) > 0.0) || !(K(1, 1) > 0.0) || K(1, 0) != 0.0 || K(2, 0) != 0.0 ||
      K(2, 1) != 0.0 || K(2, 2) != 1.0) {
    throw Error(ErrorCode::kInvalidArgument, "not an upper-triangular calibration matrix");
  }
  return {K(0, 0), K(1, 1), K(0, 2), K(1, 2), K(0, 1)};
}

int minimal_sample_size(ModelKind kind) {
  return kind == ModelKind::kHomography ? 4 : 8;
}

Eigen::Matrix3d essential_from_fundamental(const Eigen::Matrix3d& F,
                                           const CameraIntrinsics& K1,
                                           const CameraIntrinsics& K2) {
  return project_essential<double>(K2.K().transpose() * F * K1.K());
}

Eigen::Matrix3d fundamental_from_essential(const Eigen::Matrix3d& E,
                                           const CameraIntrinsics& K1,
                                           const CameraIntrinsics& K2) {
  const Eigen::Matrix3d F = K2.K().inverse().transpose() * E * K1.K().inverse();
  return F / F.norm();
}

Eigen::Matrix3d fundamental_from_pose(const RelativePose& pose, const CameraIntrinsics& K1,
                                      const CameraIntrinsics& K2) {
  return fundamental_from_essential(skew<double>(pose.t) * pose.R, K1, K2);
}

namespace {

constexpr int kRefitRounds = 10;
constexpr int kPolishRounds = 5;

Points2 to_normalized(const Points2& x, const CameraIntrinsics& K) {
  return (K.K().inverse() * x.colwise().homogeneous()).colwise().hnormalized();
}

// Pixel-space matrix used for scoring.
Eigen::Matrix3d scoring_matrix(ModelKind kind, const Eigen::Matrix3d& m,
                               const CameraIntrinsics* K1, const CameraIntrinsics* K2) {
  if (kind != ModelKind::kEssential) return m;
  if (!K1 || !K2) {
    throw Error(ErrorCode::kInvalidArgument, "essential model needs both intrinsics");
  }
  return fundamental_from_essential(m, *K1, *K2);
}

void compute_residuals(ModelKind kind, const Eigen::Matrix3d& scoring, const Points2& x1,
                       const Points2& x2, std::vector<double>& out) {
  out.resize(static_cast<std::size_t>(x1.cols()));
  if (kind == ModelKind::kHomography) {
    const Eigen::Matrix3d inv = scoring.inverse();
    for (Eigen::Index i = 0; i < x1.cols(); ++i) {
      out[i] = symmetric_transfer_error<double>(scoring, inv, x1.col(i), x2.col(i));
    }
    return;
  }
  for (Eigen::Index i = 0; i < x1.cols(); ++i) {
    out[i] = sampson_distance<double>(scoring, x1.col(i), x2.col(i));
  }
}

int count_inliers(const std::vector<double>& res, double thr_sq, std::vector<bool>* mask) {
  int count = 0;
  if (mask) mask->assign(res.size(), false);
  for (std::size_t i = 0; i < res.size(); ++i) {
    if (res[i] < thr_sq) {
      ++count;
      if (mask) (*mask)[i] = true;
    }
  }
  return count;
}

struct Consensus {
  Eigen::Matrix3d m;
  std::vector<bool> inliers;
  int count = 0;
};

// Linear re-fit on the consensus set, repeated while the set does not shrink.
Consensus refit_consensus(ModelKind kind, const Eigen::Matrix3d& start, const Points2& x1,
                          const Points2& x2, const CameraIntrinsics* K1,
                          const CameraIntrinsics* K2, double thr_sq, int rounds,
                          std::vector<double>& res) {
  Consensus best;
  best.m = start;
  compute_residuals(kind, scoring_matrix(kind, best.m, K1, K2), x1, x2, res);
  best.count = count_inliers(res, thr_sq, &best.inliers);
  std::vector<Eigen::Index> members;
  for (int round = 0; round < rounds; ++round) {
    members.clear();
    for (std::size_t i = 0; i < best.inliers.size(); ++i) {
      if (best.inliers[i]) members.push_back(static_cast<Eigen::Index>(i));
    }
    Eigen::Matrix3d refit;
    try {
      refit = fit_model(kind, x1(Eigen::all, members), x2(Eigen::all, members), K1, K2);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kDegenerateConfiguration &&
          e.code() != ErrorCode::kInsufficientData) {
        throw;
      }
      break;
    }
    std::vector<bool> mask;
    compute_residuals(kind, scoring_matrix(kind, refit, K1, K2), x1, x2, res);
    const int count = count_inliers(res, thr_sq, &mask);
    if (count < best.count) break;
    const bool unchanged = mask == best.inliers;
    best.m = refit;
    best.inliers = std::move(mask);
    best.count = count;
    if (unchanged) break;
  }
  return best;
}

// Iteratively reweighted linear fit on a fixed inlier set. Rows are scaled so
// the algebraic error becomes the pixel Sampson error, and residuals are
// damped with a Cauchy weight at a third of the threshold, so matches near
// the threshold cannot tilt the epipolar geometry towards themselves.
Eigen::Matrix3d polish_fundamental(const Eigen::Matrix3d& start, const Points2& x1,
                                   const Points2& x2, const std::vector<bool>& mask,
                                   double threshold) {
  std::vector<Eigen::Index> members;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) members.push_back(static_cast<Eigen::Index>(i));
  }
  const Points2 p1 = x1(Eigen::all, members);
  const Points2 p2 = x2(Eigen::all, members);
  const double scale_sq = threshold * threshold / 9.0;

  // Returns the robust cost of `model` and fills the next weights.
  Eigen::VectorXd w(p1.cols());
  auto weigh = [&](const Eigen::Matrix3d& F) {
    double cost = 0.0;
    for (Eigen::Index i = 0; i < p1.cols(); ++i) {
      const Eigen::Vector3d a = p1.col(i).homogeneous();
      const Eigen::Vector3d b = p2.col(i).homogeneous();
      const Eigen::Vector3d Fa = F * a;
      const Eigen::Vector3d Ftb = F.transpose() * b;
      const double den = Fa.head<2>().squaredNorm() + Ftb.head<2>().squaredNorm();
      if (!(den > 0.0)) {
        w(i) = 0.0;
        cost += std::numeric_limits<double>::infinity();
        continue;
      }
      const double alg = b.dot(Fa);
      const double ratio = alg * alg / den / scale_sq;
      w(i) = 1.0 / (std::sqrt(den) * (1.0 + ratio));
      cost += std::log1p(ratio);
    }
    return cost;
  };

  // IRLS can drift to a model that fits a handful of points; only a lower
  // robust cost over the consensus is accepted.
  Eigen::Matrix3d best = start;
  double best_cost = weigh(start);
  for (int round = 0; round < kPolishRounds; ++round) {
    const Eigen::Matrix3d m = eight_point_weighted<double>(p1, p2, w);
    const double cost = weigh(m);
    if (!(cost < best_cost)) break;
    best = m;
    best_cost = cost;
  }
  return best;
}

}  // namespace

Eigen::Matrix3d fit_model(ModelKind kind, const Points2& x1, const Points2& x2,
                          const CameraIntrinsics* K1, const CameraIntrinsics* K2) {
  switch (kind) {
    case ModelKind::kFundamental:
      return eight_point<double>(x1, x2);
    case ModelKind::kHomography:
      return homography_dlt<double>(x1, x2);
    case ModelKind::kEssential: {
      if (!K1 || !K2) {
        throw Error(ErrorCode::kInvalidArgument, "essential model needs both intrinsics");
      }
      const Eigen::Matrix3d E =
          project_essential<double>(eight_point<double>(to_normalized(x1, *K1),
                                                        to_normalized(x2, *K2)));
      return E / E.norm();
    }
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown model kind");
}

std::vector<double> residuals(const Model3x3& model, const MatchSet& matches,
                              const CameraIntrinsics* K1, const CameraIntrinsics* K2) {
  std::vector<double> out;
  compute_residuals(model.kind, scoring_matrix(model.kind, model.m, K1, K2),
                    matches.points1(), matches.points2(), out);
  return out;
}

int adaptive_iteration_bound(double inlier_ratio, int sample_size, double confidence,
                             int max_iters) {
  const double all_inlier = std::pow(std::clamp(inlier_ratio, 0.0, 1.0), sample_size);
  if (all_inlier <= 0.0) return max_iters;
  if (all_inlier >= 1.0) return 1;
  // log1p keeps tiny all-inlier probabilities from rounding to log(1) = 0.
  const double n = std::log1p(-confidence) / std::log1p(-all_inlier);
  if (!(n > 0.0) || !(n < static_cast<double>(max_iters))) return max_iters;
  return std::max(1, static_cast<int>(std::ceil(n)));
}

Model3x3 ransac(const MatchSet& matches, ModelKind kind, const EstimatorParams& params,
                const CameraIntrinsics* K1, const CameraIntrinsics* K2) {
  validate(params);
  if (params.method == RobustMethod::kMagsac) {
    throw Error(ErrorCode::kNotImplemented, "MAGSAC scoring is not available");
  }
  if (kind == ModelKind::kEssential && (!K1 || !K2)) {
    throw Error(ErrorCode::kInvalidArgument, "essential model needs both intrinsics");
  }
  const int sample_size = minimal_sample_size(kind);
  const int n = static_cast<int>(matches.size());
  if (n < sample_size) {
    throw Error(ErrorCode::kInsufficientData,
                "need " + std::to_string(sample_size) + " matches, got " + std::to_string(n));
  }

  const Points2 x1 = matches.points1();
  const Points2 x2 = matches.points2();
  const double thr_sq = params.threshold * params.threshold;

  if (kind == ModelKind::kEssential) {
    // E = K2^T F K1. Projecting noisy minimal samples onto the essential
    // manifold distorts them, so hypotheses are drawn as F in pixel space.
    const Model3x3 f = ransac(matches, ModelKind::kFundamental, params);
    Model3x3 e;
    e.kind = kind;
    e.m = essential_from_fundamental(f.m, *K1, *K2).normalized();
    e.iterations = f.iterations;
    std::vector<double> res;
    compute_residuals(kind, scoring_matrix(kind, e.m, K1, K2), x1, x2, res);
    e.score = count_inliers(res, thr_sq, &e.inliers);
    if (e.score < std::min(sample_size + 1, n)) {
      throw Error(ErrorCode::kEstimationFailed,
                  "essential model keeps only " + std::to_string(e.score) + " inliers");
    }
    return e;
  }

  std::mt19937_64 rng(params.seed);
  std::vector<int> pool(static_cast<std::size_t>(n));
  std::iota(pool.begin(), pool.end(), 0);
  Points2 s1(2, sample_size);
  Points2 s2(2, sample_size);
  std::vector<double> res;

  Model3x3 best;
  best.kind = kind;
  best.score = -1;
  int degenerate = 0;
  int bound = params.max_iters;
  int iter = 0;
  while (iter < bound) {
    ++iter;
    // Partial Fisher-Yates: a uniform subset whatever the pool's current order.
    for (int k = 0; k < sample_size; ++k) {
      std::uniform_int_distribution<int> pick(k, n - 1);
      std::swap(pool[k], pool[pick(rng)]);
      s1.col(k) = x1.col(pool[k]);
      s2.col(k) = x2.col(pool[k]);
    }
    Eigen::Matrix3d hypothesis;
    try {
      hypothesis = fit_model(kind, s1, s2, K1, K2);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kDegenerateConfiguration) throw;
      ++degenerate;
      continue;
    }
    compute_residuals(kind, scoring_matrix(kind, hypothesis, K1, K2), x1, x2, res);
    const int count = count_inliers(res, thr_sq, nullptr);
    if (count <= best.score) continue;
    best.m = hypothesis;
    best.score = count;
    bound = std::min(params.max_iters,
                     adaptive_iteration_bound(static_cast<double>(best.score) / n,
                                              sample_size, params.confidence,
                                              params.max_iters));
  }
  best.iterations = iter;

  if (best.score < 0) {
    throw Error(ErrorCode::kDegenerateConfiguration,
                "every minimal sample was degenerate (" + std::to_string(degenerate) + ")");
  }
  // One inlier beyond the sample, unless the sample is all there is.
  const int required = std::min(sample_size + 1, n);
  if (best.score < required) {
    throw Error(ErrorCode::kEstimationFailed,
                "best hypothesis has only " + std::to_string(best.score) + " inliers");
  }
  Consensus final_fit =
      refit_consensus(kind, best.m, x1, x2, K1, K2, thr_sq, kRefitRounds, res);
  if (kind == ModelKind::kFundamental) {
    try {
      final_fit.m = polish_fundamental(final_fit.m, x1, x2, final_fit.inliers,
                                       params.threshold);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kDegenerateConfiguration) throw;
    }
    compute_residuals(kind, scoring_matrix(kind, final_fit.m, K1, K2), x1, x2, res);
    final_fit.count = count_inliers(res, thr_sq, &final_fit.inliers);
  }
  best.m = final_fit.m;
  best.inliers = std::move(final_fit.inliers);
  best.score = final_fit.count;
  return best;
}

std::vector<RelativePose> decompose_essential(const Eigen::Matrix3d& E) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(E, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d U = svd.matrixU();
  Eigen::Matrix3d V = svd.matrixV();
  if (U.determinant() < 0.0) U.col(2) *= -1.0;
  if (V.determinant() < 0.0) V.col(2) *= -1.0;
  Eigen::Matrix3d W;
  W << 0, -1, 0,
       1, 0, 0,
       0, 0, 1;
  const Eigen::Matrix3d Ra = U * W * V.transpose();
  const Eigen::Matrix3d Rb = U * W.transpose() * V.transpose();
  const Eigen::Vector3d t = U.col(2).normalized();
  return {{Ra, t}, {Ra, -t}, {Rb, t}, {Rb, -t}};
}

namespace {

Eigen::Vector4d triangulate_homogeneous(const RelativePose& pose, const Eigen::Vector2d& n1,
                                        const Eigen::Vector2d& n2) {
  Eigen::Matrix<double, 3, 4> P1 = Eigen::Matrix<double, 3, 4>::Zero();
  P1.leftCols<3>().setIdentity();
  Eigen::Matrix<double, 3, 4> P2;
  P2.leftCols<3>() = pose.R;
  P2.col(3) = pose.t;
  Eigen::Matrix4d A;
  A.row(0) = n1.x() * P1.row(2) - P1.row(0);
  A.row(1) = n1.y() * P1.row(2) - P1.row(1);
  A.row(2) = n2.x() * P2.row(2) - P2.row(0);
  A.row(3) = n2.y() * P2.row(2) - P2.row(1);
  Eigen::JacobiSVD<Eigen::Matrix4d> svd(A, Eigen::ComputeFullV);
  return svd.matrixV().col(3);
}

bool in_front_of_both(const RelativePose& pose, const Eigen::Vector4d& X) {
  const double w = X(3);
  const double z1 = X(2) * w;
  const double z2 = (pose.R * X.head<3>() + pose.t * w).z() * w;
  return z1 > 0.0 && z2 > 0.0;
}

}  // namespace

Eigen::Vector3d triangulate(const RelativePose& pose, const Eigen::Vector2d& n1,
                            const Eigen::Vector2d& n2) {
  const Eigen::Vector4d X = triangulate_homogeneous(pose, n1, n2);
  return X.hnormalized();
}

RelativePose pose_from_essential(const Eigen::Matrix3d& E, const CameraIntrinsics& K1,
                                 const CameraIntrinsics& K2, const MatchSet& matches,
                                 const std::vector<bool>* mask) {
  const bool use_mask = mask && mask->size() == matches.size();
  const Points2 n1 = to_normalized(matches.points1(), K1);
  const Points2 n2 = to_normalized(matches.points2(), K2);

  const std::vector<RelativePose> candidates = decompose_essential(E);
  int best = -1;
  int best_count = 0;
  for (int c = 0; c < static_cast<int>(candidates.size()); ++c) {
    int count = 0;
    for (Eigen::Index i = 0; i < n1.cols(); ++i) {
      if (use_mask && !(*mask)[i]) continue;
      if (in_front_of_both(candidates[c], triangulate_homogeneous(candidates[c], n1.col(i),
                                                                  n2.col(i)))) {
        ++count;
      }
    }
    if (count > best_count) {
      best_count = count;
      best = c;
    }
  }
  if (best < 0) {
    throw Error(ErrorCode::kEstimationFailed,
                "no decomposition places any point in front of both cameras");
  }
  return candidates[best];
}

RelativePose pose_from_fundamental(const Model3x3& F, const CameraIntrinsics& K1,
                                   const CameraIntrinsics& K2, const MatchSet& matches) {
  if (F.kind == ModelKind::kHomography) {
    throw Error(ErrorCode::kInvalidArgument, "pose recovery needs an F or E model");
  }
  if (matches.empty()) {
    throw Error(ErrorCode::kInsufficientData, "cheirality check needs matches");
  }
  const Eigen::Matrix3d E = F.kind == ModelKind::kEssential
                                ? F.m
                                : essential_from_fundamental(F.m, K1, K2);
  return pose_from_essential(E, K1, K2, matches, &F.inliers);
}

}  // namespace covis
