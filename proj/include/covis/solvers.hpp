#pragma once

// Linear two-view solvers, templated on the scalar type. All take points as
// 2xN column matrices in pixel coordinates.

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <Eigen/SVD>

#include <cmath>
#include <limits>

#include "covis/error.hpp"

namespace covis {

template <typename Scalar>
using Matrix3T = Eigen::Matrix<Scalar, 3, 3>;
template <typename Scalar>
using Points2T = Eigen::Matrix<Scalar, 2, Eigen::Dynamic>;

template <typename Scalar>
struct NormalizedPoints {
  Points2T<Scalar> points;
  Matrix3T<Scalar> transform;  // maps homogeneous input to `points`
};

// Hartley preconditioning: centroid to the origin, mean radius sqrt(2).
template <typename Derived>
NormalizedPoints<typename Derived::Scalar> normalize_points(
    const Eigen::MatrixBase<Derived>& pts) {
  using Scalar = typename Derived::Scalar;
  static_assert(Derived::RowsAtCompileTime == 2, "expects 2xN points");
  if (pts.cols() == 0) {
    throw Error(ErrorCode::kInsufficientData, "no points to normalize");
  }
  const Eigen::Matrix<Scalar, 2, 1> centroid = pts.rowwise().mean();
  const Points2T<Scalar> centred = pts.colwise() - centroid;
  const Scalar mean_radius = centred.colwise().norm().mean();
  if (!(mean_radius > Scalar(0))) {
    throw Error(ErrorCode::kDegenerateConfiguration, "all points coincide");
  }
  const Scalar s = std::sqrt(Scalar(2)) / mean_radius;
  NormalizedPoints<Scalar> out;
  out.points = s * centred;
  out.transform << s, 0, -s * centroid.x(),
                   0, s, -s * centroid.y(),
                   0, 0, 1;
  return out;
}

namespace detail {

// Relative singular-value floor below which a design matrix is treated as
// having lost rank.
template <typename Scalar>
Scalar rank_tolerance() {
  return std::sqrt(std::numeric_limits<Scalar>::epsilon()) * Scalar(0.01);
}

// Null vector of an Nx9 design matrix. Rows are zero-padded to 9 so that the
// full right singular basis is available for minimal samples.
template <typename Scalar>
Eigen::Matrix<Scalar, 9, 1> null_vector(
    const Eigen::Matrix<Scalar, Eigen::Dynamic, 9>& A, const char* what) {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 9> padded = A;
  if (padded.rows() < 9) {
    const Eigen::Index old_rows = padded.rows();
    padded.conservativeResize(9, Eigen::NoChange);
    padded.bottomRows(9 - old_rows).setZero();
  }
  Eigen::JacobiSVD<Eigen::Matrix<Scalar, Eigen::Dynamic, 9>> svd(
      padded, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (!(sv(7) > rank_tolerance<Scalar>() * sv(0))) {
    throw Error(ErrorCode::kDegenerateConfiguration,
                std::string(what) + ": design matrix is rank deficient");
  }
  return svd.matrixV().col(8);
}

template <typename Scalar>
Matrix3T<Scalar> reshape_row_major(const Eigen::Matrix<Scalar, 9, 1>& v) {
  Matrix3T<Scalar> m;
  m << v(0), v(1), v(2), v(3), v(4), v(5), v(6), v(7), v(8);
  return m;
}

}  // namespace detail

// Closest rank-2 matrix in Frobenius norm.
template <typename Scalar>
Matrix3T<Scalar> project_rank2(const Matrix3T<Scalar>& m) {
  Eigen::JacobiSVD<Matrix3T<Scalar>> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix<Scalar, 3, 1> s = svd.singularValues();
  s(2) = Scalar(0);
  return svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
}

// Closest matrix with singular values (s, s, 0); scale-free, so (1, 1, 0).
template <typename Scalar>
Matrix3T<Scalar> project_essential(const Matrix3T<Scalar>& m) {
  Eigen::JacobiSVD<Matrix3T<Scalar>> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Matrix<Scalar, 3, 1> s(1, 1, 0);
  return svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
}

// Normalized eight-point estimate of F with x2^T F x1 = 0, rank 2 and unit
// Frobenius norm. Row i of the design matrix is scaled by weights(i).
template <typename Scalar>
Matrix3T<Scalar> eight_point_weighted(const Points2T<Scalar>& x1, const Points2T<Scalar>& x2,
                                      const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& weights) {
  if (x1.cols() != x2.cols() || weights.size() != x1.cols()) {
    throw Error(ErrorCode::kInvalidArgument, "point lists differ in length");
  }
  if (x1.cols() < 8) {
    throw Error(ErrorCode::kInsufficientData,
                "eight-point needs at least 8 correspondences");
  }
  const auto n1 = normalize_points(x1);
  const auto n2 = normalize_points(x2);
  Eigen::Matrix<Scalar, Eigen::Dynamic, 9> A(x1.cols(), 9);
  for (Eigen::Index i = 0; i < x1.cols(); ++i) {
    const Scalar u1 = n1.points(0, i), v1 = n1.points(1, i);
    const Scalar u2 = n2.points(0, i), v2 = n2.points(1, i);
    A.row(i) << u2 * u1, u2 * v1, u2, v2 * u1, v2 * v1, v2, u1, v1, 1;
    A.row(i) *= weights(i);
  }
  const Matrix3T<Scalar> F_norm = project_rank2<Scalar>(
      detail::reshape_row_major<Scalar>(detail::null_vector<Scalar>(A, "eight-point")));
  Matrix3T<Scalar> F = n2.transform.transpose() * F_norm * n1.transform;
  F = project_rank2<Scalar>(F / F.norm());
  return F / F.norm();
}

template <typename Scalar>
Matrix3T<Scalar> eight_point(const Points2T<Scalar>& x1,
                             const Points2T<Scalar>& x2) {
  return eight_point_weighted<Scalar>(
      x1, x2, Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Ones(x1.cols()));
}

template <typename Scalar>
Matrix3T<Scalar> normalize_homography(const Matrix3T<Scalar>& H) {
  Matrix3T<Scalar> out = H / H.norm();
  Eigen::Index r = 2, c = 2;
  if (!(std::abs(out(2, 2)) > Scalar(1e-8))) out.cwiseAbs().maxCoeff(&r, &c);
  if (out(r, c) < Scalar(0)) out = -out;
  return out;
}

// True when three 2-D points are collinear up to a relative tolerance.
template <typename Scalar>
bool collinear(const Eigen::Matrix<Scalar, 2, 1>& a, const Eigen::Matrix<Scalar, 2, 1>& b,
               const Eigen::Matrix<Scalar, 2, 1>& c) {
  const Eigen::Matrix<Scalar, 2, 1> u = b - a;
  const Eigen::Matrix<Scalar, 2, 1> v = c - a;
  const Scalar cross = u.x() * v.y() - u.y() * v.x();
  const Scalar scale = std::max(u.squaredNorm(), v.squaredNorm());
  return !(std::abs(cross) > detail::rank_tolerance<Scalar>() * scale);
}

// Normalized DLT for x2 ~ H x1. Unit Frobenius norm, positive H(2,2).
template <typename Scalar>
Matrix3T<Scalar> homography_dlt(const Points2T<Scalar>& x1,
                                const Points2T<Scalar>& x2) {
  if (x1.cols() != x2.cols()) {
    throw Error(ErrorCode::kInvalidArgument, "point lists differ in length");
  }
  if (x1.cols() < 4) {
    throw Error(ErrorCode::kInsufficientData, "DLT needs at least 4 correspondences");
  }
  if (x1.cols() == 4) {
    for (const auto* pts : {&x1, &x2}) {
      for (int skip = 0; skip < 4; ++skip) {
        int idx[3], k = 0;
        for (int i = 0; i < 4; ++i) {
          if (i != skip) idx[k++] = i;
        }
        if (collinear<Scalar>(pts->col(idx[0]), pts->col(idx[1]), pts->col(idx[2]))) {
          throw Error(ErrorCode::kDegenerateConfiguration,
                      "three points of the minimal sample are collinear");
        }
      }
    }
  }
  const auto n1 = normalize_points(x1);
  const auto n2 = normalize_points(x2);
  Eigen::Matrix<Scalar, Eigen::Dynamic, 9> A(2 * x1.cols(), 9);
  for (Eigen::Index i = 0; i < x1.cols(); ++i) {
    const Scalar u1 = n1.points(0, i), v1 = n1.points(1, i);
    const Scalar u2 = n2.points(0, i), v2 = n2.points(1, i);
    A.row(2 * i) << 0, 0, 0, -u1, -v1, -1, v2 * u1, v2 * v1, v2;
    A.row(2 * i + 1) << u1, v1, 1, 0, 0, 0, -u2 * u1, -u2 * v1, -u2;
  }
  const Matrix3T<Scalar> H_norm =
      detail::reshape_row_major<Scalar>(detail::null_vector<Scalar>(A, "homography DLT"));
  const Matrix3T<Scalar> H = n2.transform.inverse() * H_norm * n1.transform;
  return normalize_homography<Scalar>(H);
}

// Sampson approximation of the squared geometric epipolar error. Infinite
// when both epipolar line gradients vanish.
template <typename Scalar>
Scalar sampson_distance(const Matrix3T<Scalar>& F, const Eigen::Matrix<Scalar, 2, 1>& p1,
                        const Eigen::Matrix<Scalar, 2, 1>& p2) {
  const Eigen::Matrix<Scalar, 3, 1> x1 = p1.homogeneous();
  const Eigen::Matrix<Scalar, 3, 1> x2 = p2.homogeneous();
  const Eigen::Matrix<Scalar, 3, 1> Fx1 = F * x1;
  const Eigen::Matrix<Scalar, 3, 1> Ftx2 = F.transpose() * x2;
  const Scalar numerator = x2.dot(Fx1);
  const Scalar denominator = Fx1.template head<2>().squaredNorm() +
                             Ftx2.template head<2>().squaredNorm();
  if (!(denominator > Scalar(0))) return std::numeric_limits<Scalar>::infinity();
  return numerator * numerator / denominator;
}

// Squared forward plus backward transfer distance under H.
template <typename Scalar>
Scalar symmetric_transfer_error(const Matrix3T<Scalar>& H, const Matrix3T<Scalar>& H_inv,
                                const Eigen::Matrix<Scalar, 2, 1>& p1,
                                const Eigen::Matrix<Scalar, 2, 1>& p2) {
  const Eigen::Matrix<Scalar, 3, 1> fwd = H * p1.homogeneous();
  const Eigen::Matrix<Scalar, 3, 1> bwd = H_inv * p2.homogeneous();
  const Scalar tiny = std::numeric_limits<Scalar>::min();
  if (!(std::abs(fwd.z()) > tiny) || !(std::abs(bwd.z()) > tiny)) {
    return std::numeric_limits<Scalar>::infinity();
  }
  return (p2 - fwd.hnormalized()).squaredNorm() + (p1 - bwd.hnormalized()).squaredNorm();
}

template <typename Scalar>
Matrix3T<Scalar> skew(const Eigen::Matrix<Scalar, 3, 1>& v) {
  Matrix3T<Scalar> m;
  m << 0, -v.z(), v.y(),
       v.z(), 0, -v.x(),
       -v.y(), v.x(), 0;
  return m;
}

}  // namespace covis
