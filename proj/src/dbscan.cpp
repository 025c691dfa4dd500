#include "covis/dbscan.hpp"

#include <cmath>
#include <cstdint>
#include <deque>
#include <unordered_map>

#include "covis/error.hpp"

namespace covis {
namespace {

class UniformGrid {
 public:
  UniformGrid(const Points2& points, double cell)
      : points_(points), inv_cell_(1.0 / cell) {
    cells_.reserve(static_cast<std::size_t>(points.cols()));
    for (Eigen::Index i = 0; i < points.cols(); ++i) {
      cells_[key(cell_of(points(0, i)), cell_of(points(1, i)))].push_back(
          static_cast<int>(i));
    }
  }

  // Indices within the closed eps-ball of point i (including i).
  void neighbours(int i, double eps_sq, std::vector<int>& out) const {
    out.clear();
    const Point2 p = points_.col(i);
    const std::int64_t cx = cell_of(p.x());
    const std::int64_t cy = cell_of(p.y());
    for (std::int64_t dy = -1; dy <= 1; ++dy) {
      for (std::int64_t dx = -1; dx <= 1; ++dx) {
        auto it = cells_.find(key(cx + dx, cy + dy));
        if (it == cells_.end()) continue;
        for (int j : it->second) {
          if ((points_.col(j) - p).squaredNorm() <= eps_sq) out.push_back(j);
        }
      }
    }
  }

 private:
  std::int64_t cell_of(double v) const {
    return static_cast<std::int64_t>(std::floor(v * inv_cell_));
  }
  // Exact packing; the caller guarantees cell indices fit in 32 bits.
  static std::uint64_t key(std::int64_t cx, std::int64_t cy) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(cx)) << 32) |
           static_cast<std::uint32_t>(cy);
  }

  const Points2& points_;
  double inv_cell_;
  std::unordered_map<std::uint64_t, std::vector<int>> cells_;
};

constexpr int kUnvisited = -2;

}  // namespace

std::vector<int> ClusterLabels::sizes() const {
  std::vector<int> out(static_cast<std::size_t>(num_clusters), 0);
  for (int l : labels) {
    if (l >= 0) ++out[static_cast<std::size_t>(l)];
  }
  return out;
}

ClusterLabels dbscan(const Points2& points, const DbscanParams& params) {
  if (points.cols() == 0) {
    throw Error(ErrorCode::kInvalidArgument, "dbscan needs at least one point");
  }
  if (!(params.eps > 0.0) || params.min_pts < 1) {
    throw Error(ErrorCode::kInvalidArgument,
                "dbscan requires eps > 0 and min_pts >= 1");
  }
  if (!points.allFinite()) {
    throw Error(ErrorCode::kInvalidArgument, "dbscan input must be finite");
  }

  const double reach = points.cwiseAbs().maxCoeff() / params.eps;
  if (reach > 1e9) {
    throw Error(ErrorCode::kInvalidArgument,
                "eps too small for the coordinate range");
  }

  const int n = static_cast<int>(points.cols());
  const double eps_sq = params.eps * params.eps;
  const UniformGrid grid(points, params.eps);

  ClusterLabels result;
  result.labels.assign(static_cast<std::size_t>(n), kUnvisited);
  std::vector<int> hood;
  std::vector<int> inner;
  std::deque<int> frontier;

  for (int i = 0; i < n; ++i) {
    if (result.labels[i] != kUnvisited) continue;
    grid.neighbours(i, eps_sq, hood);
    if (static_cast<int>(hood.size()) < params.min_pts) {
      result.labels[i] = kNoise;  // may still be claimed as a border point
      continue;
    }
    const int cluster = result.num_clusters++;
    result.labels[i] = cluster;
    frontier.assign(hood.begin(), hood.end());
    while (!frontier.empty()) {
      const int j = frontier.front();
      frontier.pop_front();
      int& label = result.labels[j];
      if (label == kNoise) label = cluster;
      if (label != kUnvisited) continue;
      label = cluster;
      grid.neighbours(j, eps_sq, inner);
      if (static_cast<int>(inner.size()) >= params.min_pts) {
        frontier.insert(frontier.end(), inner.begin(), inner.end());
      }
    }
  }
  return result;
}

double default_eps(const ImageMeta& meta, double factor) {
  if (!(factor > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "eps factor must be positive");
  }
  return factor * meta.diagonal();
}

}  // namespace covis
