#pragma once

#include <vector>

#include "covis/core.hpp"

namespace covis {

struct DbscanParams {
  double eps = 1.0;  // pixels, closed ball
  int min_pts = 5;   // neighbours including the point itself
};

inline constexpr int kNoise = -1;

struct ClusterLabels {
  std::vector<int> labels;  // kNoise or a cluster id in [0, num_clusters)
  int num_clusters = 0;

  // Point count per cluster id.
  std::vector<int> sizes() const;
};

// Density clustering with a uniform grid (cell side = eps) for neighbourhood
// queries. Points are scanned in ascending index order; a border point that
// touches several clusters goes to the first cluster whose expansion reaches
// it, i.e. the cluster discovered earliest.
ClusterLabels dbscan(const Points2& points, const DbscanParams& params);

// Scale-relative radius: factor * image diagonal.
double default_eps(const ImageMeta& meta, double factor = 0.04);

}  // namespace covis
