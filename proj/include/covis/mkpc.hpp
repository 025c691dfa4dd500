#pragma once

#include <optional>
#include <vector>

#include "covis/core.hpp"
#include "covis/dbscan.hpp"

namespace covis {

struct MkpcParams {
  // Keep a cluster while size / largest_size >= T.
  double T = 0.05;
  // Explicit DBSCAN parameters; when empty, eps = eps_factor * diagonal of
  // each image and min_pts = auto_min_pts.
  std::optional<DbscanParams> dbscan;
  double eps_factor = 0.04;
  int auto_min_pts = 5;
  // Crop area expansion about the box centre.
  double e_h = 1.05;
  double e_v = 1.0;
  double min_box_side = 64.0;
};

void validate(const MkpcParams& params);

struct CropProposal {
  CropBox box1;
  CropBox box2;
  std::vector<int> kept_clusters1;
  std::vector<int> kept_clusters2;
  bool degenerate = false;
  ClusterLabels labels1;
  ClusterLabels labels2;
};

// Indices (into the descending size list) that survive the ratio walk.
std::vector<int> select_clusters(const std::vector<int>& sizes_desc, double T);

// Axis-aligned extremes of `points`. A side shorter than min_box_side is
// inflated symmetrically to that length and then clamped to `meta` if given.
CropBox bounding_box(const Points2& points, double min_box_side = 1.0,
                     const std::optional<ImageMeta>& meta = std::nullopt);

// Scales width by e_h and height by e_v about the centre, then clamps.
CropBox expand_box(const CropBox& box, double e_h, double e_v,
                   const ImageMeta& meta);

// Per-image DBSCAN parameters resolved from `params`.
DbscanParams dbscan_params_for(const ImageMeta& meta, const MkpcParams& params);

// Critical-region proposal for one image from its stage-one keypoints.
struct RegionProposal {
  CropBox box;
  std::vector<int> kept_clusters;
  ClusterLabels labels;
  bool degenerate = false;
};
RegionProposal propose_region(const ImageMeta& meta, const Points2& points,
                              const MkpcParams& params);

CropProposal propose_crops(const ImageMeta& meta1, const ImageMeta& meta2,
                           const Points2& x1, const Points2& x2,
                           const MkpcParams& params);

}  // namespace covis
