#include "covis/mkpc.hpp"

#include <algorithm>
#include <numeric>

#include "covis/error.hpp"

namespace covis {

void validate(const MkpcParams& params) {
  if (!(params.T > 0.0 && params.T <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "T must lie in (0, 1]");
  }
  if (!(params.e_h >= 1.0) || !(params.e_v >= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "expand factors must be >= 1");
  }
  if (!(params.min_box_side >= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "min_box_side must be >= 1");
  }
  if (!params.dbscan && (!(params.eps_factor > 0.0) || params.auto_min_pts < 1)) {
    throw Error(ErrorCode::kInvalidArgument, "invalid automatic DBSCAN settings");
  }
}

std::vector<int> select_clusters(const std::vector<int>& sizes_desc, double T) {
  if (sizes_desc.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "no clusters to select from");
  }
  const double largest = sizes_desc.front();
  std::vector<int> kept{0};
  for (std::size_t i = 1; i < sizes_desc.size(); ++i) {
    const double ratio = sizes_desc[i] / largest;
    if (!(ratio >= T)) break;  // sizes are descending: nothing later passes
    kept.push_back(static_cast<int>(i));
  }
  return kept;
}

CropBox bounding_box(const Points2& points, double min_box_side,
                     const std::optional<ImageMeta>& meta) {
  if (points.cols() == 0) {
    throw Error(ErrorCode::kInvalidArgument, "bounding box of no points");
  }
  const Point2 lo = points.rowwise().minCoeff();
  const Point2 hi = points.rowwise().maxCoeff();
  CropBox box{lo.x(), lo.y(), hi.x(), hi.y()};

  auto inflate = [min_box_side](double& a, double& b) {
    if (b - a >= min_box_side) return;
    const double centre = 0.5 * (a + b);
    a = centre - 0.5 * min_box_side;
    b = centre + 0.5 * min_box_side;
  };
  inflate(box.x_min, box.x_max);
  inflate(box.y_min, box.y_max);
  return meta ? clamp_to_image(box, *meta) : box;
}

CropBox expand_box(const CropBox& box, double e_h, double e_v,
                   const ImageMeta& meta) {
  const double cx = 0.5 * (box.x_min + box.x_max);
  const double cy = 0.5 * (box.y_min + box.y_max);
  const double half_w = 0.5 * box.width() * e_h;
  const double half_h = 0.5 * box.height() * e_v;
  return clamp_to_image({cx - half_w, cy - half_h, cx + half_w, cy + half_h},
                        meta);
}

DbscanParams dbscan_params_for(const ImageMeta& meta, const MkpcParams& params) {
  if (params.dbscan) return *params.dbscan;
  return {default_eps(meta, params.eps_factor), params.auto_min_pts};
}

RegionProposal propose_region(const ImageMeta& meta, const Points2& points,
                              const MkpcParams& params) {
  RegionProposal out;
  out.labels = dbscan(points, dbscan_params_for(meta, params));
  if (out.labels.num_clusters == 0) {
    out.box = CropBox::full(meta);
    out.degenerate = true;
    return out;
  }

  // Descending by size, ties by lower cluster id.
  const std::vector<int> sizes = out.labels.sizes();
  std::vector<int> order(sizes.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return sizes[a] > sizes[b]; });
  std::vector<int> sizes_desc;
  sizes_desc.reserve(order.size());
  for (int id : order) sizes_desc.push_back(sizes[id]);

  std::vector<bool> keep(sizes.size(), false);
  for (int rank : select_clusters(sizes_desc, params.T)) {
    out.kept_clusters.push_back(order[rank]);
    keep[order[rank]] = true;
  }

  std::vector<Eigen::Index> members;
  for (std::size_t i = 0; i < out.labels.labels.size(); ++i) {
    const int l = out.labels.labels[i];
    if (l >= 0 && keep[l]) members.push_back(static_cast<Eigen::Index>(i));
  }
  const Points2 kept_points = points(Eigen::all, members);
  if ((kept_points.rowwise().maxCoeff() - kept_points.rowwise().minCoeff())
          .isZero(0.0)) {
    // A single location carries no extent to crop around.
    out.box = CropBox::full(meta);
    out.degenerate = true;
    return out;
  }
  const CropBox box = bounding_box(kept_points, params.min_box_side, meta);
  out.box = expand_box(box, params.e_h, params.e_v, meta);
  if (!out.box.valid()) {
    // Only reachable when the image is thinner than a pixel along an axis.
    out.box = CropBox::full(meta);
    out.degenerate = true;
  }
  return out;
}

CropProposal propose_crops(const ImageMeta& meta1, const ImageMeta& meta2,
                           const Points2& x1, const Points2& x2,
                           const MkpcParams& params) {
  if (x1.cols() != x2.cols()) {
    throw Error(ErrorCode::kInvalidArgument,
                "keypoint lists of the two images differ in length");
  }
  if (x1.cols() == 0) {
    throw Error(ErrorCode::kInvalidArgument, "no stage-one keypoints");
  }
  validate(params);

  RegionProposal r1 = propose_region(meta1, x1, params);
  RegionProposal r2 = propose_region(meta2, x2, params);
  CropProposal out;
  out.box1 = r1.box;
  out.box2 = r2.box;
  out.kept_clusters1 = std::move(r1.kept_clusters);
  out.kept_clusters2 = std::move(r2.kept_clusters);
  out.labels1 = std::move(r1.labels);
  out.labels2 = std::move(r2.labels);
  out.degenerate = r1.degenerate || r2.degenerate;
  return out;
}

}  // namespace covis
