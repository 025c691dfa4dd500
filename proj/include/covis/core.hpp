#pragma once

#include <Eigen/Core>

#include <string>
#include <utility>
#include <vector>

namespace covis {

template <typename Scalar>
using Point2T = Eigen::Matrix<Scalar, 2, 1>;
using Point2 = Point2T<double>;

// Column-per-point storage used by the estimators and the clustering engine.
using Points2 = Eigen::Matrix<double, 2, Eigen::Dynamic>;

// Keypoint coordinates are corner-anchored: pixel (col, row) sits at (col, row),
// with no half-pixel offset.
struct ImageMeta {
  std::string id;
  int width = 1;
  int height = 1;

  double diagonal() const;
};

enum class Stage { kOne = 1, kTwo = 2 };

struct Correspondence {
  Point2 p1 = Point2::Zero();
  Point2 p2 = Point2::Zero();
  double confidence = 1.0;
  std::string source;
  Stage stage = Stage::kOne;
};

struct MatchSet {
  std::vector<Correspondence> items;
  ImageMeta image1;
  ImageMeta image2;

  std::size_t size() const { return items.size(); }
  bool empty() const { return items.empty(); }

  Points2 points1() const;
  Points2 points2() const;

  // Appends every item of `other`; image metadata of `*this` is kept.
  void append(const MatchSet& other);

  // Returns the subset selected by `mask` (same length as items).
  MatchSet filtered(const std::vector<bool>& mask) const;
};

struct CropBox {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 1.0;
  double y_max = 1.0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double area() const { return width() * height(); }
  bool valid() const { return x_min < x_max && y_min < y_max; }
  bool contains(const Point2& p, double tolerance = 0.0) const;
  bool contains(const CropBox& other, double tolerance = 0.0) const;

  static CropBox full(const ImageMeta& meta);

  friend bool operator==(const CropBox&, const CropBox&) = default;
};

// Box intersected with the image frame [0,w]x[0,h].
CropBox clamp_to_image(const CropBox& box, const ImageMeta& meta);

// Outward snap to whole pixels, then clamped. Used before array slicing.
CropBox snap_to_pixels(const CropBox& box, const ImageMeta& meta);

// Scale that brings the longest side of `meta` to `longest_dim`.
double resize_scale(const ImageMeta& meta, int longest_dim);
double resize_scale(double width, double height, int longest_dim);

// Side lengths after resizing with `scale`; rounded to nearest, minimum 1.
std::pair<int, int> resized_size(int width, int height, double scale);

// Crop-resized working frame -> original frame.
Point2 map_stage2_to_original(const Point2& p, const CropBox& crop, double scale);

// Original frame -> crop-resized working frame. Inverse of the above, no clamp.
Point2 map_original_to_stage2(const Point2& p, const CropBox& crop, double scale);

// Points up to this far outside the frame are clamped onto it by the mapping;
// anything farther is rejected by validate().
inline constexpr double kBorderTolerance = 0.5;

Point2 clamp_to_frame(const Point2& p, const ImageMeta& meta);

// Throws kInvalidArgument when a correspondence violates its invariants.
void validate(const MatchSet& matches);

}  // namespace covis
