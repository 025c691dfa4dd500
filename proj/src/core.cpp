#include "covis/core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "covis/error.hpp"

namespace covis {

double ImageMeta::diagonal() const {
  return std::hypot(static_cast<double>(width), static_cast<double>(height));
}

Points2 MatchSet::points1() const {
  Points2 pts(2, static_cast<Eigen::Index>(items.size()));
  for (std::size_t i = 0; i < items.size(); ++i) pts.col(i) = items[i].p1;
  return pts;
}

Points2 MatchSet::points2() const {
  Points2 pts(2, static_cast<Eigen::Index>(items.size()));
  for (std::size_t i = 0; i < items.size(); ++i) pts.col(i) = items[i].p2;
  return pts;
}

void MatchSet::append(const MatchSet& other) {
  items.insert(items.end(), other.items.begin(), other.items.end());
}

MatchSet MatchSet::filtered(const std::vector<bool>& mask) const {
  if (mask.size() != items.size()) {
    throw Error(ErrorCode::kInvalidArgument, "mask length does not match");
  }
  MatchSet out{{}, image1, image2};
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (mask[i]) out.items.push_back(items[i]);
  }
  return out;
}

bool CropBox::contains(const Point2& p, double tolerance) const {
  return p.x() >= x_min - tolerance && p.x() <= x_max + tolerance &&
         p.y() >= y_min - tolerance && p.y() <= y_max + tolerance;
}

bool CropBox::contains(const CropBox& other, double tolerance) const {
  return other.x_min >= x_min - tolerance && other.y_min >= y_min - tolerance &&
         other.x_max <= x_max + tolerance && other.y_max <= y_max + tolerance;
}

CropBox CropBox::full(const ImageMeta& meta) {
  return {0.0, 0.0, static_cast<double>(meta.width),
          static_cast<double>(meta.height)};
}

CropBox clamp_to_image(const CropBox& box, const ImageMeta& meta) {
  const double w = meta.width;
  const double h = meta.height;
  return {std::clamp(box.x_min, 0.0, w), std::clamp(box.y_min, 0.0, h),
          std::clamp(box.x_max, 0.0, w), std::clamp(box.y_max, 0.0, h)};
}

CropBox snap_to_pixels(const CropBox& box, const ImageMeta& meta) {
  CropBox snapped{std::floor(box.x_min), std::floor(box.y_min),
                  std::ceil(box.x_max), std::ceil(box.y_max)};
  snapped = clamp_to_image(snapped, meta);
  // A sliver narrower than one pixel still has to yield a one-pixel crop.
  if (snapped.x_max <= snapped.x_min) {
    snapped.x_min = std::min(snapped.x_min, meta.width - 1.0);
    snapped.x_max = snapped.x_min + 1.0;
  }
  if (snapped.y_max <= snapped.y_min) {
    snapped.y_min = std::min(snapped.y_min, meta.height - 1.0);
    snapped.y_max = snapped.y_min + 1.0;
  }
  return snapped;
}

double resize_scale(double width, double height, int longest_dim) {
  if (longest_dim < 1) {
    throw Error(ErrorCode::kInvalidArgument, "longest_dim must be >= 1");
  }
  if (!(width > 0.0) || !(height > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "image extent must be positive");
  }
  return static_cast<double>(longest_dim) / std::max(width, height);
}

double resize_scale(const ImageMeta& meta, int longest_dim) {
  return resize_scale(static_cast<double>(meta.width),
                      static_cast<double>(meta.height), longest_dim);
}

std::pair<int, int> resized_size(int width, int height, double scale) {
  auto side = [scale](int n) {
    return std::max(1, static_cast<int>(std::lround(n * scale)));
  };
  return {side(width), side(height)};
}

Point2 map_stage2_to_original(const Point2& p, const CropBox& crop,
                              double scale) {
  if (!(scale > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "scale must be positive");
  }
  // The working frame is the crop itself, so any overshoot comes from the
  // rounded resize and is clamped back onto the crop edges.
  return {std::clamp(crop.x_min + p.x() / scale, crop.x_min, crop.x_max),
          std::clamp(crop.y_min + p.y() / scale, crop.y_min, crop.y_max)};
}

Point2 map_original_to_stage2(const Point2& p, const CropBox& crop,
                              double scale) {
  if (!(scale > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "scale must be positive");
  }
  return {(p.x() - crop.x_min) * scale, (p.y() - crop.y_min) * scale};
}

Point2 clamp_to_frame(const Point2& p, const ImageMeta& meta) {
  return {std::clamp(p.x(), 0.0, static_cast<double>(meta.width)),
          std::clamp(p.y(), 0.0, static_cast<double>(meta.height))};
}

void validate(const MatchSet& matches) {
  for (const auto* meta : {&matches.image1, &matches.image2}) {
    if (meta->width < 1 || meta->height < 1) {
      throw Error(ErrorCode::kInvalidArgument,
                  "image '" + meta->id + "' has non-positive extent");
    }
  }
  const CropBox frame1 = CropBox::full(matches.image1);
  const CropBox frame2 = CropBox::full(matches.image2);
  for (std::size_t i = 0; i < matches.items.size(); ++i) {
    const Correspondence& c = matches.items[i];
    const bool finite = c.p1.allFinite() && c.p2.allFinite();
    if (!finite || !frame1.contains(c.p1) || !frame2.contains(c.p2) ||
        !(c.confidence >= 0.0 && c.confidence <= 1.0)) {
      std::ostringstream os;
      os << "correspondence " << i << " (" << c.p1.transpose() << " -> "
         << c.p2.transpose() << ", conf " << c.confidence
         << ") violates frame bounds or confidence range";
      throw Error(ErrorCode::kInvalidArgument, os.str());
    }
  }
}

}  // namespace covis
