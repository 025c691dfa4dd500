#include "covis/overlay.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>

#include "covis/error.hpp"

namespace covis {

namespace {

using Color = std::array<std::uint8_t, 3>;

constexpr Color kStage1{0, 150, 255};
constexpr Color kStage2{255, 140, 0};
constexpr Color kOutlier{230, 30, 30};
constexpr Color kBox{255, 230, 0};

Color stage_color(Stage s) { return s == Stage::kOne ? kStage1 : kStage2; }

void put(RgbImage& img, int x, int y, const Color& c) {
  if (x >= 0 && y >= 0 && x < img.width && y < img.height) img.set(x, y, c);
}

// Darkened copy so colored marks stand out.
RgbImage backdrop(const GrayImage& image) {
  RgbImage out = to_rgb(image);
  for (auto& v : out.data) v = static_cast<std::uint8_t>(v * 3 / 4);
  return out;
}

void square(RgbImage& img, const Point2& p, int x_off, bool filled, const Color& c) {
  const int cx = static_cast<int>(std::lround(p.x())) + x_off;
  const int cy = static_cast<int>(std::lround(p.y()));
  for (int dy = -2; dy <= 2; ++dy) {
    for (int dx = -2; dx <= 2; ++dx) {
      if (filled || std::abs(dx) == 2 || std::abs(dy) == 2) put(img, cx + dx, cy + dy, c);
    }
  }
}

void line(RgbImage& img, int x0, int y0, int x1, int y1, const Color& c) {
  const int dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
  const int dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  for (;;) {
    put(img, x0, y0, c);
    if (x0 == x1 && y0 == y1) break;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

void rectangle(RgbImage& img, const CropBox& b, int x_off) {
  const int x0 = static_cast<int>(std::floor(b.x_min)) + x_off;
  const int y0 = static_cast<int>(std::floor(b.y_min));
  const int x1 = static_cast<int>(std::ceil(b.x_max)) - 1 + x_off;
  const int y1 = static_cast<int>(std::ceil(b.y_max)) - 1;
  for (int k = 0; k < 2; ++k) {
    line(img, x0 + k, y0 + k, x1 - k, y0 + k, kBox);
    line(img, x0 + k, y1 - k, x1 - k, y1 - k, kBox);
    line(img, x0 + k, y0 + k, x0 + k, y1 - k, kBox);
    line(img, x1 - k, y0 + k, x1 - k, y1 - k, kBox);
  }
}

void check_mask(const MatchSet& matches, const std::vector<bool>* inliers) {
  if (inliers && inliers->size() != matches.size()) {
    throw Error(ErrorCode::kInvalidArgument, "inlier mask length does not match the match set");
  }
}

}  // namespace

RgbImage render_overlay(const GrayImage& image, const MatchSet& matches, Side side,
                        const std::optional<CropBox>& box, const std::vector<bool>* inliers) {
  check_mask(matches, inliers);
  RgbImage out = backdrop(image);
  if (box) rectangle(out, *box, 0);
  for (std::size_t i = 0; i < matches.size(); ++i) {
    const Correspondence& c = matches.items[i];
    const bool inlier = !inliers || (*inliers)[i];
    square(out, side == Side::kFirst ? c.p1 : c.p2, 0, inlier, stage_color(c.stage));
  }
  return out;
}

RgbImage render_pair_overlay(const GrayImage& image1, const GrayImage& image2,
                             const MatchSet& matches, const std::optional<CropProposal>& proposal,
                             const std::vector<bool>* inliers) {
  check_mask(matches, inliers);
  const RgbImage a = backdrop(image1);
  const RgbImage b = backdrop(image2);
  RgbImage out(a.width + b.width, std::max(a.height, b.height));
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      const RgbImage& src = x < a.width ? a : b;
      const int sx = x < a.width ? x : x - a.width;
      if (y >= src.height) continue;
      const std::size_t k = (std::size_t(y) * src.width + sx) * 3;
      out.set(x, y, {src.data[k], src.data[k + 1], src.data[k + 2]});
    }
  }
  if (proposal) {
    rectangle(out, proposal->box1, 0);
    rectangle(out, proposal->box2, a.width);
  }
  // Outliers first so inlier lines stay visible on top.
  for (int pass = 0; pass < 2; ++pass) {
    for (std::size_t i = 0; i < matches.size(); ++i) {
      const bool inlier = !inliers || (*inliers)[i];
      if (inlier != (pass == 1)) continue;
      const Correspondence& c = matches.items[i];
      const Color color = inlier ? stage_color(c.stage) : kOutlier;
      line(out, static_cast<int>(std::lround(c.p1.x())), static_cast<int>(std::lround(c.p1.y())),
           static_cast<int>(std::lround(c.p2.x())) + a.width,
           static_cast<int>(std::lround(c.p2.y())), color);
    }
  }
  return out;
}

}  // namespace covis
