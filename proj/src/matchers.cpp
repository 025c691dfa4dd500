#include "covis/matchers.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numeric>

#include "covis/error.hpp"
#include "covis/external_matcher.hpp"

namespace covis {

void MatcherSpec::validate() const {
  if (resolution < 64) {
    throw Error(ErrorCode::kConfig, "matcher '" + name + "': resolution must be >= 64");
  }
  if (kind == Kind::kExternal && endpoint.empty() && !std::getenv("COVIS_MATCHER_PATH")) {
    throw Error(ErrorCode::kConfig, "external matcher '" + name +
                                        "' needs an endpoint or COVIS_MATCHER_PATH");
  }
}

double MatcherSpec::option(const std::string& key, double fallback) const {
  auto it = options.find(key);
  if (it == options.end()) return fallback;
  try {
    std::size_t used = 0;
    const double v = std::stod(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument(key);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::kConfig, "option '" + key + "' is not a number: " + it->second);
  }
}

void RawMatches::validate(int width1, int height1, int width2, int height2) const {
  if (pairs.size() != confidences.size()) {
    throw Error(ErrorCode::kProtocolError, "keypoint and confidence counts differ");
  }
  const CropBox f1{0, 0, double(width1), double(height1)};
  const CropBox f2{0, 0, double(width2), double(height2)};
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& [a, b] = pairs[i];
    if (!a.allFinite() || !b.allFinite() || !f1.contains(a, kBorderTolerance) ||
        !f2.contains(b, kBorderTolerance)) {
      throw Error(ErrorCode::kProtocolError,
                  "match " + std::to_string(i) + " lies outside the working frame");
    }
    if (!(confidences[i] >= 0.0 && confidences[i] <= 1.0)) {
      throw Error(ErrorCode::kProtocolError,
                  "confidence " + std::to_string(i) + " outside [0,1]");
    }
  }
}

std::pair<int, int> MatchView::working_size() const {
  return resized_size(static_cast<int>(crop.width()), static_cast<int>(crop.height()),
                      scale());
}

GrayImage MatchView::prepare() const {
  if (!image) throw Error(ErrorCode::kInvalidArgument, "view has no pixels");
  return resize(is_full_frame() ? *image : covis::crop(*image, crop), scale());
}

// --- corners -------------------------------------------------------------

namespace {

GrayImage structure_response(const GrayImage& img, double k) {
  const int w = width(img);
  const int h = height(img);
  GrayImage ixx(h, w), iyy(h, w), ixy(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const float gx = 0.5f * (img(y, std::min(x + 1, w - 1)) - img(y, std::max(x - 1, 0)));
      const float gy = 0.5f * (img(std::min(y + 1, h - 1), x) - img(std::max(y - 1, 0), x));
      ixx(y, x) = gx * gx;
      iyy(y, x) = gy * gy;
      ixy(y, x) = gx * gy;
    }
  }
  const double sigma = 1.0;
  const GrayImage sxx = gaussian_blur(ixx, sigma);
  const GrayImage syy = gaussian_blur(iyy, sigma);
  const GrayImage sxy = gaussian_blur(ixy, sigma);
  const float kf = static_cast<float>(k);
  const GrayImage trace = sxx + syy;
  return sxx * syy - sxy * sxy - kf * trace * trace;
}

double parabolic_offset(float left, float centre, float right) {
  const double denom = static_cast<double>(left) - 2.0 * centre + right;
  if (!(std::abs(denom) > 1e-20)) return 0.0;
  return std::clamp(0.5 * (static_cast<double>(left) - right) / denom, -0.5, 0.5);
}

}  // namespace

std::vector<Corner> detect_corners(const GrayImage& image, const CornerParams& params) {
  if (width(image) < 16 || height(image) < 16) {
    throw Error(ErrorCode::kInvalidArgument, "corner detection needs at least 16x16 pixels");
  }
  const GrayImage R = structure_response(image, params.harris_k);
  const int w = width(image);
  const int h = height(image);
  const int b = std::max(1, params.border);
  const float peak = R.maxCoeff();
  if (!(peak > 1e-12f)) return {};
  const float floor_value = static_cast<float>(params.relative_threshold) * peak;

  std::vector<Corner> corners;
  for (int y = b; y < h - b; ++y) {
    for (int x = b; x < w - b; ++x) {
      const float r = R(y, x);
      if (!(r > floor_value)) continue;
      // Plateaus keep their first pixel in raster order.
      bool is_max = true;
      for (int dy = -1; dy <= 1 && is_max; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          if (dx == 0 && dy == 0) continue;
          const float o = R(y + dy, x + dx);
          const bool earlier = dy < 0 || (dy == 0 && dx < 0);
          if (o > r || (earlier && o == r)) {
            is_max = false;
            break;
          }
        }
      }
      if (!is_max) continue;
      const double ox = parabolic_offset(R(y, x - 1), r, R(y, x + 1));
      const double oy = parabolic_offset(R(y - 1, x), r, R(y + 1, x));
      corners.push_back({Point2(x + ox, y + oy), r});
    }
  }
  std::stable_sort(corners.begin(), corners.end(),
                   [](const Corner& a, const Corner& b) { return a.response > b.response; });
  if (params.max_kp >= 0 && corners.size() > static_cast<std::size_t>(params.max_kp)) {
    corners.resize(static_cast<std::size_t>(params.max_kp));
  }
  return corners;
}

// --- descriptors and matching ---------------------------------------------

namespace {

struct Descriptors {
  std::vector<Eigen::VectorXf> vectors;
  std::vector<Point2> points;
};

Descriptors describe(const GrayImage& img, const std::vector<Corner>& corners, int patch) {
  const int r = patch / 2;
  Descriptors out;
  for (const Corner& c : corners) {
    if (c.pt.x() - r < 0 || c.pt.y() - r < 0 || c.pt.x() + r > width(img) - 1 ||
        c.pt.y() + r > height(img) - 1) {
      continue;
    }
    Eigen::VectorXf d(patch * patch);
    int k = 0;
    for (int dy = -r; dy <= r; ++dy) {
      for (int dx = -r; dx <= r; ++dx) {
        d(k++) = sample_bilinear(img, c.pt.x() + dx, c.pt.y() + dy, 0.0f);
      }
    }
    d.array() -= d.mean();
    const float norm = d.norm();
    if (!(norm > 1e-6f)) continue;  // flat patch, nothing to correlate
    out.vectors.push_back(d / norm);
    out.points.push_back(c.pt);
  }
  return out;
}

double ncc_distance(float score) {
  return std::sqrt(std::max(0.0, 2.0 - 2.0 * static_cast<double>(score)));
}

}  // namespace

RawMatches match_images(const GrayImage& img1, const GrayImage& img2, const MatchParams& params) {
  if (params.patch_size < 3 || params.patch_size % 2 == 0) {
    throw Error(ErrorCode::kInvalidArgument, "patch size must be odd and >= 3");
  }
  CornerParams cp = params.corners;
  cp.border = std::max(cp.border, params.patch_size / 2 + 1);
  const Descriptors d1 = describe(img1, detect_corners(img1, cp), params.patch_size);
  const Descriptors d2 = describe(img2, detect_corners(img2, cp), params.patch_size);
  const std::size_t n1 = d1.vectors.size();
  const std::size_t n2 = d2.vectors.size();
  RawMatches out;
  if (n1 == 0 || n2 == 0) return out;

  Eigen::MatrixXf score(n1, n2);
  for (std::size_t i = 0; i < n1; ++i) {
    for (std::size_t j = 0; j < n2; ++j) score(i, j) = d1.vectors[i].dot(d2.vectors[j]);
  }

  constexpr float kNone = -std::numeric_limits<float>::infinity();
  std::vector<std::size_t> row_best(n1), col_best(n2);
  std::vector<float> row_second(n1, kNone), col_second(n2, kNone);
  std::vector<float> row_top(n1, kNone), col_top(n2, kNone);
  for (std::size_t i = 0; i < n1; ++i) {
    for (std::size_t j = 0; j < n2; ++j) {
      const float s = score(i, j);
      if (s > row_top[i]) {
        row_second[i] = row_top[i];
        row_top[i] = s;
        row_best[i] = j;
      } else if (s > row_second[i]) {
        row_second[i] = s;
      }
      if (s > col_top[j]) {
        col_second[j] = col_top[j];
        col_top[j] = s;
        col_best[j] = i;
      } else if (s > col_second[j]) {
        col_second[j] = s;
      }
    }
  }

  auto passes_ratio = [&params](float top, float second) {
    if (second == kNone) return true;
    return ncc_distance(top) < params.ratio * ncc_distance(second);
  };
  for (std::size_t i = 0; i < n1; ++i) {
    const std::size_t j = row_best[i];
    if (col_best[j] != i) continue;
    if (!passes_ratio(row_top[i], row_second[i]) || !passes_ratio(col_top[j], col_second[j])) {
      continue;
    }
    out.pairs.emplace_back(d1.points[i], d2.points[j]);
    out.confidences.push_back(std::clamp(0.5 * (1.0 + row_top[i]), 0.0, 1.0));
  }
  return out;
}

std::unique_ptr<BuiltinMatcher> BuiltinMatcher::from_spec(const MatcherSpec& spec) {
  MatchParams params;
  params.corners.max_kp = static_cast<int>(spec.option("max_kp", params.corners.max_kp));
  params.corners.harris_k = spec.option("harris_k", params.corners.harris_k);
  params.patch_size = static_cast<int>(spec.option("patch_size", params.patch_size));
  params.ratio = spec.option("ratio", params.ratio);
  return std::make_unique<BuiltinMatcher>(params, spec.name);
}

RawMatches BuiltinMatcher::match(const MatchView& view1, const MatchView& view2) const {
  return match_images(view1.prepare(), view2.prepare(), params_);
}

std::shared_ptr<const Matcher> make_matcher(const MatcherSpec& spec) {
  spec.validate();
  if (spec.kind == MatcherSpec::Kind::kBuiltin) return BuiltinMatcher::from_spec(spec);
  return std::make_shared<ExternalMatcher>(spec);
}

}  // namespace covis
