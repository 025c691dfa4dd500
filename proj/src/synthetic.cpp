#include "covis/synthetic.hpp"

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <algorithm>
#include <array>
#include <cstring>
#include <limits>
#include <cmath>
#include <numbers>
#include <random>

#include "covis/error.hpp"

namespace covis {

void SceneSpec::validate() const {
  if (n_inliers < 0) throw Error(ErrorCode::kInvalidArgument, "n_inliers must be >= 0");
  if (!(noise_sigma >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "noise_sigma must be >= 0");
  if (!(outlier_rate >= 0.0 && outlier_rate < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "outlier_rate must lie in [0, 1)");
  }
  if (!(depth_range.first > 0.0) || !(depth_range.second >= depth_range.first)) {
    throw Error(ErrorCode::kInvalidArgument, "depth range must be positive and ordered");
  }
  if (!covis_box1.valid() || !covis_box2.valid()) {
    throw Error(ErrorCode::kInvalidArgument, "co-visible boxes must be non-empty");
  }
  if (!(baseline > 0.0)) throw Error(ErrorCode::kInvalidArgument, "baseline must be positive");
}

int SceneSpec::outlier_count() const {
  const double exact = outlier_rate * n_inliers / (1.0 - outlier_rate);
  return static_cast<int>(std::ceil(exact - 1e-9));
}

Eigen::Matrix3d axis_angle(const Eigen::Vector3d& axis, double degrees) {
  return Eigen::AngleAxisd(degrees * std::numbers::pi / 180.0, axis.normalized())
      .toRotationMatrix();
}

namespace {

using Rng = std::mt19937_64;

double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

Point2 uniform_in(Rng& rng, const CropBox& box) {
  return {uniform(rng, box.x_min, box.x_max), uniform(rng, box.y_min, box.y_max)};
}

// Bounded 2-D Gaussian: norm never exceeds 3 sigma.
Point2 truncated_noise(Rng& rng, double sigma) {
  if (sigma <= 0.0) return Point2::Zero();
  std::normal_distribution<double> n(0.0, sigma);
  for (;;) {
    const Point2 d(n(rng), n(rng));
    if (d.norm() <= 3.0 * sigma) return d;
  }
}

struct Sampled {
  std::vector<Correspondence> inliers;
  std::vector<Correspondence> outliers;
};

// Inliers inside region1/region2, outliers uniform over out1/out2.
Sampled sample_world(const SceneSpec& w, const CropBox& region1, const CropBox& region2,
                     int n_inliers, const CropBox& out1, const CropBox& out2, int n_outliers,
                     Rng& rng, const std::string& source) {
  const Eigen::Matrix3d K = w.intrinsics.K();
  const Eigen::Matrix3d K_inv = K.inverse();
  const Eigen::Vector3d t = w.baseline * w.pose.t.normalized();
  Sampled out;
  out.inliers.reserve(static_cast<std::size_t>(std::max(0, n_inliers)));
  int failures = 0;
  while (static_cast<int>(out.inliers.size()) < n_inliers) {
    if (failures >= 100000) {
      throw Error(ErrorCode::kInfeasibleScene,
                  "co-visible boxes are inconsistent with the camera motion");
    }
    const Point2 p1 = uniform_in(rng, region1);
    const double depth = uniform(rng, w.depth_range.first, w.depth_range.second);
    const Eigen::Vector3d X1 = depth * (K_inv * p1.homogeneous());
    const Eigen::Vector3d X2 = w.pose.R * X1 + t;
    if (!(X2.z() > 0.0)) {
      ++failures;
      continue;
    }
    const Point2 p2_clean = (K * X2).hnormalized();
    if (!region2.contains(p2_clean)) {
      ++failures;
      continue;
    }
    Point2 p2 = p2_clean;
    bool placed = false;
    for (int attempt = 0; attempt < 100 && !placed; ++attempt) {
      p2 = p2_clean + truncated_noise(rng, w.noise_sigma);
      placed = region2.contains(p2);
    }
    if (!placed) {
      ++failures;
      continue;
    }
    failures = 0;
    out.inliers.push_back({p1, p2, 1.0, source, Stage::kOne});
  }
  for (int i = 0; i < n_outliers; ++i) {
    const Point2 p1 = uniform_in(rng, out1);
    const Point2 p2 = uniform_in(rng, out2);
    out.outliers.push_back({p1, p2, 1.0, source, Stage::kOne});
  }
  return out;
}

CropBox intersect(const CropBox& a, const CropBox& b) {
  return {std::max(a.x_min, b.x_min), std::max(a.y_min, b.y_min), std::min(a.x_max, b.x_max),
          std::min(a.y_max, b.y_max)};
}

std::uint64_t mix(std::uint64_t h, double v) {
  std::uint64_t bits = 0;
  static_assert(sizeof(bits) == sizeof(v));
  std::memcpy(&bits, &v, sizeof(v));
  h ^= bits + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2);
  return h;
}

}  // namespace

SyntheticScene generate_epipolar_scene(const SceneSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  const Sampled s = sample_world(spec, clamp_to_image(spec.covis_box1, spec.image1),
                                 clamp_to_image(spec.covis_box2, spec.image2), spec.n_inliers,
                                 CropBox::full(spec.image1), CropBox::full(spec.image2),
                                 spec.outlier_count(), rng, "synthetic");
  SyntheticScene scene;
  scene.matches.image1 = spec.image1;
  scene.matches.image2 = spec.image2;
  scene.matches.items = s.inliers;
  scene.matches.items.insert(scene.matches.items.end(), s.outliers.begin(), s.outliers.end());
  scene.inlier_mask.assign(s.inliers.size(), true);
  scene.inlier_mask.resize(scene.matches.items.size(), false);
  scene.pose_gt = {spec.pose.R, spec.pose.t.normalized()};
  scene.t_metric = spec.baseline * scene.pose_gt.t;
  scene.K1 = spec.intrinsics;
  scene.K2 = spec.intrinsics;
  return scene;
}

SceneSpec banded_scene(double band, int n_inliers, double noise_sigma, double outlier_rate,
                       std::uint64_t seed) {
  if (!(band > 0.0 && band <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "band must lie in (0, 1]");
  }
  SceneSpec spec;
  spec.n_inliers = n_inliers;
  spec.noise_sigma = noise_sigma;
  spec.outlier_rate = outlier_rate;
  spec.seed = seed;
  const double w = spec.image1.width;
  const double h = spec.image1.height;
  const double f = spec.intrinsics.fx;
  const double cx = spec.intrinsics.cx;
  spec.covis_box1 = {0.0, 0.0, band * w, h};
  spec.covis_box2 = {(1.0 - band) * w, 0.0, w, h};
  // Pan so that the left band of view 1 lands on the right band of view 2.
  const double pan = std::atan(((1.0 - band) * w - cx) / f) - std::atan(-cx / f);
  spec.pose.R = axis_angle(Eigen::Vector3d::UnitY(), pan * 180.0 / std::numbers::pi);
  spec.pose.t = Eigen::Vector3d(-0.3, 0.05, 0.4).normalized();
  spec.baseline = 1.0;
  return spec;
}

RawMatches SceneMatcher::match(const MatchView& view1, const MatchView& view2) const {
  std::uint64_t seed = world_.seed;
  for (double v : {view1.crop.x_min, view1.crop.y_min, view1.crop.x_max, view1.crop.y_max,
                   view2.crop.x_min, view2.crop.y_min, view2.crop.x_max, view2.crop.y_max,
                   static_cast<double>(view1.longest_dim)}) {
    seed = mix(seed, v);
  }
  Rng rng(seed);

  const CropBox region1 = intersect(world_.covis_box1, view1.crop);
  const CropBox region2 = intersect(world_.covis_box2, view2.crop);
  const double frame_area = CropBox::full(world_.image1).area();
  const int outliers = static_cast<int>(
      std::lround(world_.outlier_count() * view1.crop.area() / frame_area));
  const int inliers = region1.valid() && region2.valid() ? world_.n_inliers : 0;

  Sampled s;
  try {
    s = sample_world(world_, region1, region2, inliers, view1.crop, view2.crop, outliers, rng,
                     name_);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kInfeasibleScene) throw;
    s = sample_world(world_, region1, region2, 0, view1.crop, view2.crop, outliers, rng, name_);
  }

  const double s1 = view1.scale();
  const double s2 = view2.scale();
  const auto [w1, h1] = view1.working_size();
  const auto [w2, h2] = view2.working_size();
  const CropBox frame1{0, 0, double(w1), double(h1)};
  const CropBox frame2{0, 0, double(w2), double(h2)};
  RawMatches out;
  for (const auto* group : {&s.inliers, &s.outliers}) {
    for (const Correspondence& c : *group) {
      const Point2 a = map_original_to_stage2(c.p1, view1.crop, s1);
      const Point2 b = map_original_to_stage2(c.p2, view2.crop, s2);
      out.pairs.emplace_back(Point2(std::clamp(a.x(), 0.0, frame1.x_max),
                                    std::clamp(a.y(), 0.0, frame1.y_max)),
                             Point2(std::clamp(b.x(), 0.0, frame2.x_max),
                                    std::clamp(b.y(), 0.0, frame2.y_max)));
      out.confidences.push_back(1.0);
    }
  }
  return out;
}

// --- rendering ----------------------------------------------------------

GrayImage render_texture(std::uint64_t seed, int width, int height) {
  if (width < 1 || height < 1) throw Error(ErrorCode::kInvalidArgument, "empty texture");
  Rng rng(seed);
  // Smooth value noise at two scales.
  GrayImage img = GrayImage::Constant(height, width, 0.5f);
  for (int cell : {48, 12}) {
    const int gw = width / cell + 2;
    const int gh = height / cell + 2;
    GrayImage grid(gh, gw);
    for (Eigen::Index i = 0; i < grid.size(); ++i) {
      grid.data()[i] = static_cast<float>(uniform(rng, -1.0, 1.0));
    }
    const float amplitude = cell > 20 ? 0.15f : 0.06f;
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        img(y, x) += amplitude * sample_bilinear(grid, double(x) / cell, double(y) / cell, 0.0f);
      }
    }
  }
  // Sharp-edged shapes supply corners.
  const int shapes = std::max(8, width * height / 1200);
  for (int s = 0; s < shapes; ++s) {
    const double cx = uniform(rng, 0, width);
    const double cy = uniform(rng, 0, height);
    const double rx = uniform(rng, 3, 24);
    const double ry = uniform(rng, 3, 24);
    const double angle = uniform(rng, 0, std::numbers::pi);
    const float value = static_cast<float>(uniform(rng, 0.0, 1.0));
    const bool disk = uniform(rng, 0, 1) < 0.35;
    const double ca = std::cos(angle), sa = std::sin(angle);
    const int r = static_cast<int>(std::ceil(std::max(rx, ry) * 1.5));
    for (int y = std::max(0, int(cy) - r); y < std::min(height, int(cy) + r + 1); ++y) {
      for (int x = std::max(0, int(cx) - r); x < std::min(width, int(cx) + r + 1); ++x) {
        const double dx = x - cx, dy = y - cy;
        const double u = (ca * dx + sa * dy) / rx;
        const double v = (-sa * dx + ca * dy) / ry;
        const bool inside = disk ? u * u + v * v <= 1.0 : std::abs(u) <= 1.0 && std::abs(v) <= 1.0;
        if (inside) img(y, x) = 0.35f * img(y, x) + 0.65f * value;
      }
    }
  }
  return img.cwiseMax(0.0f).cwiseMin(1.0f);
}

std::pair<GrayImage, GrayImage> render_planar_pair(std::uint64_t texture_seed,
                                                   const Eigen::Matrix3d& H, int width,
                                                   int height) {
  if (!(std::abs(H.determinant()) > 1e-12)) {
    throw Error(ErrorCode::kInvalidArgument, "homography is singular");
  }
  GrayImage image1 = render_texture(texture_seed, width, height);
  GrayImage image2 = warp_homography(image1, H, width, height, 0.5f);
  return {std::move(image1), std::move(image2)};
}

Eigen::Matrix3d plane_homography(const Plane& plane, const RelativePose& pose, double baseline,
                                 const CameraIntrinsics& K1, const CameraIntrinsics& K2) {
  const Eigen::Vector3d t = baseline * pose.t.normalized();
  const Eigen::Matrix3d H =
      K2.K() * (pose.R + t * plane.normal.transpose() / plane.distance) * K1.K().inverse();
  return H / H(2, 2);
}

RenderedPair render_two_plane_pair(std::uint64_t seed, int width, int height) {
  Rng rng(seed ^ 0xC0F1D5EEDULL);
  RenderedPair out;
  const double f = 0.9 * std::max(width, height);
  out.K = {f, f, width / 2.0, height / 2.0, 0.0};
  const double yaw = uniform(rng, 8.0, 20.0) * (uniform(rng, 0, 1) < 0.5 ? -1.0 : 1.0);
  const double pitch = uniform(rng, -4.0, 4.0);
  out.pose.R = axis_angle(Eigen::Vector3d::UnitY(), yaw) *
               axis_angle(Eigen::Vector3d::UnitX(), pitch);
  // Sideways motion against the pan keeps a partial overlap.
  out.pose.t = Eigen::Vector3d(yaw > 0 ? -1.0 : 1.0, uniform(rng, -0.1, 0.1),
                               uniform(rng, -0.2, 0.2))
                   .normalized();
  out.baseline = uniform(rng, 0.8, 1.6);

  const std::array<Plane, 2> planes{
      Plane{Eigen::Vector3d(0.35, 0.0, 1.0).normalized(), uniform(rng, 5.0, 7.0)},
      Plane{Eigen::Vector3d(-0.35, 0.0, 1.0).normalized(), uniform(rng, 5.0, 7.0)}};
  out.image1 = render_texture(seed, width, height);

  const Eigen::Matrix3d K_inv = out.K.K().inverse();
  const Eigen::Vector3d t = out.baseline * out.pose.t;
  std::array<Eigen::Matrix3d, 2> to_view1;
  for (std::size_t k = 0; k < planes.size(); ++k) {
    to_view1[k] = plane_homography(planes[k], out.pose, out.baseline, out.K, out.K).inverse();
  }
  const double split = width / 2.0;
  out.image2 = GrayImage::Constant(height, width, 0.5f);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double nearest = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < planes.size(); ++k) {
        const Eigen::Vector3d h = to_view1[k] * Eigen::Vector3d(x, y, 1.0);
        if (!(h.z() > 1e-12)) continue;
        const Point2 p1 = h.hnormalized();
        if (p1.x() < 0 || p1.y() < 0 || p1.x() > width - 1 || p1.y() > height - 1) continue;
        if ((k == 0) != (p1.x() < split)) continue;
        const Eigen::Vector3d ray = K_inv * p1.homogeneous();
        const double denom = planes[k].normal.dot(ray);
        if (!(denom > 1e-12)) continue;
        const Eigen::Vector3d X1 = ray * planes[k].distance / denom;
        const double z2 = (out.pose.R * X1 + t).z();
        if (!(z2 > 0.0) || z2 >= nearest) continue;
        nearest = z2;
        out.image2(y, x) = sample_bilinear(out.image1, p1.x(), p1.y(), 0.5f);
      }
    }
  }
  return out;
}

}  // namespace covis
