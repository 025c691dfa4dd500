#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "covis/core.hpp"
#include "covis/geometry.hpp"
#include "covis/image.hpp"
#include "covis/matchers.hpp"

namespace covis {

struct SceneSpec {
  int n_inliers = 100;
  double noise_sigma = 0.0;   // pixels, image 2 only, truncated at 3 sigma
  double outlier_rate = 0.0;  // fraction of the final set, [0, 1)
  ImageMeta image1{"synthetic_1", 640, 480};
  ImageMeta image2{"synthetic_2", 640, 480};
  CropBox covis_box1{0, 0, 640, 480};
  CropBox covis_box2{0, 0, 640, 480};
  RelativePose pose;      // unit direction
  double baseline = 1.0;  // meters
  CameraIntrinsics intrinsics{500.0, 500.0, 320.0, 240.0, 0.0};
  std::pair<double, double> depth_range{4.0, 12.0};
  std::uint64_t seed = 0;

  void validate() const;
  // ceil(outlier_rate * n / (1 - outlier_rate)).
  int outlier_count() const;
};

struct SyntheticScene {
  MatchSet matches;
  std::vector<bool> inlier_mask;
  RelativePose pose_gt;
  Eigen::Vector3d t_metric = Eigen::Vector3d::Zero();  // baseline * t
  CameraIntrinsics K1;
  CameraIntrinsics K2;
  std::optional<Eigen::Matrix3d> H_gt;

  Eigen::Matrix3d F_gt() const { return fundamental_from_pose(pose_gt, K1, K2); }
};

// Projections of random 3-D points seen inside both co-visible boxes, plus
// uniform full-frame outliers appended after the inliers.
SyntheticScene generate_epipolar_scene(const SceneSpec& spec);

// Rotation of `degrees` about a unit axis.
Eigen::Matrix3d axis_angle(const Eigen::Vector3d& axis, double degrees);

// Scene whose co-visible boxes are the left `band` fraction of image 1 and
// the right `band` fraction of image 2, consistent with a sideways camera
// motion. Used by the two-stage oracles.
SceneSpec banded_scene(double band, int n_inliers, double noise_sigma, double outlier_rate,
                       std::uint64_t seed);

// Match-level stand-in for an image matcher over a SceneSpec world. Every
// call yields `n_inliers` true correspondences inside the part of the
// co-visible boxes that the views show, and outliers with the same density
// per unit area as the full-frame set (so a crop sees proportionally fewer).
// Output is in each view's working frame, like any matcher.
class SceneMatcher final : public Matcher {
 public:
  explicit SceneMatcher(SceneSpec world, std::string name = "scene-oracle")
      : world_(std::move(world)), name_(std::move(name)) {}

  std::string name() const override { return name_; }
  RawMatches match(const MatchView& view1, const MatchView& view2) const override;

  const SceneSpec& world() const { return world_; }

 private:
  SceneSpec world_;
  std::string name_;
};

// Seeded procedural texture of shapes over smooth value noise, in [0, 1].
GrayImage render_texture(std::uint64_t seed, int width, int height);

// image1 = texture, image2 = image1 warped by H (mid-gray outside the frame).
std::pair<GrayImage, GrayImage> render_planar_pair(std::uint64_t texture_seed,
                                                   const Eigen::Matrix3d& H, int width,
                                                   int height);

// Plane n^T X = d in camera-1 coordinates.
struct Plane {
  Eigen::Vector3d normal;
  double distance = 1.0;
};

// Homography induced by `plane` between the two cameras, x2 ~ H x1.
Eigen::Matrix3d plane_homography(const Plane& plane, const RelativePose& pose, double baseline,
                                 const CameraIntrinsics& K1, const CameraIntrinsics& K2);

// Two textured planes split at the vertical midline of image 1, rendered
// into camera 2 with occlusion by depth. Gives a non-planar pair whose
// epipolar geometry is well defined.
struct RenderedPair {
  GrayImage image1;
  GrayImage image2;
  RelativePose pose;
  double baseline = 1.0;
  CameraIntrinsics K;
};
RenderedPair render_two_plane_pair(std::uint64_t seed, int width, int height);

}  // namespace covis
