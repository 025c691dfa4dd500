#pragma once

#include <Eigen/Core>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "covis/geometry.hpp"

namespace covis {

// One evaluation pair with ground-truth relative pose, x2 = R x1 + t.
struct ManifestRow {
  std::string pair_id;
  std::filesystem::path image1;  // resolved against the manifest directory
  std::filesystem::path image2;
  Eigen::Matrix3d K1 = Eigen::Matrix3d::Identity();
  Eigen::Matrix3d K2 = Eigen::Matrix3d::Identity();
  Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
  Eigen::Vector3d t = Eigen::Vector3d::Zero();
};

// Column names in order: pair_id, image1, image2, K1_0..K1_8, K2_0..K2_8,
// R_0..R_8, t_0..t_2 (matrices row-major).
std::vector<std::string> manifest_columns();

// CSV with the header above. Extra columns are ignored with a warning.
// Throws kIo when unreadable and kInvalidArgument on malformed content or
// when there are no rows.
std::vector<ManifestRow> load_manifest(const std::filesystem::path& path);
std::vector<ManifestRow> parse_manifest(const std::string& text,
                                        const std::filesystem::path& base_dir = {});

// Image paths are written relative to `base_dir` when possible.
std::string format_manifest(const std::vector<ManifestRow>& rows,
                            const std::filesystem::path& base_dir = {});
void save_manifest(const std::vector<ManifestRow>& rows, const std::filesystem::path& path);

}  // namespace covis
