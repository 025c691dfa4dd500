#pragma once

#include <optional>
#include <vector>

#include "covis/core.hpp"
#include "covis/image.hpp"
#include "covis/mkpc.hpp"

namespace covis {

enum class Side { kFirst, kSecond };

// Draws one image's keypoints colored by stage, stage-one in blue and
// stage-two in orange. Inliers are filled squares, outliers hollow ones.
// The crop box, if given, is outlined in yellow. Output is deterministic.
RgbImage render_overlay(const GrayImage& image, const MatchSet& matches, Side side,
                        const std::optional<CropBox>& box = std::nullopt,
                        const std::vector<bool>* inliers = nullptr);

// Both images side by side with a line per match, colored as above.
// Outlier lines are drawn in red.
RgbImage render_pair_overlay(const GrayImage& image1, const GrayImage& image2,
                             const MatchSet& matches,
                             const std::optional<CropProposal>& proposal = std::nullopt,
                             const std::vector<bool>* inliers = nullptr);

}  // namespace covis
