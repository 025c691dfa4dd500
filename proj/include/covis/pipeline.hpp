#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "covis/core.hpp"
#include "covis/geometry.hpp"
#include "covis/image.hpp"
#include "covis/matchers.hpp"
#include "covis/mkpc.hpp"

namespace covis {

struct PipelineConfig {
  std::vector<MatcherSpec> stage1;
  std::vector<MatcherSpec> stage2;  // empty: single-stage run
  MkpcParams mkpc;
  EstimatorParams estimator;
  ModelKind model_kind = ModelKind::kFundamental;

  void validate() const;
};

// A matcher bound to the longest-side resolution it runs at.
struct StageModel {
  std::shared_ptr<const Matcher> matcher;
  int resolution = 840;
};

// One image pair. Pixels are optional for match-level matchers.
struct PairInput {
  ImageMeta meta1;
  ImageMeta meta2;
  const GrayImage* image1 = nullptr;
  const GrayImage* image2 = nullptr;
  std::filesystem::path path1;
  std::filesystem::path path2;
  std::optional<CameraIntrinsics> K1;
  std::optional<CameraIntrinsics> K2;
};

struct PhaseTimings {
  double stage1_ms = 0.0;
  double mkpc_ms = 0.0;
  double stage2_ms = 0.0;
  double estimation_ms = 0.0;
  double total_ms = 0.0;
};

struct PipelineResult {
  MatchSet matches;                     // stage one then stage two, original frame
  std::size_t stage1_count = 0;
  std::optional<CropProposal> proposal;  // boxes snapped to whole pixels
  std::optional<Model3x3> model;         // absent when estimation failed
  std::string estimation_error;
  PhaseTimings timings;
};

// Runs each model over the (optionally cropped) pair, maps its matches back
// to the original frames and concatenates them in model order. A failing
// model is logged and skipped; if all fail, throws kStageFailed.
MatchSet run_stage(const std::vector<StageModel>& models, const PairInput& pair, Stage stage,
                   const std::optional<std::pair<CropBox, CropBox>>& crops = std::nullopt);

// Deterministic RANSAC seed for a pair, from a base seed and the image ids.
std::uint64_t pair_seed(std::uint64_t base, const std::string& id1, const std::string& id2);

class Pipeline {
 public:
  Pipeline(std::vector<StageModel> stage1, std::vector<StageModel> stage2, MkpcParams mkpc,
           EstimatorParams estimator, ModelKind kind);
  static Pipeline from_config(const PipelineConfig& config);

  // Stage one, crop proposal, stage two on the crops, concatenation and
  // robust estimation. Throws when stage one fails; estimation failures are
  // reported in the result.
  PipelineResult run(const PairInput& pair) const;

  const MkpcParams& mkpc() const { return mkpc_; }
  const EstimatorParams& estimator() const { return estimator_; }
  ModelKind kind() const { return kind_; }

 private:
  std::vector<StageModel> stage1_;
  std::vector<StageModel> stage2_;
  MkpcParams mkpc_;
  EstimatorParams estimator_;
  ModelKind kind_;
};

// Robust estimation of `kind` on `matches` with the pair-derived seed.
// Returns nullopt and fills `error` on failure.
std::optional<Model3x3> estimate(const MatchSet& matches, ModelKind kind,
                                 const EstimatorParams& params, const PairInput& pair,
                                 std::string* error = nullptr);

}  // namespace covis
