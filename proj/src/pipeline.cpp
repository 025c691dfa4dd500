#include "covis/pipeline.hpp"

#include <chrono>

#include "covis/error.hpp"
#include "covis/log.hpp"

namespace covis {
namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

std::vector<StageModel> bind(const std::vector<MatcherSpec>& specs) {
  std::vector<StageModel> out;
  out.reserve(specs.size());
  for (const MatcherSpec& spec : specs) out.push_back({make_matcher(spec), spec.resolution});
  return out;
}

}  // namespace

void PipelineConfig::validate() const {
  if (stage1.empty()) throw Error(ErrorCode::kConfig, "stage1 needs at least one matcher");
  for (const auto* list : {&stage1, &stage2}) {
    for (const MatcherSpec& spec : *list) spec.validate();
  }
  try {
    covis::validate(mkpc);
    covis::validate(estimator);
  } catch (const Error& e) {
    throw Error(ErrorCode::kConfig, e.message());
  }
}

std::uint64_t pair_seed(std::uint64_t base, const std::string& id1, const std::string& id2) {
  // FNV-1a over "id1|id2", folded with the base seed.
  std::uint64_t h = 1469598103934665603ULL;
  auto feed = [&h](unsigned char c) {
    h ^= c;
    h *= 1099511628211ULL;
  };
  for (char c : id1) feed(static_cast<unsigned char>(c));
  feed('|');
  for (char c : id2) feed(static_cast<unsigned char>(c));
  return h ^ (base + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2));
}

MatchSet run_stage(const std::vector<StageModel>& models, const PairInput& pair, Stage stage,
                   const std::optional<std::pair<CropBox, CropBox>>& crops) {
  if (models.empty()) throw Error(ErrorCode::kInvalidArgument, "stage has no models");
  const CropBox crop1 = crops ? crops->first : CropBox::full(pair.meta1);
  const CropBox crop2 = crops ? crops->second : CropBox::full(pair.meta2);

  MatchSet out{{}, pair.meta1, pair.meta2};
  int failures = 0;
  for (const StageModel& model : models) {
    MatchView v1{pair.image1, pair.meta1, pair.path1, crop1, model.resolution};
    MatchView v2{pair.image2, pair.meta2, pair.path2, crop2, model.resolution};
    try {
      const RawMatches raw = model.matcher->match(v1, v2);
      const auto [w1, h1] = v1.working_size();
      const auto [w2, h2] = v2.working_size();
      raw.validate(w1, h1, w2, h2);
      const double s1 = v1.scale();
      const double s2 = v2.scale();
      const std::string source = model.matcher->name() + "@" + std::to_string(model.resolution);
      for (std::size_t i = 0; i < raw.size(); ++i) {
        out.items.push_back({map_stage2_to_original(raw.pairs[i].first, crop1, s1),
                             map_stage2_to_original(raw.pairs[i].second, crop2, s2),
                             raw.confidences[i], source, stage});
      }
    } catch (const Error& e) {
      ++failures;
      log::warn("pair {}|{}: matcher '{}' at {} failed: {}", pair.meta1.id, pair.meta2.id,
                model.matcher->name(), model.resolution, e.what());
    }
  }
  if (failures == static_cast<int>(models.size())) {
    throw Error(ErrorCode::kStageFailed, "every matcher of stage " +
                                             std::to_string(static_cast<int>(stage)) +
                                             " failed");
  }
  return out;
}

std::optional<Model3x3> estimate(const MatchSet& matches, ModelKind kind,
                                 const EstimatorParams& params, const PairInput& pair,
                                 std::string* error) {
  EstimatorParams seeded = params;
  seeded.seed = pair_seed(params.seed, pair.meta1.id, pair.meta2.id);
  const CameraIntrinsics* K1 = pair.K1 ? &*pair.K1 : nullptr;
  const CameraIntrinsics* K2 = pair.K2 ? &*pair.K2 : nullptr;
  try {
    return ransac(matches, kind, seeded, K1, K2);
  } catch (const Error& e) {
    if (error) *error = e.what();
    return std::nullopt;
  }
}

Pipeline::Pipeline(std::vector<StageModel> stage1, std::vector<StageModel> stage2,
                   MkpcParams mkpc, EstimatorParams estimator, ModelKind kind)
    : stage1_(std::move(stage1)),
      stage2_(std::move(stage2)),
      mkpc_(std::move(mkpc)),
      estimator_(estimator),
      kind_(kind) {
  if (stage1_.empty()) throw Error(ErrorCode::kConfig, "stage1 needs at least one matcher");
  validate(mkpc_);
  validate(estimator_);
}

Pipeline Pipeline::from_config(const PipelineConfig& config) {
  config.validate();
  return Pipeline(bind(config.stage1), bind(config.stage2), config.mkpc, config.estimator,
                  config.model_kind);
}

PipelineResult Pipeline::run(const PairInput& pair) const {
  const auto start = Clock::now();
  PipelineResult result;

  auto t = Clock::now();
  result.matches = run_stage(stage1_, pair, Stage::kOne);
  result.stage1_count = result.matches.size();
  result.timings.stage1_ms = elapsed_ms(t);

  if (!stage2_.empty()) {
    t = Clock::now();
    CropProposal proposal;
    if (result.matches.empty()) {
      proposal.box1 = CropBox::full(pair.meta1);
      proposal.box2 = CropBox::full(pair.meta2);
      proposal.degenerate = true;
    } else {
      proposal = propose_crops(pair.meta1, pair.meta2, result.matches.points1(),
                               result.matches.points2(), mkpc_);
    }
    proposal.box1 = snap_to_pixels(proposal.box1, pair.meta1);
    proposal.box2 = snap_to_pixels(proposal.box2, pair.meta2);
    result.timings.mkpc_ms = elapsed_ms(t);

    t = Clock::now();
    try {
      result.matches.append(
          run_stage(stage2_, pair, Stage::kTwo, std::pair{proposal.box1, proposal.box2}));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kStageFailed) throw;
      log::warn("pair {}|{}: stage two produced nothing, keeping stage one", pair.meta1.id,
                pair.meta2.id);
    }
    result.timings.stage2_ms = elapsed_ms(t);
    result.proposal = std::move(proposal);
  }

  t = Clock::now();
  result.model = estimate(result.matches, kind_, estimator_, pair, &result.estimation_error);
  result.timings.estimation_ms = elapsed_ms(t);
  result.timings.total_ms = elapsed_ms(start);
  return result;
}

}  // namespace covis
