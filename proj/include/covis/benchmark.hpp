#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "covis/config.hpp"
#include "covis/manifest.hpp"
#include "covis/metrics.hpp"
#include "covis/pipeline.hpp"

namespace covis {

struct PairReport {
  std::string pair_id;
  PoseError error = PoseError::failure();
  std::string failure;  // empty on success
  std::size_t n_matches = 0;
  std::size_t stage1_count = 0;
  int inliers = 0;
  std::optional<CropBox> box1;
  std::optional<CropBox> box2;
  PhaseTimings timings;
};

struct BenchmarkReport {
  std::vector<PairReport> pairs;  // manifest order
  std::vector<double> auc_thresholds;
  std::vector<double> auc;
  std::optional<double> maa;
  int failed = 0;
};

// Loads the pair, runs the pipeline and scores the recovered pose. Any
// failure yields a failed row instead of an exception.
PairReport evaluate_pair(const ManifestRow& row, const Pipeline& pipeline,
                         const EvaluationConfig& eval);

// Evaluates every row on `jobs` worker threads; output order follows the
// manifest regardless of scheduling.
BenchmarkReport run_benchmark(const std::vector<ManifestRow>& rows, const Pipeline& pipeline,
                              const EvaluationConfig& eval, int jobs = 1);

// AUC and, when every scored pair has a metric error, mAA.
void aggregate(BenchmarkReport& report, const EvaluationConfig& eval);

nlohmann::json to_json(const BenchmarkReport& report, const AppConfig& config);
std::string format_table(const BenchmarkReport& report);

}  // namespace covis
