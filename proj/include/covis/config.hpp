#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "covis/metrics.hpp"
#include "covis/pipeline.hpp"

namespace covis {

struct EvaluationConfig {
  std::vector<double> auc_thresholds{5.0, 10.0, 20.0};
  AucMode auc_mode = AucMode::kExact;
  double auc_bin_deg = 5.0;
  // Manifest translations are in meters; enables mAA.
  bool metric_translation = true;
  ThresholdGrid maa_grid = ThresholdGrid::standard();
};

struct AppConfig {
  PipelineConfig pipeline;
  EvaluationConfig evaluation;

  // Stage one runs the builtin matcher at 840, no stage two.
  static AppConfig defaults();
};

// Strict JSON schema mirroring PipelineConfig: unknown keys are rejected,
// omitted keys take the documented defaults. Throws kConfig.
AppConfig config_from_json(const nlohmann::json& doc);
AppConfig load_config(const std::filesystem::path& path);

// Complete echo, every default spelled out.
nlohmann::json to_json(const AppConfig& config);

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& s);

}  // namespace covis
