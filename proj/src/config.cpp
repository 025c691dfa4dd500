#include "covis/config.hpp"

#include <fstream>
#include <set>

#include "covis/error.hpp"

namespace covis {

using nlohmann::json;

namespace {

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw Error(ErrorCode::kConfig, where + " must be an object");
  for (const auto& item : obj.items()) {
    if (!allowed.count(item.key())) {
      throw Error(ErrorCode::kConfig, "unknown key '" + item.key() + "' in " + where);
    }
  }
}

template <typename T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfig, where + "." + key + ": " + e.what());
  }
}

std::string kind_name(MatcherSpec::Kind k) {
  return k == MatcherSpec::Kind::kBuiltin ? "builtin" : "external";
}

std::vector<MatcherSpec> read_stage(const json& doc, const char* key) {
  std::vector<MatcherSpec> out;
  auto it = doc.find(key);
  if (it == doc.end()) return out;
  if (!it->is_array()) throw Error(ErrorCode::kConfig, std::string(key) + " must be a list");
  for (std::size_t i = 0; i < it->size(); ++i) {
    const json& m = (*it)[i];
    const std::string where = std::string(key) + "[" + std::to_string(i) + "]";
    reject_unknown(m, {"kind", "name", "resolution", "endpoint", "options"}, where);
    MatcherSpec spec;
    std::string kind = "builtin";
    read(m, "kind", kind, where);
    if (kind == "builtin") {
      spec.kind = MatcherSpec::Kind::kBuiltin;
    } else if (kind == "external") {
      spec.kind = MatcherSpec::Kind::kExternal;
      spec.name = "external";
    } else {
      throw Error(ErrorCode::kConfig, where + ".kind must be 'builtin' or 'external'");
    }
    read(m, "name", spec.name, where);
    read(m, "endpoint", spec.endpoint, where);
    if (auto opts = m.find("options"); opts != m.end()) {
      if (!opts->is_object()) throw Error(ErrorCode::kConfig, where + ".options must be an object");
      for (const auto& o : opts->items()) {
        spec.options[o.key()] = o.value().is_string() ? o.value().get<std::string>() : o.value().dump();
      }
    }
    // A list of resolutions expands into one entry per resolution.
    std::vector<int> resolutions{spec.resolution};
    if (auto res = m.find("resolution"); res != m.end()) {
      try {
        resolutions = res->is_array() ? res->get<std::vector<int>>()
                                      : std::vector<int>{res->get<int>()};
      } catch (const json::exception& e) {
        throw Error(ErrorCode::kConfig, where + ".resolution: " + e.what());
      }
    }
    for (int r : resolutions) {
      spec.resolution = r;
      out.push_back(spec);
    }
  }
  return out;
}

}  // namespace

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::kFundamental: return "fundamental";
    case ModelKind::kEssential: return "essential";
    case ModelKind::kHomography: return "homography";
  }
  return "unknown";
}

ModelKind model_kind_from_string(const std::string& s) {
  if (s == "fundamental") return ModelKind::kFundamental;
  if (s == "essential") return ModelKind::kEssential;
  if (s == "homography") return ModelKind::kHomography;
  throw Error(ErrorCode::kConfig, "model_kind must be fundamental, essential or homography");
}

AppConfig AppConfig::defaults() {
  AppConfig c;
  c.pipeline.stage1.push_back(MatcherSpec{});
  return c;
}

AppConfig config_from_json(const json& doc) {
  reject_unknown(doc, {"stage1", "stage2", "mkpc", "estimator", "model_kind", "evaluation"},
                 "config");
  AppConfig c = AppConfig::defaults();
  if (doc.contains("stage1")) c.pipeline.stage1 = read_stage(doc, "stage1");
  c.pipeline.stage2 = read_stage(doc, "stage2");

  if (auto m = doc.find("mkpc"); m != doc.end()) {
    reject_unknown(*m, {"T", "dbscan", "eps_factor", "min_pts", "e_h", "e_v", "min_box_side"},
                   "mkpc");
    MkpcParams& p = c.pipeline.mkpc;
    read(*m, "T", p.T, "mkpc");
    read(*m, "eps_factor", p.eps_factor, "mkpc");
    read(*m, "min_pts", p.auto_min_pts, "mkpc");
    read(*m, "e_h", p.e_h, "mkpc");
    read(*m, "e_v", p.e_v, "mkpc");
    read(*m, "min_box_side", p.min_box_side, "mkpc");
    if (auto d = m->find("dbscan"); d != m->end()) {
      if (d->is_string()) {
        if (*d != "auto") throw Error(ErrorCode::kConfig, "mkpc.dbscan must be 'auto' or an object");
      } else {
        reject_unknown(*d, {"eps", "min_pts"}, "mkpc.dbscan");
        DbscanParams dp;
        read(*d, "eps", dp.eps, "mkpc.dbscan");
        read(*d, "min_pts", dp.min_pts, "mkpc.dbscan");
        p.dbscan = dp;
      }
    }
  }

  if (auto e = doc.find("estimator"); e != doc.end()) {
    reject_unknown(*e, {"method", "threshold", "max_iters", "confidence", "seed"}, "estimator");
    EstimatorParams& p = c.pipeline.estimator;
    std::string method = "ransac";
    read(*e, "method", method, "estimator");
    if (method == "ransac") {
      p.method = RobustMethod::kRansac;
    } else if (method == "magsac") {
      p.method = RobustMethod::kMagsac;
    } else {
      throw Error(ErrorCode::kConfig, "estimator.method must be 'ransac' or 'magsac'");
    }
    read(*e, "threshold", p.threshold, "estimator");
    read(*e, "max_iters", p.max_iters, "estimator");
    read(*e, "confidence", p.confidence, "estimator");
    read(*e, "seed", p.seed, "estimator");
  }

  if (auto k = doc.find("model_kind"); k != doc.end()) {
    if (!k->is_string()) throw Error(ErrorCode::kConfig, "model_kind must be a string");
    c.pipeline.model_kind = model_kind_from_string(k->get<std::string>());
  }

  if (auto ev = doc.find("evaluation"); ev != doc.end()) {
    reject_unknown(*ev, {"auc_thresholds", "auc_mode", "auc_bin_deg", "metric_translation",
                         "maa_rot_thresholds", "maa_trans_thresholds"},
                   "evaluation");
    EvaluationConfig& p = c.evaluation;
    read(*ev, "auc_thresholds", p.auc_thresholds, "evaluation");
    std::string mode = "exact";
    read(*ev, "auc_mode", mode, "evaluation");
    if (mode == "exact") {
      p.auc_mode = AucMode::kExact;
    } else if (mode == "binned") {
      p.auc_mode = AucMode::kBinned;
    } else {
      throw Error(ErrorCode::kConfig, "evaluation.auc_mode must be 'exact' or 'binned'");
    }
    read(*ev, "auc_bin_deg", p.auc_bin_deg, "evaluation");
    read(*ev, "metric_translation", p.metric_translation, "evaluation");
    read(*ev, "maa_rot_thresholds", p.maa_grid.rot_thresholds, "evaluation");
    read(*ev, "maa_trans_thresholds", p.maa_grid.trans_thresholds, "evaluation");
    try {
      p.maa_grid.validate();
    } catch (const Error& err) {
      throw Error(ErrorCode::kConfig, err.message());
    }
    if (p.auc_thresholds.empty()) throw Error(ErrorCode::kConfig, "auc_thresholds is empty");
  }

  c.pipeline.validate();
  return c;
}

AppConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open config '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfig, "config '" + path.string() + "': " + e.what());
  }
  return config_from_json(doc);
}

json to_json(const AppConfig& config) {
  auto stage = [](const std::vector<MatcherSpec>& specs) {
    json out = json::array();
    for (const MatcherSpec& s : specs) {
      out.push_back({{"kind", kind_name(s.kind)},
                     {"name", s.name},
                     {"resolution", s.resolution},
                     {"endpoint", s.endpoint},
                     {"options", s.options}});
    }
    return out;
  };
  const PipelineConfig& p = config.pipeline;
  json dbscan = "auto";
  if (p.mkpc.dbscan) dbscan = {{"eps", p.mkpc.dbscan->eps}, {"min_pts", p.mkpc.dbscan->min_pts}};
  const EvaluationConfig& ev = config.evaluation;
  return {
      {"stage1", stage(p.stage1)},
      {"stage2", stage(p.stage2)},
      {"mkpc",
       {{"T", p.mkpc.T},
        {"dbscan", dbscan},
        {"eps_factor", p.mkpc.eps_factor},
        {"min_pts", p.mkpc.auto_min_pts},
        {"e_h", p.mkpc.e_h},
        {"e_v", p.mkpc.e_v},
        {"min_box_side", p.mkpc.min_box_side}}},
      {"estimator",
       {{"method", p.estimator.method == RobustMethod::kRansac ? "ransac" : "magsac"},
        {"threshold", p.estimator.threshold},
        {"max_iters", p.estimator.max_iters},
        {"confidence", p.estimator.confidence},
        {"seed", p.estimator.seed}}},
      {"model_kind", to_string(p.model_kind)},
      {"evaluation",
       {{"auc_thresholds", ev.auc_thresholds},
        {"auc_mode", ev.auc_mode == AucMode::kExact ? "exact" : "binned"},
        {"auc_bin_deg", ev.auc_bin_deg},
        {"metric_translation", ev.metric_translation},
        {"maa_rot_thresholds", ev.maa_grid.rot_thresholds},
        {"maa_trans_thresholds", ev.maa_grid.trans_thresholds}}},
  };
}

}  // namespace covis
