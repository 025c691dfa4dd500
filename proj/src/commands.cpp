#include "covis/commands.hpp"

#include <fstream>
#include <iostream>

#include "covis/benchmark.hpp"
#include "covis/error.hpp"
#include "covis/log.hpp"
#include "covis/manifest.hpp"
#include "covis/overlay.hpp"
#include "covis/synthetic.hpp"

namespace covis {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json box_json(const CropBox& b) { return json::array({b.x_min, b.y_min, b.x_max, b.y_max}); }

json matrix_json(const Eigen::Matrix3d& m) {
  json rows = json::array();
  for (int r = 0; r < 3; ++r) rows.push_back({m(r, 0), m(r, 1), m(r, 2)});
  return rows;
}

void write_json(const json& doc, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write '" + path.string() + "'");
  out << doc.dump(2) << '\n';
}

void ensure_dir(const fs::path& dir) {
  if (dir.empty()) throw Error(ErrorCode::kInvalidArgument, "--out is required");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create '" + dir.string() + "': " + ec.message());
}

json proposal_json(const CropProposal& p) {
  return {{"box1", box_json(p.box1)},
          {"box2", box_json(p.box2)},
          {"degenerate", p.degenerate},
          {"kept_clusters1", p.kept_clusters1},
          {"kept_clusters2", p.kept_clusters2},
          {"num_clusters1", p.labels1.num_clusters},
          {"num_clusters2", p.labels2.num_clusters}};
}

PairInput make_pair(const GrayImage& img1, const GrayImage& img2, const fs::path& p1,
                    const fs::path& p2) {
  PairInput pair;
  pair.meta1 = meta_of(img1, p1.filename().string());
  pair.meta2 = meta_of(img2, p2.filename().string());
  pair.image1 = &img1;
  pair.image2 = &img2;
  pair.path1 = p1;
  pair.path2 = p2;
  return pair;
}

template <typename F>
int guarded(F&& body) {
  try {
    return body();
  } catch (const Error& e) {
    log::error("{}", e.what());
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    log::error("internal: {}", e.what());
    return kExitInternal;
  }
}

}  // namespace

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kConfig:
    case ErrorCode::kNotImplemented:
    case ErrorCode::kUnsupportedMetric:
      return kExitConfig;
    case ErrorCode::kIo:
      return kExitIo;
    case ErrorCode::kStageFailed:
    case ErrorCode::kMatcherUnavailable:
    case ErrorCode::kTimeout:
    case ErrorCode::kEstimationFailed:
    case ErrorCode::kDegenerateConfiguration:
    case ErrorCode::kInsufficientData:
      return kExitPipeline;
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kProtocolError:
    case ErrorCode::kInfeasibleScene:
      return kExitInput;
  }
  return kExitInternal;
}

AppConfig resolve_config(const CommonOptions& opts) {
  AppConfig config = opts.config ? load_config(*opts.config) : AppConfig::defaults();
  if (opts.seed) config.pipeline.estimator.seed = *opts.seed;
  if (opts.jobs < 1) throw Error(ErrorCode::kConfig, "--jobs must be at least 1");
  config.pipeline.validate();
  return config;
}

int cmd_match(const fs::path& image1, const fs::path& image2, const CommonOptions& opts) {
  return guarded([&] {
    const AppConfig config = resolve_config(opts);
    const GrayImage img1 = load_gray(image1);
    const GrayImage img2 = load_gray(image2);
    const Pipeline pipeline = Pipeline::from_config(config.pipeline);
    const PairInput pair = make_pair(img1, img2, image1, image2);
    const PipelineResult result = pipeline.run(pair);

    ensure_dir(opts.out);
    const std::vector<bool>* mask = result.model ? &result.model->inliers : nullptr;
    json items = json::array();
    for (std::size_t i = 0; i < result.matches.size(); ++i) {
      const Correspondence& c = result.matches.items[i];
      items.push_back({{"p1", {c.p1.x(), c.p1.y()}},
                       {"p2", {c.p2.x(), c.p2.y()}},
                       {"confidence", c.confidence},
                       {"source", c.source},
                       {"stage", static_cast<int>(c.stage)},
                       {"inlier", mask ? json(bool((*mask)[i])) : json(nullptr)}});
    }
    write_json({{"image1", image1.string()},
                {"image2", image2.string()},
                {"stage1_count", result.stage1_count},
                {"stage2_count", result.matches.size() - result.stage1_count},
                {"proposal", result.proposal ? proposal_json(*result.proposal) : json(nullptr)},
                {"matches", items}},
               opts.out / "matches.json");

    json model = {{"kind", to_string(config.pipeline.model_kind)},
                  {"estimated", result.model.has_value()}};
    if (result.model) {
      model["matrix"] = matrix_json(result.model->m);
      model["inliers"] = result.model->score;
      model["iterations"] = result.model->iterations;
    } else {
      model["error"] = result.estimation_error;
      log::warn("estimation failed: {}", result.estimation_error);
    }
    model["timings_ms"] = {{"stage1", result.timings.stage1_ms},
                           {"mkpc", result.timings.mkpc_ms},
                           {"stage2", result.timings.stage2_ms},
                           {"estimation", result.timings.estimation_ms},
                           {"total", result.timings.total_ms}};
    model["config"] = to_json(config);
    write_json(model, opts.out / "model.json");

    std::optional<CropBox> b1, b2;
    if (result.proposal) {
      b1 = result.proposal->box1;
      b2 = result.proposal->box2;
    }
    save_png(render_overlay(img1, result.matches, Side::kFirst, b1, mask),
             opts.out / "overlay1.png");
    save_png(render_overlay(img2, result.matches, Side::kSecond, b2, mask),
             opts.out / "overlay2.png");
    save_png(render_pair_overlay(img1, img2, result.matches, result.proposal, mask),
             opts.out / "pair.png");
    std::cout << "matches: " << result.matches.size() << " (stage1 " << result.stage1_count
              << ")";
    if (result.model) std::cout << ", inliers: " << result.model->score;
    std::cout << '\n';
    return int(kExitOk);
  });
}

int cmd_benchmark(const fs::path& manifest, const CommonOptions& opts) {
  return guarded([&] {
    const AppConfig config = resolve_config(opts);
    if (config.pipeline.model_kind == ModelKind::kHomography) {
      throw Error(ErrorCode::kConfig, "benchmark needs model_kind fundamental or essential");
    }
    if (opts.out.empty()) throw Error(ErrorCode::kInvalidArgument, "--out is required");
    const std::vector<ManifestRow> rows = load_manifest(manifest);
    const Pipeline pipeline = Pipeline::from_config(config.pipeline);
    const BenchmarkReport report = run_benchmark(rows, pipeline, config.evaluation, opts.jobs);

    if (opts.out.has_parent_path()) ensure_dir(opts.out.parent_path());
    write_json(to_json(report, config), opts.out);
    const std::string table = format_table(report);
    fs::path txt = opts.out;
    txt.replace_extension(".txt");
    std::ofstream out(txt);
    if (!out) throw Error(ErrorCode::kIo, "cannot write '" + txt.string() + "'");
    out << table;
    std::cout << table;
    return int(kExitOk);
  });
}

int cmd_crop(const fs::path& image1, const fs::path& image2, const CommonOptions& opts) {
  return guarded([&] {
    const AppConfig config = resolve_config(opts);
    const GrayImage img1 = load_gray(image1);
    const GrayImage img2 = load_gray(image2);
    const PairInput pair = make_pair(img1, img2, image1, image2);
    std::vector<StageModel> models;
    for (const MatcherSpec& spec : config.pipeline.stage1) {
      models.push_back({make_matcher(spec), spec.resolution});
    }
    const MatchSet matches = run_stage(models, pair, Stage::kOne);
    if (matches.empty()) throw Error(ErrorCode::kStageFailed, "stage one found no matches");
    CropProposal proposal = propose_crops(pair.meta1, pair.meta2, matches.points1(),
                                          matches.points2(), config.pipeline.mkpc);
    proposal.box1 = snap_to_pixels(proposal.box1, pair.meta1);
    proposal.box2 = snap_to_pixels(proposal.box2, pair.meta2);

    ensure_dir(opts.out);
    json doc = proposal_json(proposal);
    doc["stage1_count"] = matches.size();
    write_json(doc, opts.out / "proposal.json");
    save_png(crop(img1, proposal.box1), opts.out / "crop1.png");
    save_png(crop(img2, proposal.box2), opts.out / "crop2.png");
    save_png(render_overlay(img1, matches, Side::kFirst, proposal.box1),
             opts.out / "overlay1.png");
    save_png(render_overlay(img2, matches, Side::kSecond, proposal.box2),
             opts.out / "overlay2.png");
    std::cout << "box1: " << box_json(proposal.box1).dump()
              << " box2: " << box_json(proposal.box2).dump()
              << (proposal.degenerate ? " (degenerate)" : "") << '\n';
    return int(kExitOk);
  });
}

int cmd_synth(int pairs, int width, int height, const CommonOptions& opts) {
  return guarded([&] {
    if (pairs < 1) throw Error(ErrorCode::kInvalidArgument, "--pairs must be at least 1");
    ensure_dir(opts.out);
    const std::uint64_t base = opts.seed.value_or(0);
    std::vector<ManifestRow> rows;
    for (int i = 0; i < pairs; ++i) {
      const RenderedPair r = render_two_plane_pair(base + static_cast<std::uint64_t>(i), width, height);
      ManifestRow row;
      row.pair_id = "synth_" + std::to_string(i);
      row.image1 = opts.out / (row.pair_id + "_1.png");
      row.image2 = opts.out / (row.pair_id + "_2.png");
      save_png(r.image1, row.image1);
      save_png(r.image2, row.image2);
      row.K1 = r.K.K();
      row.K2 = r.K.K();
      row.R = r.pose.R;
      row.t = r.pose.t * r.baseline;
      rows.push_back(std::move(row));
    }
    save_manifest(rows, opts.out / "manifest.csv");
    std::cout << "wrote " << pairs << " pairs to " << opts.out.string() << '\n';
    return int(kExitOk);
  });
}

int cmd_config(const CommonOptions& opts) {
  return guarded([&] {
    std::cout << to_json(resolve_config(opts)).dump(2) << '\n';
    return int(kExitOk);
  });
}

}  // namespace covis
