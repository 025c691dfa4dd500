#include "covis/benchmark.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <thread>

#include "covis/error.hpp"
#include "covis/log.hpp"

namespace covis {

using nlohmann::json;

namespace {

std::string threshold_key(double t) {
  std::ostringstream out;
  out << "auc" << t;
  return out.str();
}

json box_json(const std::optional<CropBox>& b) {
  if (!b) return nullptr;
  return json::array({b->x_min, b->y_min, b->x_max, b->y_max});
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json phase_stats(const std::vector<PairReport>& pairs, double PhaseTimings::*field) {
  std::vector<double> v;
  for (const PairReport& p : pairs) {
    if (p.timings.total_ms > 0.0) v.push_back(p.timings.*field);
  }
  if (v.empty()) return {{"mean_ms", nullptr}, {"median_ms", nullptr}};
  std::sort(v.begin(), v.end());
  double sum = 0.0;
  for (double x : v) sum += x;
  const std::size_t n = v.size();
  const double median = n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
  return {{"mean_ms", sum / n}, {"median_ms", median}};
}

}  // namespace

PairReport evaluate_pair(const ManifestRow& row, const Pipeline& pipeline,
                         const EvaluationConfig& eval) {
  PairReport out;
  out.pair_id = row.pair_id;
  try {
    const GrayImage img1 = load_gray(row.image1);
    const GrayImage img2 = load_gray(row.image2);
    PairInput pair;
    pair.meta1 = meta_of(img1, row.pair_id + "/1");
    pair.meta2 = meta_of(img2, row.pair_id + "/2");
    pair.image1 = &img1;
    pair.image2 = &img2;
    pair.path1 = row.image1;
    pair.path2 = row.image2;
    pair.K1 = CameraIntrinsics::from_matrix(row.K1);
    pair.K2 = CameraIntrinsics::from_matrix(row.K2);

    const PipelineResult result = pipeline.run(pair);
    out.n_matches = result.matches.size();
    out.stage1_count = result.stage1_count;
    out.timings = result.timings;
    if (result.proposal) {
      out.box1 = result.proposal->box1;
      out.box2 = result.proposal->box2;
    }
    if (!result.model) throw Error(ErrorCode::kEstimationFailed, result.estimation_error);
    out.inliers = result.model->score;
    const RelativePose pose =
        pose_from_fundamental(*result.model, *pair.K1, *pair.K2, result.matches);
    const bool metric = eval.metric_translation && row.t.norm() > 0.0;
    out.error = pose_error(pose, row.R, row.t, metric);
  } catch (const Error& e) {
    out.error = PoseError::failure();
    out.failure = e.what();
    log::warn("pair {} failed: {}", row.pair_id, out.failure);
  } catch (const std::exception& e) {
    out.error = PoseError::failure();
    out.failure = e.what();
    log::warn("pair {} failed: {}", row.pair_id, out.failure);
  }
  return out;
}

void aggregate(BenchmarkReport& report, const EvaluationConfig& eval) {
  std::vector<PoseError> errors;
  errors.reserve(report.pairs.size());
  report.failed = 0;
  for (const PairReport& p : report.pairs) {
    errors.push_back(p.error);
    report.failed += p.error.failed ? 1 : 0;
  }
  report.auc_thresholds = eval.auc_thresholds;
  report.auc = pose_auc(errors, eval.auc_thresholds, eval.auc_mode, eval.auc_bin_deg);
  report.maa.reset();
  if (eval.metric_translation) {
    try {
      report.maa = maa(errors, eval.maa_grid);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kUnsupportedMetric) throw;
      log::warn("mAA skipped: {}", e.what());
    }
  }
}

BenchmarkReport run_benchmark(const std::vector<ManifestRow>& rows, const Pipeline& pipeline,
                              const EvaluationConfig& eval, int jobs) {
  if (jobs < 1) throw Error(ErrorCode::kInvalidArgument, "jobs must be at least 1");
  BenchmarkReport report;
  report.pairs.resize(rows.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < rows.size(); i = next++) {
      report.pairs[i] = evaluate_pair(rows[i], pipeline, eval);
    }
  };
  const int n_threads = std::min<int>(jobs, static_cast<int>(std::max<std::size_t>(rows.size(), 1)));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  aggregate(report, eval);
  return report;
}

json to_json(const BenchmarkReport& report, const AppConfig& config) {
  json pairs = json::array();
  for (const PairReport& p : report.pairs) {
    pairs.push_back({
        {"pair_id", p.pair_id},
        {"failed", p.error.failed},
        {"failure", p.failure.empty() ? json(nullptr) : json(p.failure)},
        {"rot_deg", number_or_null(p.error.rot_deg)},
        {"trans_deg", number_or_null(p.error.trans_deg)},
        {"combined_deg", number_or_null(p.error.combined)},
        {"trans_m", p.error.trans_m ? number_or_null(*p.error.trans_m) : json(nullptr)},
        {"n_matches", p.n_matches},
        {"stage1_matches", p.stage1_count},
        {"stage2_matches", p.n_matches - p.stage1_count},
        {"inliers", p.inliers},
        {"box1", box_json(p.box1)},
        {"box2", box_json(p.box2)},
        {"timings_ms",
         {{"stage1", p.timings.stage1_ms},
          {"mkpc", p.timings.mkpc_ms},
          {"stage2", p.timings.stage2_ms},
          {"estimation", p.timings.estimation_ms},
          {"total", p.timings.total_ms}}},
    });
  }
  json agg = {{"pairs", report.pairs.size()}, {"failed", report.failed}};
  for (std::size_t i = 0; i < report.auc.size(); ++i) {
    agg[threshold_key(report.auc_thresholds[i])] = report.auc[i];
  }
  agg["maa"] = report.maa ? json(*report.maa) : json(nullptr);
  json timings = {{"stage1", phase_stats(report.pairs, &PhaseTimings::stage1_ms)},
                  {"mkpc", phase_stats(report.pairs, &PhaseTimings::mkpc_ms)},
                  {"stage2", phase_stats(report.pairs, &PhaseTimings::stage2_ms)},
                  {"estimation", phase_stats(report.pairs, &PhaseTimings::estimation_ms)},
                  {"total", phase_stats(report.pairs, &PhaseTimings::total_ms)}};
  return {{"config", to_json(config)},
          {"pairs", pairs},
          {"aggregate", agg},
          {"timings", timings}};
}

std::string format_table(const BenchmarkReport& report) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(2);
  out << std::left << std::setw(24) << "pair" << std::right << std::setw(10) << "rot_deg"
      << std::setw(10) << "trans_deg" << std::setw(10) << "trans_m" << std::setw(9) << "matches"
      << std::setw(9) << "inliers" << "  status\n";
  for (const PairReport& p : report.pairs) {
    out << std::left << std::setw(24) << p.pair_id << std::right;
    if (p.error.failed) {
      out << std::setw(10) << "-" << std::setw(10) << "-" << std::setw(10) << "-";
    } else {
      out << std::setw(10) << p.error.rot_deg << std::setw(10) << p.error.trans_deg;
      if (p.error.trans_m) {
        out << std::setw(10) << *p.error.trans_m;
      } else {
        out << std::setw(10) << "-";
      }
    }
    out << std::setw(9) << p.n_matches << std::setw(9) << p.inliers << "  "
        << (p.failure.empty() ? "ok" : "FAILED " + p.failure) << '\n';
  }
  out << '\n';
  for (std::size_t i = 0; i < report.auc.size(); ++i) {
    out << "AUC@" << std::defaultfloat << report.auc_thresholds[i] << std::fixed
        << "deg: " << report.auc[i] << '\n';
  }
  if (report.maa) out << "mAA: " << *report.maa << '\n';
  out << "failed: " << report.failed << " / " << report.pairs.size() << '\n';
  return out.str();
}

}  // namespace covis
