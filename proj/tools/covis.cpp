#include <iostream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>

#include "covis/commands.hpp"
#include "covis/log.hpp"

int main(int argc, char** argv) {
  CLI::App app{"covis: two-stage co-visibility matching and pose benchmarking"};
  app.require_subcommand(1);

  covis::CommonOptions opts;
  std::string config_path;
  std::uint64_t seed = 0;
  std::string out;
  bool verbose = false;
  app.add_option("--config", config_path, "JSON pipeline configuration")->check(CLI::ExistingFile);
  app.add_option("--jobs", opts.jobs, "Pairs processed in parallel")->check(CLI::PositiveNumber);
  auto* seed_opt = app.add_option("--seed", seed, "Base seed for RANSAC and scene generation");
  app.add_option("--out", out, "Output directory (report file for benchmark)");
  app.add_flag("-v,--verbose", verbose, "Debug logging");
  app.fallthrough();

  std::string image1, image2, manifest;
  auto* match = app.add_subcommand("match", "Match one image pair and write artifacts");
  match->add_option("image1", image1)->required();
  match->add_option("image2", image2)->required();

  auto* crop = app.add_subcommand("crop", "Stage one and crop proposal only");
  crop->add_option("image1", image1)->required();
  crop->add_option("image2", image2)->required();

  auto* bench = app.add_subcommand("benchmark", "Evaluate relative pose over a manifest");
  bench->add_option("manifest", manifest)->required();

  int pairs = 10, w = 640, h = 480;
  auto* synth = app.add_subcommand("synth", "Render synthetic pairs and their manifest");
  synth->add_option("--pairs", pairs, "Number of pairs");
  synth->add_option("--width", w, "Image width");
  synth->add_option("--height", h, "Image height");

  auto* config = app.add_subcommand("config", "Print the resolved configuration");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? covis::kExitOk : covis::kExitUsage;
  }

  spdlog::set_default_logger(spdlog::stderr_color_mt("covis"));
  spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);
  if (!config_path.empty()) opts.config = config_path;
  if (*seed_opt) opts.seed = seed;
  opts.out = out;

  if (*match) return covis::cmd_match(image1, image2, opts);
  if (*crop) return covis::cmd_crop(image1, image2, opts);
  if (*bench) return covis::cmd_benchmark(manifest, opts);
  if (*synth) return covis::cmd_synth(pairs, w, h, opts);
  if (*config) return covis::cmd_config(opts);
  return covis::kExitUsage;
}
