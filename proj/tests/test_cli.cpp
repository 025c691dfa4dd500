#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <json.hpp>

#include "support.hpp"

using covis::test::read_text;
using covis::test::TempDir;
using covis::test::write_text;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Runs the CLI with stdout and stderr captured to files in `dir`.
int run(const TempDir& dir, const std::string& args) {
  const std::string cmd = std::string(COVIS_CLI) + " " + args + " > " +
                          (dir / "stdout.txt").string() + " 2> " +
                          (dir / "stderr.txt").string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

json without_timings(json report) {
  report.erase("timings");
  for (json& p : report["pairs"]) p.erase("timings_ms");
  return report;
}

// Small rendered pairs and a config that matches at their native size.
struct Workspace {
  TempDir dir{"cli"};
  fs::path data = dir / "data";
  fs::path config = dir / "small.json";

  Workspace() {
    REQUIRE(run(dir, "--seed 5 --out " + q(data) + " synth --pairs 2 --width 400 --height 300") ==
            0);
    write_text(config, R"({"stage1": [{"resolution": 400}]})");
  }
};

}  // namespace

TEST_CASE("usage and config errors") {
  const TempDir dir("cli-usage");
  CHECK(run(dir, "") == 1);
  CHECK(run(dir, "frobnicate") == 1);
  CHECK(run(dir, "--help") == 0);
  CHECK(run(dir, "--config /nonexistent.json config") == 1);
  write_text(dir / "bad.json", R"({"mkpc": {"tee": 1}})");
  CHECK(run(dir, "--config " + q(dir / "bad.json") + " config") == 2);
  CHECK(read_text(dir / "stderr.txt").find("tee") != std::string::npos);
  write_text(dir / "ok.json", R"({"mkpc": {"T": 0.2}})");
  CHECK(run(dir, "--seed 11 --config " + q(dir / "ok.json") + " config") == 0);
  const json echo = json::parse(read_text(dir / "stdout.txt"));
  CHECK(echo["mkpc"]["T"] == 0.2);
  CHECK(echo["estimator"]["seed"] == 11);
}

TEST_CASE("synth is deterministic") {
  const Workspace ws;
  const fs::path again = ws.dir / "again";
  REQUIRE(run(ws.dir, "--seed 5 --out " + q(again) + " synth --pairs 2 --width 400 --height 300") ==
          0);
  for (const char* f : {"synth_0_1.png", "synth_1_2.png"}) {
    CHECK(read_text(ws.data / f) == read_text(again / f));
  }
  const std::string manifest = read_text(ws.data / "manifest.csv");
  CHECK(manifest.rfind("pair_id,image1,image2,K1_0", 0) == 0);
  // Relative image paths keep the directory relocatable.
  CHECK(manifest.find(ws.data.string()) == std::string::npos);
}

TEST_CASE("match writes artifacts deterministically") {
  const Workspace ws;
  const std::string images = q(ws.data / "synth_0_1.png") + " " + q(ws.data / "synth_0_2.png");
  const fs::path out1 = ws.dir / "m1";
  const fs::path out2 = ws.dir / "m2";
  REQUIRE(run(ws.dir, "--config " + q(ws.config) + " --out " + q(out1) + " match " + images) == 0);
  REQUIRE(run(ws.dir, "--config " + q(ws.config) + " --out " + q(out2) + " match " + images) == 0);
  for (const char* f : {"matches.json", "model.json", "overlay1.png", "overlay2.png", "pair.png"}) {
    CHECK(fs::exists(out1 / f));
  }
  CHECK(read_text(out1 / "overlay1.png") == read_text(out2 / "overlay1.png"));
  CHECK(read_text(out1 / "pair.png") == read_text(out2 / "pair.png"));
  CHECK(read_text(out1 / "matches.json") == read_text(out2 / "matches.json"));

  const json matches = json::parse(read_text(out1 / "matches.json"));
  const json model = json::parse(read_text(out1 / "model.json"));
  CHECK(matches["matches"].size() ==
        matches["stage1_count"].get<std::size_t>() + matches["stage2_count"].get<std::size_t>());
  REQUIRE(model["estimated"] == true);
  int inliers = 0;
  for (const json& m : matches["matches"]) inliers += m["inlier"].get<bool>() ? 1 : 0;
  CHECK(model["inliers"] == inliers);
}

TEST_CASE("missing input leaves no artifacts") {
  const Workspace ws;
  const fs::path out = ws.dir / "never";
  CHECK(run(ws.dir, "--out " + q(out) + " match " + q(ws.data / "synth_0_1.png") + " " +
                        q(ws.dir / "absent.png")) == 3);
  CHECK_FALSE(fs::exists(out));
  CHECK(run(ws.dir, "--out " + q(out) + " crop " + q(ws.dir / "absent.png") + " " +
                        q(ws.data / "synth_0_1.png")) == 3);
  CHECK_FALSE(fs::exists(out));
}

TEST_CASE("crop command") {
  const Workspace ws;
  const fs::path out = ws.dir / "crop";
  REQUIRE(run(ws.dir, "--config " + q(ws.config) + " --out " + q(out) + " crop " +
                          q(ws.data / "synth_1_1.png") + " " + q(ws.data / "synth_1_2.png")) == 0);
  const json p = json::parse(read_text(out / "proposal.json"));
  CHECK(p["box1"].size() == 4);
  CHECK(p["stage1_count"].get<int>() > 0);
  for (const char* f : {"crop1.png", "crop2.png", "overlay1.png", "overlay2.png"}) {
    CHECK(fs::exists(out / f));
  }
}

TEST_CASE("benchmark reports") {
  const Workspace ws;
  const fs::path manifest = ws.data / "manifest.csv";

  // An empty stage two is the single-stage baseline.
  const fs::path baseline = ws.dir / "baseline.json";
  const fs::path empty2 = ws.dir / "empty2.json";
  const fs::path cfg_empty2 = ws.dir / "empty2-config.json";
  write_text(cfg_empty2, R"({"stage1": [{"resolution": 400}], "stage2": []})");
  REQUIRE(run(ws.dir, "--config " + q(ws.config) + " --out " + q(baseline) + " benchmark " +
                          q(manifest)) == 0);
  REQUIRE(run(ws.dir, "--config " + q(cfg_empty2) + " --out " + q(empty2) + " benchmark " +
                          q(manifest)) == 0);
  const json base = json::parse(read_text(baseline));
  CHECK(without_timings(base) == without_timings(json::parse(read_text(empty2))));
  CHECK(fs::exists(ws.dir / "baseline.txt"));
  CHECK(base["aggregate"]["pairs"] == 2);
  CHECK(base["aggregate"]["failed"] == 0);

  // Parallel evaluation changes only the timings.
  const fs::path parallel = ws.dir / "parallel.json";
  REQUIRE(run(ws.dir, "--jobs 2 --config " + q(ws.config) + " --out " + q(parallel) +
                          " benchmark " + q(manifest)) == 0);
  CHECK(without_timings(base) == without_timings(json::parse(read_text(parallel))));

  // An unreadable image fails its row only.
  std::string text = read_text(manifest);
  const auto pos = text.find("synth_1_2.png");
  REQUIRE(pos != std::string::npos);
  text.replace(pos, 13, "synth_9_9.png");
  const fs::path broken = ws.data / "broken.csv";
  write_text(broken, text);
  const fs::path report = ws.dir / "broken.json";
  REQUIRE(run(ws.dir, "--config " + q(ws.config) + " --out " + q(report) + " benchmark " +
                          q(broken)) == 0);
  const json r = json::parse(read_text(report));
  CHECK(r["aggregate"]["failed"] == 1);
  CHECK(r["pairs"][1]["failed"] == true);
  CHECK(r["pairs"][0]["failed"] == false);
}

TEST_CASE("malformed manifests exit cleanly") {
  const TempDir dir("cli-manifest");
  write_text(dir / "empty.csv", "");
  CHECK(run(dir, "--out " + q(dir / "r.json") + " benchmark " + q(dir / "empty.csv")) == 5);
  CHECK(read_text(dir / "stderr.txt").find("empty") != std::string::npos);
  CHECK_FALSE(fs::exists(dir / "r.json"));
  CHECK(run(dir, "--out " + q(dir / "r.json") + " benchmark " + q(dir / "absent.csv")) == 3);
}

TEST_CASE("external matcher from the command line") {
  const Workspace ws;
  const fs::path cfg = ws.dir / "external.json";
  json doc = {{"stage1", {{{"kind", "external"},
                           {"endpoint", std::string(COVIS_WORKER) + " --backend builtin"},
                           {"resolution", 400}}}}};
  write_text(cfg, doc.dump());
  const fs::path out = ws.dir / "ext";
  REQUIRE(run(ws.dir, "--config " + q(cfg) + " --out " + q(out) + " match " +
                          q(ws.data / "synth_0_1.png") + " " + q(ws.data / "synth_0_2.png")) == 0);
  const json via_worker = json::parse(read_text(out / "matches.json"));

  const fs::path local = ws.dir / "local";
  REQUIRE(run(ws.dir, "--config " + q(ws.config) + " --out " + q(local) + " match " +
                          q(ws.data / "synth_0_1.png") + " " + q(ws.data / "synth_0_2.png")) == 0);
  CHECK(via_worker["stage1_count"] ==
        json::parse(read_text(local / "matches.json"))["stage1_count"]);

  doc["stage1"][0]["endpoint"] = std::string(COVIS_WORKER) + " --backend crash";
  write_text(cfg, doc.dump());
  CHECK(run(ws.dir, "--config " + q(cfg) + " --out " + q(ws.dir / "crash") + " match " +
                        q(ws.data / "synth_0_1.png") + " " + q(ws.data / "synth_0_2.png")) == 4);
}
