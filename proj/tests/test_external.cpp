#include <doctest.h>

#include "covis/external_matcher.hpp"
#include "covis/synthetic.hpp"
#include "support.hpp"

using namespace covis;
using covis::test::error_of;
using covis::test::TempDir;

namespace {

MatcherSpec stub(const std::string& backend, const std::string& extra = "") {
  MatcherSpec spec;
  spec.kind = MatcherSpec::Kind::kExternal;
  spec.name = "stub";
  spec.endpoint = std::string(COVIS_WORKER) + " --backend " + backend + extra;
  spec.options["timeout_s"] = "10";
  return spec;
}

struct Pair {
  TempDir dir{"external"};
  GrayImage a, b;
  std::filesystem::path pa, pb;

  Pair() {
    Eigen::Matrix3d H = Eigen::Matrix3d::Identity();
    H(0, 2) = 7.0;
    auto [x, y] = render_planar_pair(19, H, 320, 240);
    pa = dir / "a.png";
    pb = dir / "b.png";
    save_png(x, pa);
    save_png(y, pb);
    // Reload so in-process pixels equal what the worker reads.
    a = load_gray(pa);
    b = load_gray(pb);
  }

  MatchView view(bool first, CropBox box, int res = 256) const {
    const GrayImage& img = first ? a : b;
    return {&img, meta_of(img, first ? "a" : "b"), first ? pa : pb, box, res};
  }
  MatchView full(bool first, int res = 256) const {
    return view(first, CropBox::full(meta_of(first ? a : b)), res);
  }
};

}  // namespace

TEST_CASE("echo worker round trip") {
  const Pair p;
  const ExternalMatcher m(stub("echo"));
  CHECK(m.timeout() == std::chrono::milliseconds(10000));
  const RawMatches out = m.match(p.full(true), p.full(false));
  REQUIRE(out.size() == 3);
  CHECK(out.pairs[0].first == Point2(1, 2));
  CHECK(out.pairs[2].second == Point2(11, 12));
  CHECK(out.confidences == std::vector<double>{0.9, 0.8, 0.7});
  // The pooled worker serves further requests.
  for (int i = 0; i < 5; ++i) CHECK(m.match(p.full(true), p.full(false)).size() == 3);
}

TEST_CASE("endpoint falls back to the environment") {
  MatcherSpec spec = stub("echo");
  spec.endpoint.clear();
  ::setenv("COVIS_MATCHER_PATH", (std::string(COVIS_WORKER) + " --backend echo").c_str(), 1);
  const ExternalMatcher m(spec);
  CHECK(m.command().find("--backend echo") != std::string::npos);
  ::unsetenv("COVIS_MATCHER_PATH");
  CHECK(error_of([&] { ExternalMatcher{spec}; }) == ErrorCode::kConfig);
}

TEST_CASE("malformed worker replies are protocol errors") {
  const Pair p;
  CHECK(error_of([&] { ExternalMatcher(stub("mismatch")).match(p.full(true), p.full(false)); }) ==
        ErrorCode::kProtocolError);
  CHECK(error_of([&] { ExternalMatcher(stub("garbage")).match(p.full(true), p.full(false)); }) ==
        ErrorCode::kProtocolError);
  // Echo points fall outside a 10-pixel working frame.
  CHECK(error_of([&] {
          ExternalMatcher(stub("echo")).match(p.view(true, {0, 0, 10, 10}, 10),
                                              p.view(false, {0, 0, 10, 10}, 10));
        }) == ErrorCode::kProtocolError);
}

TEST_CASE("timeouts") {
  const Pair p;
  MatcherSpec slow = stub("slow", " --delay 3");
  slow.options["timeout_s"] = "0.3";
  CHECK(error_of([&] { ExternalMatcher(slow).match(p.full(true), p.full(false)); }) ==
        ErrorCode::kTimeout);
  MatcherSpec silent = stub("silent");
  silent.options["timeout_s"] = "0.3";
  CHECK(error_of([&] { ExternalMatcher(silent).match(p.full(true), p.full(false)); }) ==
        ErrorCode::kTimeout);
}

TEST_CASE("unavailable workers") {
  const Pair p;
  CHECK(error_of([&] { ExternalMatcher(stub("crash")).match(p.full(true), p.full(false)); }) ==
        ErrorCode::kMatcherUnavailable);
  MatcherSpec missing = stub("echo");
  missing.endpoint = "/nonexistent/covis-worker";
  CHECK(error_of([&] { ExternalMatcher(missing).match(p.full(true), p.full(false)); }) ==
        ErrorCode::kMatcherUnavailable);
}

TEST_CASE("worker error replies keep the worker usable") {
  const Pair p;
  const ExternalMatcher m(stub("grid"));
  CHECK(error_of([&] { m.match_files("/nonexistent/a.png", p.pb.string(), 256); }) ==
        ErrorCode::kMatcherUnavailable);
  const RawMatches out = m.match(p.full(true), p.full(false));
  CHECK(out.size() == 64);
}

TEST_CASE("builtin worker agrees with the in-process matcher") {
  const Pair p;
  const ExternalMatcher ext(stub("builtin"));
  const BuiltinMatcher local;
  for (const CropBox& box : {CropBox::full(meta_of(p.a)), CropBox{20, 10, 260, 200}}) {
    const MatchView v1 = p.view(true, box);
    const MatchView v2 = p.view(false, box);
    const RawMatches r = ext.match(v1, v2);
    const RawMatches l = local.match(v1, v2);
    REQUIRE(r.size() == l.size());
    CHECK(r.size() >= 20);
    for (std::size_t i = 0; i < r.size(); ++i) {
      CHECK((r.pairs[i].first - l.pairs[i].first).norm() <= 0.5);
      CHECK((r.pairs[i].second - l.pairs[i].second).norm() <= 0.5);
    }
  }
}

TEST_CASE("make_matcher builds external matchers") {
  const Pair p;
  const auto m = make_matcher(stub("echo"));
  CHECK(m->name() == "stub");
  CHECK(m->match(p.full(true), p.full(false)).size() == 3);
}
