#include <doctest.h>

#include <algorithm>
#include <random>

#include "covis/matchers.hpp"
#include "covis/synthetic.hpp"
#include "support.hpp"

using namespace covis;
using covis::test::error_of;

namespace {

GrayImage checkerboard(int squares, int side) {
  GrayImage img(squares * side, squares * side);
  for (int y = 0; y < img.rows(); ++y) {
    for (int x = 0; x < img.cols(); ++x) {
      img(y, x) = ((x / side + y / side) % 2 == 0) ? 0.1f : 0.9f;
    }
  }
  return img;
}

GrayImage noise(std::uint64_t seed, int w, int h) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  GrayImage img(h, w);
  for (Eigen::Index i = 0; i < img.size(); ++i) img.data()[i] = u(rng);
  return img;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

}  // namespace

TEST_CASE("constant image has no corners") {
  CHECK(detect_corners(GrayImage::Constant(64, 64, 0.4f)).empty());
  CHECK(error_of([] { detect_corners(GrayImage::Constant(15, 64, 0.4f)); }) ==
        ErrorCode::kInvalidArgument);
}

TEST_CASE("checkerboard crossings") {
  // Edges lie between pixel centres, so the crossing nearest lattice node
  // (32 i, 32 j) sits at 32 i - 0.5 in corner-anchored coordinates.
  const auto corners = detect_corners(checkerboard(8, 32));
  std::vector<bool> hit(49, false);
  for (const Corner& c : corners) {
    const int i = static_cast<int>(std::lround(c.pt.x() / 32.0));
    const int j = static_cast<int>(std::lround(c.pt.y() / 32.0));
    if (i < 1 || i > 7 || j < 1 || j > 7) continue;
    if ((c.pt - Point2(32.0 * i, 32.0 * j)).norm() <= 1.0) hit[(j - 1) * 7 + (i - 1)] = true;
  }
  CHECK(std::count(hit.begin(), hit.end(), true) == 49);
  // Nothing away from the crossings.
  for (const Corner& c : corners) {
    const Point2 nearest = (c.pt / 32.0).array().round().matrix() * 32.0;
    CHECK((c.pt - nearest).norm() <= 1.0);
  }
}

TEST_CASE("single square yields its four vertices") {
  GrayImage img = GrayImage::Constant(96, 96, 0.0f);
  img.block(30, 20, 40, 50) = 1.0f;  // rows 30..69, cols 20..69
  CornerParams p;
  p.max_kp = 4;
  const auto corners = detect_corners(img, p);
  REQUIRE(corners.size() == 4);
  for (const Point2& v : {Point2(19.5, 29.5), Point2(69.5, 29.5), Point2(19.5, 69.5),
                          Point2(69.5, 69.5)}) {
    const bool found = std::any_of(corners.begin(), corners.end(),
                                   [&](const Corner& c) { return (c.pt - v).norm() <= 1.0; });
    CHECK(found);
  }
  for (std::size_t i = 1; i < corners.size(); ++i) {
    CHECK(corners[i - 1].response >= corners[i].response);
  }
}

TEST_CASE("identical images self-match") {
  const GrayImage img = render_texture(21, 320, 240);
  const RawMatches m = match_images(img, img);
  REQUIRE(m.size() >= 50);
  for (const auto& [p, q] : m.pairs) CHECK((p - q).norm() <= 0.5);
  for (double c : m.confidences) {
    CHECK(c >= 0.0);
    CHECK(c <= 1.0);
  }
}

TEST_CASE("shift is recovered at several working resolutions") {
  Eigen::Matrix3d H = Eigen::Matrix3d::Identity();
  H(0, 2) = 10.0;
  const auto [a, b] = render_planar_pair(31, H, 640, 480);
  const BuiltinMatcher matcher;
  for (int res : {640, 840}) {
    MatchView v1{&a, meta_of(a, "a"), {}, CropBox::full(meta_of(a)), res};
    MatchView v2{&b, meta_of(b, "b"), {}, CropBox::full(meta_of(b)), res};
    const RawMatches m = matcher.match(v1, v2);
    REQUIRE(m.size() >= 50);
    const double s = v1.scale();
    std::vector<double> dx, dy;
    for (const auto& [p, q] : m.pairs) {
      dx.push_back((q.x() - p.x()) / s);
      dy.push_back((q.y() - p.y()) / s);
    }
    CHECK(std::abs(median(dx) - 10.0) <= 0.5);
    CHECK(std::abs(median(dy)) <= 0.5);
  }
}

TEST_CASE("unrelated noise images rarely match") {
  MatchParams p;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const RawMatches m = match_images(noise(2 * seed, 256, 256), noise(2 * seed + 1, 256, 256), p);
    CHECK(m.size() < static_cast<std::size_t>(0.1 * p.corners.max_kp));
  }
}

TEST_CASE("matching is symmetric and deterministic") {
  Eigen::Matrix3d H = Eigen::Matrix3d::Identity();
  H(0, 2) = 6.0;
  H(1, 2) = -4.0;
  const auto [a, b] = render_planar_pair(5, H, 320, 240);
  const RawMatches ab = match_images(a, b);
  const RawMatches ba = match_images(b, a);
  const RawMatches again = match_images(a, b);
  CHECK(ab.pairs == again.pairs);
  CHECK(ab.confidences == again.confidences);
  REQUIRE(ab.size() == ba.size());
  std::vector<std::pair<Point2, Point2>> reversed;
  for (const auto& [p, q] : ba.pairs) reversed.emplace_back(q, p);
  auto less = [](const auto& l, const auto& r) {
    return std::lexicographical_compare(l.first.data(), l.first.data() + 2, r.first.data(),
                                        r.first.data() + 2);
  };
  auto sorted_ab = ab.pairs;
  std::sort(sorted_ab.begin(), sorted_ab.end(), less);
  std::sort(reversed.begin(), reversed.end(), less);
  CHECK(sorted_ab == reversed);
}

TEST_CASE("matches stay inside the working frames") {
  const auto [a, b] = render_planar_pair(9, Eigen::Matrix3d::Identity(), 400, 300);
  const BuiltinMatcher matcher;
  MatchView v1{&a, meta_of(a, "a"), {}, CropBox{50, 40, 330, 260}, 200};
  MatchView v2{&b, meta_of(b, "b"), {}, CropBox{60, 30, 350, 290}, 200};
  const RawMatches m = matcher.match(v1, v2);
  const auto [w1, h1] = v1.working_size();
  const auto [w2, h2] = v2.working_size();
  CHECK(w1 == 200);
  m.validate(w1, h1, w2, h2);
  for (const auto& [p, q] : m.pairs) {
    CHECK(CropBox{0, 0, double(w1), double(h1)}.contains(p));
    CHECK(CropBox{0, 0, double(w2), double(h2)}.contains(q));
  }
}

TEST_CASE("RawMatches validation") {
  RawMatches m;
  m.pairs.push_back({{1, 1}, {2, 2}});
  m.confidences = {0.5};
  m.validate(10, 10, 10, 10);
  m.confidences = {1.5};
  CHECK(error_of([&] { m.validate(10, 10, 10, 10); }) == ErrorCode::kProtocolError);
  m.confidences = {};
  CHECK(error_of([&] { m.validate(10, 10, 10, 10); }) == ErrorCode::kProtocolError);
  m.confidences = {0.5};
  m.pairs[0].second = {25, 2};
  CHECK(error_of([&] { m.validate(10, 10, 10, 10); }) == ErrorCode::kProtocolError);
}

TEST_CASE("MatcherSpec validation") {
  MatcherSpec spec;
  spec.validate();
  spec.resolution = 63;
  CHECK(error_of([&] { spec.validate(); }) == ErrorCode::kConfig);
  spec.resolution = 640;
  spec.kind = MatcherSpec::Kind::kExternal;
  if (!std::getenv("COVIS_MATCHER_PATH")) {
    CHECK(error_of([&] { spec.validate(); }) == ErrorCode::kConfig);
  }
  spec.endpoint = "worker";
  spec.validate();

  spec.options["timeout_s"] = "2.5";
  CHECK(spec.option("timeout_s", 60) == 2.5);
  CHECK(spec.option("missing", 7) == 7);
  spec.options["bad"] = "abc";
  CHECK(error_of([&] { spec.option("bad", 1); }) == ErrorCode::kConfig);

  MatcherSpec builtin;
  CHECK(make_matcher(builtin)->name() == "harris-ncc");
  builtin.name = "coarse";
  CHECK(make_matcher(builtin)->name() == "coarse");
}
