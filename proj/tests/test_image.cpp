#include <doctest.h>

#include <cmath>

#include "covis/image.hpp"
#include "covis/synthetic.hpp"
#include "support.hpp"

using namespace covis;
using covis::test::error_of;
using covis::test::TempDir;

namespace {

// Levels that survive 8-bit quantisation exactly.
GrayImage quantised_ramp(int w, int h) {
  GrayImage img(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) img(y, x) = static_cast<float>((x * 7 + y * 13) % 256) / 255.0f;
  }
  return img;
}

}  // namespace

TEST_CASE("PNG and PGM round trips") {
  const TempDir dir("image");
  const GrayImage img = quantised_ramp(37, 21);
  save_png(img, dir / "a.png");
  save_pgm(img, dir / "a.pgm");
  const GrayImage png = load_gray(dir / "a.png");
  const GrayImage pgm = load_gray(dir / "a.pgm");
  REQUIRE(width(png) == 37);
  REQUIRE(height(png) == 21);
  CHECK((png - img).abs().maxCoeff() < 1e-6f);
  CHECK((pgm - img).abs().maxCoeff() < 1e-6f);

  // RGB input is reduced to gray; a gray RGB image keeps its level.
  RgbImage rgb(4, 3);
  for (int y = 0; y < 3; ++y) {
    for (int x = 0; x < 4; ++x) rgb.set(x, y, {255, 255, 255});
  }
  save_png(rgb, dir / "rgb.png");
  const GrayImage back = load_gray(dir / "rgb.png");
  CHECK(back.minCoeff() == doctest::Approx(1.0f));
}

TEST_CASE("16-bit PGM with comments") {
  const TempDir dir("pgm16");
  std::string data = "P5\n# comment\n2 1\n65535\n";
  data += std::string("\xff\xff\x00\x00", 4);
  test::write_text(dir / "b.pgm", data);
  const GrayImage img = load_gray(dir / "b.pgm");
  CHECK(img(0, 0) == doctest::Approx(1.0f));
  CHECK(img(0, 1) == 0.0f);
}

TEST_CASE("image IO errors") {
  const TempDir dir("imgerr");
  CHECK(error_of([&] { load_gray(dir / "missing.png"); }) == ErrorCode::kIo);
  test::write_text(dir / "junk.png", "definitely not an image");
  CHECK(error_of([&] { load_gray(dir / "junk.png"); }) == ErrorCode::kIo);
  test::write_text(dir / "short.pgm", "P5\n4 4\n255\nab");
  CHECK(error_of([&] { load_gray(dir / "short.pgm"); }) == ErrorCode::kIo);
  CHECK(error_of([&] { save_png(quantised_ramp(3, 3), dir / "no" / "such" / "dir.png"); }) ==
        ErrorCode::kIo);
}

TEST_CASE("crop slices whole pixels") {
  const GrayImage img = quantised_ramp(20, 10);
  const GrayImage c = crop(img, {3, 2, 8, 9});
  CHECK(width(c) == 5);
  CHECK(height(c) == 7);
  CHECK(c(0, 0) == img(2, 3));
  CHECK(c(6, 4) == img(8, 7));
  CHECK((crop(img, {0, 0, 20, 10}) == img).all());
  CHECK(error_of([&] { crop(img, {-1, 0, 5, 5}); }) == ErrorCode::kInvalidArgument);
  CHECK(error_of([&] { crop(img, {0, 0, 21, 5}); }) == ErrorCode::kInvalidArgument);
  CHECK(error_of([&] { crop(img, {4, 4, 4, 5}); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("resize follows the coordinate map") {
  const GrayImage img = quantised_ramp(100, 60);
  CHECK((resize(img, 1.0) == img).all());
  const GrayImage up = resize(img, 2.0);
  CHECK(width(up) == 200);
  CHECK(height(up) == 120);
  // Source (x, y) lands at (2x, 2y).
  for (int y = 0; y < 59; y += 7) {
    for (int x = 0; x < 99; x += 11) CHECK(up(2 * y, 2 * x) == doctest::Approx(img(y, x)));
  }
  const GrayImage down = resize(img, 0.5);
  CHECK(width(down) == 50);
  CHECK(height(down) == 30);

  // Downscaling a constant image keeps it constant.
  const GrayImage flat = GrayImage::Constant(40, 30, 0.25f);
  CHECK((resize(flat, 0.3) - 0.25f).abs().maxCoeff() < 1e-6f);
  CHECK(error_of([&] { resize(img, 0.0); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("bilinear sampling") {
  GrayImage img(2, 2);
  img << 0.0f, 1.0f, 0.5f, 0.5f;
  CHECK(sample_bilinear(img, 0.5, 0.0, -1.0f) == doctest::Approx(0.5f));
  CHECK(sample_bilinear(img, 0.5, 0.5, -1.0f) == doctest::Approx(0.5f));
  CHECK(sample_bilinear(img, 1.0, 1.0, -1.0f) == doctest::Approx(0.5f));
  CHECK(sample_bilinear(img, 1.5, 0.0, -1.0f) == -1.0f);
  CHECK(sample_bilinear(img, -0.1, 0.0, -1.0f) == -1.0f);
}

TEST_CASE("warp_homography") {
  const GrayImage img = render_texture(3, 64, 48);
  CHECK((warp_homography(img, Eigen::Matrix3d::Identity(), 64, 48) - img).abs().maxCoeff() <
        1e-6f);

  Eigen::Matrix3d shift = Eigen::Matrix3d::Identity();
  shift(0, 2) = 5.0;
  const GrayImage moved = warp_homography(img, shift, 64, 48, 0.5f);
  CHECK(moved(10, 20) == doctest::Approx(img(10, 15)));
  CHECK(moved(10, 2) == 0.5f);
}

TEST_CASE("gray to RGB") {
  GrayImage img(1, 3);
  img << 0.0f, 0.5f, 2.0f;
  const RgbImage rgb = to_rgb(img);
  REQUIRE(rgb.data.size() == 9);
  CHECK(rgb.data[0] == 0);
  CHECK(rgb.data[3] == 128);
  CHECK(rgb.data[8] == 255);
  CHECK(meta_of(img, "x").width == 3);
}
