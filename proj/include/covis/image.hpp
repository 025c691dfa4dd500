#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "covis/core.hpp"

namespace covis {

// Grayscale intensities in [0, 1]; rows are image rows (height x width).
template <typename Scalar>
using ImageT =
    Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using GrayImage = ImageT<float>;

inline int width(const GrayImage& img) { return static_cast<int>(img.cols()); }
inline int height(const GrayImage& img) { return static_cast<int>(img.rows()); }

ImageMeta meta_of(const GrayImage& img, std::string id = {});

// Bilinear sample at corner-anchored (x, y); `fill` outside [0,w-1]x[0,h-1].
float sample_bilinear(const GrayImage& img, double x, double y, float fill);

// Slices the whole-pixel box [x_min, x_max) x [y_min, y_max).
GrayImage crop(const GrayImage& img, const CropBox& box);

// Resamples so that source point (x, y) lands at (x * scale, y * scale).
// Downscaling pre-blurs with a Gaussian matched to the scale.
GrayImage resize(const GrayImage& img, double scale);

GrayImage gaussian_blur(const GrayImage& img, double sigma);

// out(x) = img(H^-1 x), `fill` where the source falls outside the frame.
GrayImage warp_homography(const GrayImage& img, const Eigen::Matrix3d& H,
                          int out_width, int out_height, float fill = 0.5f);

struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;  // interleaved RGB, row-major

  RgbImage() = default;
  RgbImage(int w, int h) : width(w), height(h), data(std::size_t(w) * h * 3, 0) {}

  void set(int x, int y, const std::array<std::uint8_t, 3>& c);
};

RgbImage to_rgb(const GrayImage& img);

// PNG (gray, gray+alpha, RGB, RGBA, 8/16-bit) and binary PGM are accepted.
GrayImage load_gray(const std::filesystem::path& path);
void save_png(const GrayImage& img, const std::filesystem::path& path);
void save_png(const RgbImage& img, const std::filesystem::path& path);
void save_pgm(const GrayImage& img, const std::filesystem::path& path);

}  // namespace covis
