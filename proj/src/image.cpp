#include "covis/image.hpp"

#include <Eigen/LU>

#include <png.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

#include "covis/error.hpp"

namespace covis {

ImageMeta meta_of(const GrayImage& img, std::string id) {
  return {std::move(id), width(img), height(img)};
}

float sample_bilinear(const GrayImage& img, double x, double y, float fill) {
  const double w = img.cols();
  const double h = img.rows();
  if (!(x >= 0.0 && y >= 0.0 && x <= w - 1.0 && y <= h - 1.0)) return fill;
  const int x0 = static_cast<int>(x);
  const int y0 = static_cast<int>(y);
  const int x1 = std::min(x0 + 1, static_cast<int>(w) - 1);
  const int y1 = std::min(y0 + 1, static_cast<int>(h) - 1);
  const float fx = static_cast<float>(x - x0);
  const float fy = static_cast<float>(y - y0);
  const float top = (1.0f - fx) * img(y0, x0) + fx * img(y0, x1);
  const float bottom = (1.0f - fx) * img(y1, x0) + fx * img(y1, x1);
  return (1.0f - fy) * top + fy * bottom;
}

GrayImage crop(const GrayImage& img, const CropBox& box) {
  const int x0 = static_cast<int>(box.x_min);
  const int y0 = static_cast<int>(box.y_min);
  const int x1 = static_cast<int>(box.x_max);
  const int y1 = static_cast<int>(box.y_max);
  if (x0 < 0 || y0 < 0 || x1 > width(img) || y1 > height(img) || x1 <= x0 ||
      y1 <= y0) {
    throw Error(ErrorCode::kInvalidArgument, "crop box outside the image");
  }
  return img.block(y0, x0, y1 - y0, x1 - x0);
}

GrayImage gaussian_blur(const GrayImage& img, double sigma) {
  if (!(sigma > 0.0)) return img;
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  Eigen::ArrayXf kernel(2 * radius + 1);
  for (int i = -radius; i <= radius; ++i) {
    kernel(i + radius) = static_cast<float>(std::exp(-0.5 * i * i / (sigma * sigma)));
  }
  kernel /= kernel.sum();

  const int w = width(img);
  const int h = height(img);
  GrayImage tmp(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      float acc = 0.0f;
      for (int k = -radius; k <= radius; ++k) {
        acc += kernel(k + radius) * img(y, std::clamp(x + k, 0, w - 1));
      }
      tmp(y, x) = acc;
    }
  }
  GrayImage out(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      float acc = 0.0f;
      for (int k = -radius; k <= radius; ++k) {
        acc += kernel(k + radius) * tmp(std::clamp(y + k, 0, h - 1), x);
      }
      out(y, x) = acc;
    }
  }
  return out;
}

GrayImage resize(const GrayImage& img, double scale) {
  if (!(scale > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "resize scale must be positive");
  }
  if (scale == 1.0) return img;
  const auto [w, h] = resized_size(width(img), height(img), scale);
  const GrayImage src =
      scale < 1.0 ? gaussian_blur(img, 0.5 * std::sqrt(1.0 / (scale * scale) - 1.0))
                  : img;
  GrayImage out(h, w);
  const double inv = 1.0 / scale;
  const double max_x = width(src) - 1.0;
  const double max_y = height(src) - 1.0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      // Clamp so the rounded-up last row/column replicates the border.
      out(y, x) = sample_bilinear(src, std::min(x * inv, max_x),
                                  std::min(y * inv, max_y), 0.0f);
    }
  }
  return out;
}

GrayImage warp_homography(const GrayImage& img, const Eigen::Matrix3d& H,
                          int out_width, int out_height, float fill) {
  const Eigen::Matrix3d H_inv = H.inverse();
  GrayImage out(out_height, out_width);
  for (int y = 0; y < out_height; ++y) {
    for (int x = 0; x < out_width; ++x) {
      const Eigen::Vector3d src = H_inv * Eigen::Vector3d(x, y, 1.0);
      if (!(std::abs(src.z()) > 1e-12)) {
        out(y, x) = fill;
        continue;
      }
      out(y, x) = sample_bilinear(img, src.x() / src.z(), src.y() / src.z(), fill);
    }
  }
  return out;
}

void RgbImage::set(int x, int y, const std::array<std::uint8_t, 3>& c) {
  if (x < 0 || y < 0 || x >= width || y >= height) return;
  const std::size_t at = (std::size_t(y) * width + x) * 3;
  data[at] = c[0];
  data[at + 1] = c[1];
  data[at + 2] = c[2];
}

RgbImage to_rgb(const GrayImage& img) {
  RgbImage out(width(img), height(img));
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      const auto v = static_cast<std::uint8_t>(
          std::lround(std::clamp(img(y, x), 0.0f, 1.0f) * 255.0f));
      out.set(x, y, {v, v, v});
    }
  }
  return out;
}

namespace {

GrayImage load_png(const std::filesystem::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw Error(ErrorCode::kIo, "cannot read PNG '" + path.string() + "': " + image.message);
  }
  image.format = PNG_FORMAT_GRAY;
  std::vector<png_byte> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    png_image_free(&image);
    throw Error(ErrorCode::kIo, "cannot decode PNG '" + path.string() + "': " + image.message);
  }
  const int w = static_cast<int>(image.width);
  const int h = static_cast<int>(image.height);
  GrayImage img(h, w);
  for (int i = 0; i < w * h; ++i) img.data()[i] = buffer[i] / 255.0f;
  return img;
}

GrayImage load_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "'");
  std::string magic;
  in >> magic;
  auto next_int = [&in, &path]() {
    int v = 0;
    while (in >> std::ws && in.peek() == '#') {
      std::string comment;
      std::getline(in, comment);
    }
    if (!(in >> v)) throw Error(ErrorCode::kIo, "malformed PGM '" + path.string() + "'");
    return v;
  };
  if (magic != "P5") throw Error(ErrorCode::kIo, "unsupported PGM '" + path.string() + "'");
  const int w = next_int();
  const int h = next_int();
  const int max_value = next_int();
  in.get();
  if (w < 1 || h < 1 || max_value < 1 || max_value > 65535) {
    throw Error(ErrorCode::kIo, "malformed PGM header '" + path.string() + "'");
  }
  const int bytes = max_value > 255 ? 2 : 1;
  std::vector<unsigned char> raw(std::size_t(w) * h * bytes);
  if (!in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()))) {
    throw Error(ErrorCode::kIo, "truncated PGM '" + path.string() + "'");
  }
  GrayImage img(h, w);
  for (int i = 0; i < w * h; ++i) {
    const int v = bytes == 2 ? (raw[2 * i] << 8) | raw[2 * i + 1] : raw[i];
    img(i / w, i % w) = static_cast<float>(v) / max_value;
  }
  return img;
}

void write_png(const std::filesystem::path& path, int w, int h,
               png_uint_32 format, const std::uint8_t* data) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(w);
  image.height = static_cast<png_uint_32>(h);
  image.format = format;
  if (!png_image_write_to_file(&image, path.c_str(), 0, data, 0, nullptr)) {
    throw Error(ErrorCode::kIo, "cannot write PNG '" + path.string() + "': " + image.message);
  }
}

std::vector<std::uint8_t> to_bytes(const GrayImage& img) {
  std::vector<std::uint8_t> out(static_cast<std::size_t>(img.size()));
  for (Eigen::Index i = 0; i < img.size(); ++i) {
    out[i] = static_cast<std::uint8_t>(
        std::lround(std::clamp(img.data()[i], 0.0f, 1.0f) * 255.0f));
  }
  return out;
}

}  // namespace

GrayImage load_gray(const std::filesystem::path& path) {
  std::ifstream probe(path, std::ios::binary);
  if (!probe) throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "'");
  char head[8] = {};
  probe.read(head, sizeof(head));
  probe.close();
  if (head[0] == 'P' && head[1] == '5') return load_pgm(path);
  if (png_sig_cmp(reinterpret_cast<png_const_bytep>(head), 0, 8) == 0) {
    return load_png(path);
  }
  throw Error(ErrorCode::kIo, "unrecognised image format '" + path.string() + "'");
}

void save_png(const GrayImage& img, const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = to_bytes(img);
  write_png(path, width(img), height(img), PNG_FORMAT_GRAY, bytes.data());
}

void save_png(const RgbImage& img, const std::filesystem::path& path) {
  write_png(path, img.width, img.height, PNG_FORMAT_RGB, img.data.data());
}

void save_pgm(const GrayImage& img, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write '" + path.string() + "'");
  out << "P5\n" << width(img) << ' ' << height(img) << "\n255\n";
  const std::vector<std::uint8_t> bytes = to_bytes(img);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

}  // namespace covis
