#pragma once

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <sstream>

#include <doctest.h>
#include <random>
#include <utility>

#include "covis/core.hpp"
#include "covis/error.hpp"

namespace covis::test {

inline Points2 pts(std::initializer_list<std::pair<double, double>> list) {
  Points2 out(2, static_cast<Eigen::Index>(list.size()));
  Eigen::Index i = 0;
  for (const auto& [x, y] : list) out.col(i++) << x, y;
  return out;
}

// Runs `fn` and reports the covis error code it raised, if any.
template <typename F>
std::optional<ErrorCode> error_of(F&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("covis-" + tag + "-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream(path, std::ios::binary) << text;
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace covis::test

namespace doctest {
template <>
struct StringMaker<covis::ErrorCode> {
  static String convert(covis::ErrorCode code) {
    return std::string(covis::to_string(code)).c_str();
  }
};
template <>
struct StringMaker<covis::CropBox> {
  static String convert(const covis::CropBox& b) {
    std::ostringstream os;
    os << "(" << b.x_min << ", " << b.y_min << ", " << b.x_max << ", " << b.y_max << ")";
    return os.str().c_str();
  }
};
}  // namespace doctest
