#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "covis/core.hpp"
#include "covis/image.hpp"

namespace covis {

struct MatcherSpec {
  enum class Kind { kBuiltin, kExternal };

  Kind kind = Kind::kBuiltin;
  std::string name = "harris-ncc";
  int resolution = 840;  // longest side of the working frame
  std::string endpoint;  // worker command line (External only)
  std::map<std::string, std::string> options;

  void validate() const;
  double option(const std::string& key, double fallback) const;
};

// Matches in the matcher's working frame (crop, then resize).
struct RawMatches {
  std::vector<std::pair<Point2, Point2>> pairs;
  std::vector<double> confidences;

  std::size_t size() const { return pairs.size(); }
  // Equal lengths, confidences in [0,1], points within the working frames
  // (kBorderTolerance slack). Throws kProtocolError otherwise.
  void validate(int width1, int height1, int width2, int height2) const;
};

// One side of a match request: the original image plus where and at what
// resolution the matcher should look.
struct MatchView {
  const GrayImage* image = nullptr;  // original-frame pixels, may be null
  ImageMeta meta;
  std::filesystem::path path;        // source file, when known
  CropBox crop;                      // whole-pixel box in the original frame
  int longest_dim = 840;

  double scale() const { return resize_scale(crop.width(), crop.height(), longest_dim); }
  std::pair<int, int> working_size() const;
  bool is_full_frame() const { return crop == CropBox::full(meta); }
  // Cropped and resized pixels. Requires `image`.
  GrayImage prepare() const;
};

class Matcher {
 public:
  virtual ~Matcher() = default;
  virtual std::string name() const = 0;
  // Returns matches in the two working frames. Implementations are
  // thread-safe.
  virtual RawMatches match(const MatchView& view1, const MatchView& view2) const = 0;
};

// --- builtin Harris + NCC matcher ---------------------------------------

struct Corner {
  Point2 pt;
  float response = 0.0f;
};

struct CornerParams {
  int max_kp = 1024;
  double harris_k = 0.06;
  double relative_threshold = 0.01;  // of the strongest response
  int border = 6;                    // no corners closer to the frame edge
};

// Harris corners: structure tensor of central-difference gradients under a
// Gaussian window, 3x3 non-maximum suppression, strongest max_kp, parabolic
// sub-pixel refinement. Ordered by descending response.
std::vector<Corner> detect_corners(const GrayImage& image, const CornerParams& params = {});

struct MatchParams {
  CornerParams corners;
  int patch_size = 11;
  double ratio = 0.9;  // best / second-best descriptor distance
};

// Mutual nearest neighbours under normalized cross-correlation of
// mean-normalized patches, ratio-tested in both directions. Ordered by
// index in the first image's corner list.
RawMatches match_images(const GrayImage& img1, const GrayImage& img2,
                        const MatchParams& params = {});

class BuiltinMatcher final : public Matcher {
 public:
  explicit BuiltinMatcher(MatchParams params = {}, std::string name = "harris-ncc")
      : params_(params), name_(std::move(name)) {}
  static std::unique_ptr<BuiltinMatcher> from_spec(const MatcherSpec& spec);

  std::string name() const override { return name_; }
  RawMatches match(const MatchView& view1, const MatchView& view2) const override;

 private:
  MatchParams params_;
  std::string name_;
};

// Builds the matcher a spec describes (builtin or external worker).
std::shared_ptr<const Matcher> make_matcher(const MatcherSpec& spec);

}  // namespace covis
