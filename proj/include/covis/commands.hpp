#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "covis/config.hpp"

namespace covis {

// Process exit codes of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,     // bad command line
  kExitConfig = 2,    // invalid configuration
  kExitIo = 3,        // unreadable input or unwritable output
  kExitPipeline = 4,  // stage one failed, or the matcher is unavailable
  kExitInput = 5,     // malformed input data (manifest, protocol)
  kExitInternal = 6,
};

int exit_code_for(ErrorCode code);

struct CommonOptions {
  std::optional<std::filesystem::path> config;
  int jobs = 1;
  std::optional<std::uint64_t> seed;  // overrides estimator.seed
  std::filesystem::path out;
};

// Loaded config (or defaults) with command-line overrides applied.
AppConfig resolve_config(const CommonOptions& opts);

// Writes matches.json, model.json, overlay1.png, overlay2.png and pair.png
// into opts.out. Nothing is written when the inputs cannot be read.
int cmd_match(const std::filesystem::path& image1, const std::filesystem::path& image2,
              const CommonOptions& opts);

// Writes the JSON report to opts.out and a text table next to it (.txt).
int cmd_benchmark(const std::filesystem::path& manifest, const CommonOptions& opts);

// Stage one and the crop proposal only: proposal.json, crop1.png,
// crop2.png and the two overlays.
int cmd_crop(const std::filesystem::path& image1, const std::filesystem::path& image2,
             const CommonOptions& opts);

// Rendered two-plane pairs plus manifest.csv in opts.out.
int cmd_synth(int pairs, int width, int height, const CommonOptions& opts);

// Prints the resolved configuration.
int cmd_config(const CommonOptions& opts);

}  // namespace covis
