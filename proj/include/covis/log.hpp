#pragma once

#include <spdlog/spdlog.h>

namespace covis::log {

using spdlog::debug;
using spdlog::error;
using spdlog::info;
using spdlog::warn;

}  // namespace covis::log
