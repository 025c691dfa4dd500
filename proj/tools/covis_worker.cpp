// Stub matcher worker speaking the line-delimited protocol on stdin/stdout.
// Backends exist to exercise the client: real matching (builtin, grid) and
// scripted faults (mismatch, garbage, slow, silent, crash).

#include <chrono>
#include <iostream>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "covis/error.hpp"
#include "covis/image.hpp"
#include "covis/matchers.hpp"
#include "covis/protocol.hpp"

namespace {

using covis::GrayImage;
using covis::RawMatches;

GrayImage load_resized(const std::string& path, int longest_dim) {
  const GrayImage img = covis::load_gray(path);
  return covis::resize(img, covis::resize_scale(covis::width(img), covis::height(img), longest_dim));
}

// Fixed 8x8 lattice at the same relative positions in both frames.
RawMatches grid_matches(const GrayImage& a, const GrayImage& b) {
  RawMatches out;
  const int n = 8;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const double u = (i + 0.5) / n;
      const double v = (j + 0.5) / n;
      out.pairs.push_back({{u * (covis::width(a) - 1), v * (covis::height(a) - 1)},
                           {u * (covis::width(b) - 1), v * (covis::height(b) - 1)}});
      out.confidences.push_back(1.0);
    }
  }
  return out;
}

RawMatches echo_matches() {
  RawMatches out;
  out.pairs = {{{1, 2}, {3, 4}}, {{5, 6}, {7, 8}}, {{9, 10}, {11, 12}}};
  out.confidences = {0.9, 0.8, 0.7};
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"covis stub matcher worker"};
  std::string backend = "grid";
  double delay_s = 5.0;
  app.add_option("--backend", backend, "Matching backend")
      ->check(CLI::IsMember({"grid", "echo", "builtin", "mismatch", "garbage", "slow", "silent",
                             "crash"}));
  app.add_option("--delay", delay_s, "Reply delay of the slow backend, seconds");
  CLI11_PARSE(app, argc, argv);

  // stdout carries the protocol; diagnostics go to stderr.
  spdlog::set_default_logger(spdlog::stderr_color_mt("covis_worker"));
  std::ios::sync_with_stdio(false);
  std::cout << covis::protocol::encode_handshake("stub-" + backend) << std::endl;

  std::string line;
  while (std::getline(std::cin, line)) {
    if (line.empty()) continue;
    std::int64_t id = -1;
    try {
      const covis::protocol::Request req = covis::protocol::parse_request(line, &id);
      if (backend == "silent") continue;
      if (backend == "crash") return 3;
      if (backend == "garbage") {
        std::cout << "this is not json" << std::endl;
        continue;
      }
      if (backend == "slow") {
        std::this_thread::sleep_for(std::chrono::duration<double>(delay_s));
      }
      RawMatches out;
      if (backend == "echo" || backend == "slow") {
        out = echo_matches();
      } else if (backend == "mismatch") {
        out = echo_matches();
        out.confidences.pop_back();
      } else {
        const GrayImage a = load_resized(req.image1, req.longest_dim);
        const GrayImage b = load_resized(req.image2, req.longest_dim);
        out = backend == "grid" ? grid_matches(a, b) : covis::match_images(a, b);
      }
      std::cout << covis::protocol::encode_response(req.id, out) << std::endl;
    } catch (const std::exception& e) {
      std::cout << covis::protocol::encode_error(id, e.what()) << std::endl;
    }
  }
  return 0;
}
