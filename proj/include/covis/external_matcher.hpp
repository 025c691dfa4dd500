#pragma once

#include <atomic>
#include <chrono>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "covis/matchers.hpp"

namespace covis {

// A worker process launched through /bin/sh with its standard streams piped.
class WorkerProcess {
 public:
  explicit WorkerProcess(const std::string& command);
  ~WorkerProcess();
  WorkerProcess(const WorkerProcess&) = delete;
  WorkerProcess& operator=(const WorkerProcess&) = delete;

  void write_line(const std::string& line);
  // Throws kTimeout when no full line arrives in time, kMatcherUnavailable
  // when the worker closes its output.
  std::string read_line(std::chrono::milliseconds timeout);
  void kill();
  bool alive() const { return pid_ > 0; }

 private:
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string buffer_;
};

// Client for the line-delimited matcher protocol. Keeps a pool of idle
// worker processes; each request uses one worker exclusively.
class ExternalMatcher final : public Matcher {
 public:
  explicit ExternalMatcher(MatcherSpec spec);
  ~ExternalMatcher() override;

  std::string name() const override { return spec_.name; }
  RawMatches match(const MatchView& view1, const MatchView& view2) const override;

  // Raw protocol round trip on files already on disk.
  RawMatches match_files(const std::string& image1, const std::string& image2,
                         int longest_dim) const;

  const std::string& command() const { return command_; }
  std::chrono::milliseconds timeout() const { return timeout_; }

 private:
  std::unique_ptr<WorkerProcess> acquire() const;
  void release(std::unique_ptr<WorkerProcess> worker) const;

  MatcherSpec spec_;
  std::string command_;
  std::chrono::milliseconds timeout_;
  mutable std::mutex mutex_;
  mutable std::vector<std::unique_ptr<WorkerProcess>> idle_;
  mutable std::atomic<std::int64_t> next_id_{1};
};

}  // namespace covis
