#include "covis/external_matcher.hpp"

#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <mutex>

#include "covis/error.hpp"
#include "covis/log.hpp"
#include "covis/protocol.hpp"

namespace covis {

namespace {

void ignore_sigpipe_once() {
  static std::once_flag flag;
  std::call_once(flag, [] { ::signal(SIGPIPE, SIG_IGN); });
}

// Temporary file removed on scope exit.
class ScopedTempFile {
 public:
  explicit ScopedTempFile(const std::string& stem) {
    static std::atomic<unsigned> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("covis-" + std::to_string(::getpid()) + "-" + std::to_string(counter++) + "-" +
             stem + ".png");
  }
  ~ScopedTempFile() {
    std::error_code ec;
    std::filesystem::remove(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace

WorkerProcess::WorkerProcess(const std::string& command) {
  ignore_sigpipe_once();
  int in_pipe[2];
  int out_pipe[2];
  if (::pipe(in_pipe) != 0) {
    throw Error(ErrorCode::kMatcherUnavailable, std::string("pipe: ") + std::strerror(errno));
  }
  if (::pipe(out_pipe) != 0) {
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    throw Error(ErrorCode::kMatcherUnavailable, std::string("pipe: ") + std::strerror(errno));
  }
  const std::string shell_command = "exec " + command;
  const pid_t pid = ::fork();
  if (pid < 0) {
    for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1]}) ::close(fd);
    throw Error(ErrorCode::kMatcherUnavailable, std::string("fork: ") + std::strerror(errno));
  }
  if (pid == 0) {
    ::dup2(in_pipe[0], STDIN_FILENO);
    ::dup2(out_pipe[1], STDOUT_FILENO);
    for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1]}) ::close(fd);
    ::execl("/bin/sh", "sh", "-c", shell_command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  pid_ = pid;
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
}

WorkerProcess::~WorkerProcess() {
  if (to_child_ >= 0) ::close(to_child_);
  if (from_child_ >= 0) ::close(from_child_);
  if (pid_ > 0) {
    // Closing stdin asks a well-behaved worker to exit; give it a moment.
    for (int i = 0; i < 50; ++i) {
      if (::waitpid(pid_, nullptr, WNOHANG) == pid_) return;
      ::usleep(2000);
    }
    ::kill(pid_, SIGKILL);
    ::waitpid(pid_, nullptr, 0);
  }
}

void WorkerProcess::kill() {
  if (pid_ > 0) {
    ::kill(pid_, SIGKILL);
    ::waitpid(pid_, nullptr, 0);
    pid_ = -1;
  }
}

void WorkerProcess::write_line(const std::string& line) {
  const std::string data = line + "\n";
  std::size_t sent = 0;
  while (sent < data.size()) {
    const ssize_t n = ::write(to_child_, data.data() + sent, data.size() - sent);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorCode::kMatcherUnavailable,
                  std::string("worker input closed: ") + std::strerror(errno));
    }
    sent += static_cast<std::size_t>(n);
  }
}

std::string WorkerProcess::read_line(std::chrono::milliseconds timeout) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  for (;;) {
    if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      return line;
    }
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) throw Error(ErrorCode::kTimeout, "worker did not answer in time");
    pollfd pfd{from_child_, POLLIN, 0};
    const int ready = ::poll(&pfd, 1, static_cast<int>(left.count()));
    if (ready < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorCode::kMatcherUnavailable, std::string("poll: ") + std::strerror(errno));
    }
    if (ready == 0) continue;
    char chunk[65536];
    const ssize_t n = ::read(from_child_, chunk, sizeof(chunk));
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorCode::kMatcherUnavailable, std::string("read: ") + std::strerror(errno));
    }
    if (n == 0) throw Error(ErrorCode::kMatcherUnavailable, "worker closed its output");
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

ExternalMatcher::ExternalMatcher(MatcherSpec spec) : spec_(std::move(spec)) {
  spec_.kind = MatcherSpec::Kind::kExternal;
  command_ = spec_.endpoint;
  if (command_.empty()) {
    if (const char* env = std::getenv("COVIS_MATCHER_PATH")) command_ = env;
  }
  if (command_.empty()) {
    throw Error(ErrorCode::kConfig, "external matcher '" + spec_.name + "' has no endpoint");
  }
  timeout_ = std::chrono::milliseconds(
      static_cast<long long>(spec_.option("timeout_s", 60.0) * 1000.0));
}

ExternalMatcher::~ExternalMatcher() = default;

std::unique_ptr<WorkerProcess> ExternalMatcher::acquire() const {
  {
    std::lock_guard<std::mutex> lock(mutex_);
    if (!idle_.empty()) {
      auto worker = std::move(idle_.back());
      idle_.pop_back();
      return worker;
    }
  }
  auto worker = std::make_unique<WorkerProcess>(command_);
  try {
    const std::string announced = protocol::parse_handshake(worker->read_line(timeout_));
    log::debug("external matcher '{}' ready as '{}'", spec_.name, announced);
  } catch (const Error& e) {
    worker->kill();
    throw Error(ErrorCode::kMatcherUnavailable,
                "cannot start '" + command_ + "': " + e.message());
  }
  return worker;
}

void ExternalMatcher::release(std::unique_ptr<WorkerProcess> worker) const {
  std::lock_guard<std::mutex> lock(mutex_);
  idle_.push_back(std::move(worker));
}

RawMatches ExternalMatcher::match_files(const std::string& image1, const std::string& image2,
                                        int longest_dim) const {
  auto worker = acquire();
  const std::int64_t id = next_id_++;
  try {
    worker->write_line(protocol::encode_request({id, image1, image2, longest_dim}));
    RawMatches out = protocol::parse_response(worker->read_line(timeout_), id);
    release(std::move(worker));
    return out;
  } catch (const Error& e) {
    // A worker that answered with an error object is still in sync.
    if (e.code() == ErrorCode::kMatcherUnavailable && worker->alive()) {
      release(std::move(worker));
    } else {
      worker->kill();
    }
    throw;
  }
}

RawMatches ExternalMatcher::match(const MatchView& view1, const MatchView& view2) const {
  // Whole frames with a known source file go by path; anything else is
  // written out so the worker sees exactly the cropped pixels.
  auto source = [](const MatchView& v, std::unique_ptr<ScopedTempFile>& tmp) -> std::string {
    if (v.is_full_frame() && !v.path.empty()) return v.path.string();
    if (!v.image) throw Error(ErrorCode::kInvalidArgument, "view has neither file nor pixels");
    tmp = std::make_unique<ScopedTempFile>(v.meta.id.empty() ? "view" : "crop");
    save_png(v.is_full_frame() ? *v.image : crop(*v.image, v.crop), tmp->path());
    return tmp->path().string();
  };
  if (view1.longest_dim != view2.longest_dim) {
    throw Error(ErrorCode::kInvalidArgument, "both views must share one resolution");
  }
  std::unique_ptr<ScopedTempFile> tmp1, tmp2;
  const std::string p1 = source(view1, tmp1);
  const std::string p2 = source(view2, tmp2);
  RawMatches out = match_files(p1, p2, view1.longest_dim);
  const auto [w1, h1] = view1.working_size();
  const auto [w2, h2] = view2.working_size();
  out.validate(w1, h1, w2, h2);
  return out;
}

}  // namespace covis
