#include "linebo/external.hpp"

#include "linebo/error.hpp"

#include <nlohmann/json.hpp>

#include <cerrno>
#include <chrono>
#include <cmath>
#include <csignal>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <regex>
#include <sstream>
#include <thread>

#include <fcntl.h>
#include <poll.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

namespace linebo {

namespace {

using Clock = std::chrono::steady_clock;
constexpr std::size_t kMaxLine = 1 << 20;

void ignore_sigpipe() {
  static std::once_flag once;
  std::call_once(once, [] { std::signal(SIGPIPE, SIG_IGN); });
}

Clock::time_point deadline_after(double seconds) {
  if (!(seconds > 0.0)) return Clock::time_point::max();
  return Clock::now() + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(seconds));
}

int remaining_ms(Clock::time_point deadline) {
  if (deadline == Clock::time_point::max()) return -1;
  const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
  return static_cast<int>(std::max<long long>(0, left));
}

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') out += "'\\''";
    else out += c;
  }
  return out + "'";
}

}  // namespace

/// Child process under /bin/sh -c with piped stdin/stdout, in its own process
/// group so a kill reaches everything the shell started.
class Subprocess {
 public:
  enum class ReadStatus { Line, Timeout, Eof, TooLong };

  explicit Subprocess(const std::string& command) {
    int in_pipe[2], out_pipe[2];
    if (pipe2(in_pipe, O_CLOEXEC) != 0) throw IoError(std::string("pipe: ") + std::strerror(errno));
    if (pipe2(out_pipe, O_CLOEXEC) != 0) {
      ::close(in_pipe[0]);
      ::close(in_pipe[1]);
      throw IoError(std::string("pipe: ") + std::strerror(errno));
    }
    const pid_t pid = fork();
    if (pid < 0) {
      for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1]}) ::close(fd);
      throw IoError(std::string("fork: ") + std::strerror(errno));
    }
    if (pid == 0) {
      setpgid(0, 0);
      dup2(in_pipe[0], STDIN_FILENO);
      dup2(out_pipe[1], STDOUT_FILENO);
      execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
      _exit(127);
    }
    setpgid(pid, pid);
    pid_ = pid;
    ::close(in_pipe[0]);
    ::close(out_pipe[1]);
    stdin_fd_ = in_pipe[1];
    stdout_fd_ = out_pipe[0];
  }

  ~Subprocess() {
    kill();
    close_stdin();
    if (stdout_fd_ >= 0) ::close(stdout_fd_);
  }

  Subprocess(const Subprocess&) = delete;
  Subprocess& operator=(const Subprocess&) = delete;

  bool write_all(std::string_view data) {
    while (!data.empty()) {
      const ssize_t n = ::write(stdin_fd_, data.data(), data.size());
      if (n < 0) {
        if (errno == EINTR) continue;
        return false;
      }
      data.remove_prefix(static_cast<std::size_t>(n));
    }
    return true;
  }

  void close_stdin() {
    if (stdin_fd_ >= 0) {
      ::close(stdin_fd_);
      stdin_fd_ = -1;
    }
  }

  ReadStatus read_line(std::string& line, Clock::time_point deadline) {
    for (;;) {
      const auto nl = buffer_.find('\n');
      if (nl != std::string::npos) {
        line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        return ReadStatus::Line;
      }
      if (buffer_.size() > kMaxLine) return ReadStatus::TooLong;
      if (eof_) {
        line = buffer_;
        return ReadStatus::Eof;
      }
      pollfd pfd{stdout_fd_, POLLIN, 0};
      const int rc = ::poll(&pfd, 1, remaining_ms(deadline));
      if (rc < 0) {
        if (errno == EINTR) continue;
        eof_ = true;
        continue;
      }
      if (rc == 0) return ReadStatus::Timeout;
      char chunk[4096];
      const ssize_t n = ::read(stdout_fd_, chunk, sizeof chunk);
      if (n < 0) {
        if (errno == EINTR || errno == EAGAIN) continue;
        eof_ = true;
      } else if (n == 0) {
        eof_ = true;
      } else {
        buffer_.append(chunk, static_cast<std::size_t>(n));
      }
    }
  }

  /// Exit status, or nullopt when the deadline passes first.
  std::optional<int> wait(Clock::time_point deadline) {
    if (pid_ <= 0) return status_;
    for (;;) {
      int status = 0;
      const pid_t r = waitpid(pid_, &status, WNOHANG);
      if (r == pid_) {
        pid_ = -1;
        status_ = WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
        return status_;
      }
      if (r < 0 && errno != EINTR) {
        pid_ = -1;
        status_ = -1;
        return status_;
      }
      if (Clock::now() >= deadline) return std::nullopt;
      std::this_thread::sleep_for(std::chrono::milliseconds(1));
    }
  }

  bool running() {
    if (pid_ <= 0) return false;
    int status = 0;
    const pid_t r = waitpid(pid_, &status, WNOHANG);
    if (r == pid_) {
      pid_ = -1;
      status_ = WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
      return false;
    }
    return true;
  }

  void kill() {
    if (pid_ > 0) {
      ::kill(-pid_, SIGKILL);
      ::kill(pid_, SIGKILL);
      int status = 0;
      while (waitpid(pid_, &status, 0) < 0 && errno == EINTR) {
      }
      pid_ = -1;
    }
  }

 private:
  pid_t pid_ = -1;
  int stdin_fd_ = -1;
  int stdout_fd_ = -1;
  std::string buffer_;
  bool eof_ = false;
  std::optional<int> status_;
};

std::string_view to_string(ExternalMode mode) {
  switch (mode) {
    case ExternalMode::OneShot: return "oneshot";
    case ExternalMode::Persistent: return "persistent";
    case ExternalMode::File: return "file";
  }
  return "?";
}

ExternalMode parse_external_mode(std::string_view text) {
  if (text == "oneshot" || text == "one-shot") return ExternalMode::OneShot;
  if (text == "persistent") return ExternalMode::Persistent;
  if (text == "file") return ExternalMode::File;
  throw InvalidArgument("unknown evaluator mode '" + std::string(text) + "'");
}

std::string format_request(const Vector& x_raw, long long id) {
  nlohmann::json j;
  j["x"] = std::vector<double>(x_raw.data(), x_raw.data() + x_raw.size());
  j["id"] = id;
  return j.dump() + "\n";
}

EvalOutcome parse_response(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  // JSON has no NaN/Infinity literals; name them instead of reporting a
  // generic syntax error.
  static const std::regex non_finite(R"(^\s*\{\s*"y"\s*:\s*[-+]?(NaN|nan|Infinity|inf|Inf)\s*\}\s*$)");
  if (line.size() < 256 && std::regex_match(line.begin(), line.end(), non_finite)) {
    return EvalOutcome::failure(EvalError::NonFiniteValue, "evaluator returned a non-finite value");
  }
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line.begin(), line.end());
  } catch (const nlohmann::json::out_of_range&) {
    return EvalOutcome::failure(EvalError::NonFiniteValue, "evaluator returned a number outside double range");
  } catch (const nlohmann::json::exception& e) {
    return EvalOutcome::failure(EvalError::ProtocolViolation, std::string("malformed response: ") + e.what());
  }
  if (!j.is_object() || j.size() != 1) {
    return EvalOutcome::failure(EvalError::ProtocolViolation,
                                "response must be an object with exactly one of \"y\" or \"error\"");
  }
  if (j.contains("error")) {
    const auto& e = j["error"];
    if (!e.is_string()) return EvalOutcome::failure(EvalError::ProtocolViolation, "\"error\" must be a string");
    return EvalOutcome::failure(EvalError::EvaluatorFailure, e.get<std::string>());
  }
  if (!j.contains("y")) return EvalOutcome::failure(EvalError::ProtocolViolation, "response lacks \"y\"");
  const auto& y = j["y"];
  if (!y.is_number()) return EvalOutcome::failure(EvalError::ProtocolViolation, "\"y\" must be a number");
  const double v = y.get<double>();
  if (!std::isfinite(v)) return EvalOutcome::failure(EvalError::NonFiniteValue, "evaluator returned a non-finite value");
  return EvalOutcome::success(v);
}

ExternalEvaluator::ExternalEvaluator(ExternalSpec spec) : spec_(std::move(spec)) {
  if (spec_.command.empty()) throw InvalidArgument("external evaluator command is empty");
  ignore_sigpipe();
}

ExternalEvaluator::~ExternalEvaluator() = default;

EvalOutcome ExternalEvaluator::evaluate(const EvalRequest& request) {
  try {
    switch (spec_.mode) {
      case ExternalMode::OneShot: return one_shot(request);
      case ExternalMode::Persistent: return persistent(request);
      case ExternalMode::File: return file_based(request);
    }
  } catch (const Error& e) {
    live_.reset();
    return EvalOutcome::failure(EvalError::ProcessCrash, e.what());
  }
  return EvalOutcome::failure(EvalError::ProcessCrash, "unreachable");
}

EvalOutcome ExternalEvaluator::one_shot(const EvalRequest& request) {
  const auto deadline = deadline_after(spec_.timeout_s);
  Subprocess proc(spec_.command);
  ++spawns_;
  const bool wrote = proc.write_all(format_request(request.x, request.id));
  proc.close_stdin();
  std::string line;
  const auto status = proc.read_line(line, deadline);
  if (status == Subprocess::ReadStatus::Timeout) {
    proc.kill();
    return EvalOutcome::failure(EvalError::Timeout, "evaluator exceeded " + std::to_string(spec_.timeout_s) + " s");
  }
  if (status == Subprocess::ReadStatus::TooLong) {
    proc.kill();
    return EvalOutcome::failure(EvalError::ProtocolViolation, "response line too long");
  }
  if (status == Subprocess::ReadStatus::Eof) {
    const auto code = proc.wait(deadline);
    if (!code) proc.kill();
    if (!line.empty()) {
      return EvalOutcome::failure(EvalError::ProtocolViolation, "response not newline-terminated");
    }
    return EvalOutcome::failure(EvalError::ProcessCrash,
                                std::string("evaluator exited without a response") +
                                    (code ? " (status " + std::to_string(*code) + ")" : "") +
                                    (wrote ? "" : "; request write failed"));
  }
  EvalOutcome out = parse_response(line);
  if (!proc.wait(std::min(deadline, Clock::now() + std::chrono::seconds(5)))) proc.kill();
  return out;
}

EvalOutcome ExternalEvaluator::persistent(const EvalRequest& request) {
  const auto deadline = deadline_after(spec_.timeout_s);
  if (!live_ || !live_->running()) {
    live_ = std::make_unique<Subprocess>(spec_.command);
    ++spawns_;
  }
  if (!live_->write_all(format_request(request.x, request.id))) {
    live_.reset();
    return EvalOutcome::failure(EvalError::ProcessCrash, "evaluator closed its input");
  }
  std::string line;
  const auto status = live_->read_line(line, deadline);
  switch (status) {
    case Subprocess::ReadStatus::Line: return parse_response(line);
    case Subprocess::ReadStatus::Timeout:
      live_.reset();
      return EvalOutcome::failure(EvalError::Timeout, "evaluator exceeded " + std::to_string(spec_.timeout_s) + " s");
    case Subprocess::ReadStatus::TooLong:
      live_.reset();
      return EvalOutcome::failure(EvalError::ProtocolViolation, "response line too long");
    case Subprocess::ReadStatus::Eof:
      live_.reset();
      if (!line.empty()) return EvalOutcome::failure(EvalError::ProtocolViolation, "response not newline-terminated");
      return EvalOutcome::failure(EvalError::ProcessCrash, "evaluator exited");
  }
  return EvalOutcome::failure(EvalError::ProcessCrash, "unreachable");
}

EvalOutcome ExternalEvaluator::file_based(const EvalRequest& request) {
  namespace fs = std::filesystem;
  const auto deadline = deadline_after(spec_.timeout_s);
  fs::create_directories(spec_.workdir);
  const fs::path in = fs::path(spec_.workdir) / ("linebo-eval-" + std::to_string(request.id) + "-w" +
                                                 std::to_string(request.worker) + ".in.json");
  fs::path out = in;
  out.replace_extension().replace_extension(".out.json");
  fs::remove(out);
  {
    std::ofstream f(in);
    if (!f) throw IoError("cannot write " + in.string());
    f << format_request(request.x, request.id);
  }
  Subprocess proc(spec_.command + " " + shell_quote(in.string()) + " " + shell_quote(out.string()));
  ++spawns_;
  proc.close_stdin();
  std::optional<int> code;
  for (;;) {
    if (!code) code = proc.wait(Clock::now());
    if (fs::exists(out) && code) break;
    // A clean exit may leave a detached writer behind; keep polling only
    // while a deadline bounds the wait.
    if (code && !fs::exists(out) && (*code != 0 || deadline == Clock::time_point::max())) {
      fs::remove(in);
      return EvalOutcome::failure(EvalError::ProcessCrash, "evaluator exited with status " + std::to_string(*code) +
                                                               " and no output file");
    }
    if (Clock::now() >= deadline) {
      proc.kill();
      fs::remove(in);
      return EvalOutcome::failure(EvalError::Timeout, "no output file within " + std::to_string(spec_.timeout_s) + " s");
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  std::ifstream f(out);
  std::string line;
  const bool got = static_cast<bool>(std::getline(f, line));
  f.close();
  fs::remove(in);
  fs::remove(out);
  if (!got) return EvalOutcome::failure(EvalError::ProtocolViolation, "empty output file");
  return parse_response(line);
}

}  // namespace linebo
