#pragma once

#include "linebo/objective.hpp"

#include <memory>
#include <string>
#include <string_view>

namespace linebo {

enum class ExternalMode { OneShot, Persistent, File };

std::string_view to_string(ExternalMode mode);
ExternalMode parse_external_mode(std::string_view text);

/// How to launch an external evaluator. `command` runs under /bin/sh -c.
/// In File mode the input and output file paths are appended as arguments.
struct ExternalSpec {
  std::string command;
  ExternalMode mode = ExternalMode::OneShot;
  double timeout_s = 60.0;      // per evaluation; <= 0 disables
  std::string workdir = ".";    // File mode scratch directory
};

/// {"x": [...], "id": n} followed by a newline.
std::string format_request(const Vector& x_raw, long long id);

/// Strict parse of one response line (without the newline): exactly
/// {"y": <finite number>} or {"error": <string>}. Never throws.
EvalOutcome parse_response(std::string_view line);

class Subprocess;

/// Drives a black-box evaluator over the line protocol (or the file variant).
/// One instance serves one worker; it is not thread-safe.
class ExternalEvaluator : public Objective {
 public:
  explicit ExternalEvaluator(ExternalSpec spec);
  ~ExternalEvaluator() override;
  ExternalEvaluator(const ExternalEvaluator&) = delete;
  ExternalEvaluator& operator=(const ExternalEvaluator&) = delete;

  EvalOutcome evaluate(const EvalRequest& request) override;

  /// Processes launched so far.
  int spawn_count() const { return spawns_; }

 private:
  EvalOutcome one_shot(const EvalRequest& request);
  EvalOutcome persistent(const EvalRequest& request);
  EvalOutcome file_based(const EvalRequest& request);

  ExternalSpec spec_;
  std::unique_ptr<Subprocess> live_;
  int spawns_ = 0;
};

}  // namespace linebo
