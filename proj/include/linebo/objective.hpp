#pragma once

#include "linebo/types.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

namespace linebo {

enum class EvalError {
  None,
  Timeout,
  ProtocolViolation,
  NonFiniteValue,
  ProcessCrash,
  EvaluatorFailure,  // the evaluator answered {"error": ...}
  OutOfBounds,
};

std::string_view to_string(EvalError e);

/// Result of one black-box evaluation. Failures are ordinary values here;
/// the orchestrator decides whether to retry.
struct EvalOutcome {
  std::optional<double> value;
  EvalError error = EvalError::None;
  std::string message;

  bool ok() const { return value.has_value(); }
  static EvalOutcome success(double v) { return {v, EvalError::None, {}}; }
  static EvalOutcome failure(EvalError e, std::string msg) { return {std::nullopt, e, std::move(msg)}; }
};

struct EvalRequest {
  long long id = 0;
  int worker = 0;
  Vector x;  // raw units
};

/// A black-box objective (minimization). Implementations need not be
/// thread-safe; concurrent executors create one instance per worker.
class Objective {
 public:
  virtual ~Objective() = default;
  virtual EvalOutcome evaluate(const EvalRequest& request) = 0;
};

using ObjectiveFactory = std::function<std::unique_ptr<Objective>(int worker)>;

/// Turns a maximization objective into a minimization one at the boundary.
class NegatedObjective : public Objective {
 public:
  explicit NegatedObjective(std::unique_ptr<Objective> inner) : inner_(std::move(inner)) {}
  EvalOutcome evaluate(const EvalRequest& request) override {
    EvalOutcome out = inner_->evaluate(request);
    if (out.value) *out.value = -*out.value;
    return out;
  }

 private:
  std::unique_ptr<Objective> inner_;
};

/// Adapts a plain function; handy for tests.
class FunctionObjective : public Objective {
 public:
  explicit FunctionObjective(std::function<EvalOutcome(const EvalRequest&)> fn) : fn_(std::move(fn)) {}
  EvalOutcome evaluate(const EvalRequest& request) override { return fn_(request); }

 private:
  std::function<EvalOutcome(const EvalRequest&)> fn_;
};

}  // namespace linebo
