#pragma once

#include "linebo/objective.hpp"
#include "linebo/types.hpp"

#include <optional>
#include <string>
#include <vector>

namespace linebo {

struct BenchmarkParams {
  double noise_sd = 0.0;
  int effective_dim = 0;        // rotated-quadratic; 0 means "all dimensions"
  double condition = 100.0;     // rotated-quadratic eigenvalue spread
  std::uint64_t rotation_seed = 0;
};

/// Built-in synthetic test function with its box and (when analytic) optimum.
struct BenchmarkFn {
  std::string name;
  int dim = 0;
  std::vector<double> lower;
  std::vector<double> upper;
  std::optional<double> optimum_value;
  std::optional<Vector> optimum_location;
  double noise_sd = 0.0;
  std::function<double(const Vector&)> f;
};

/// sphere, rosenbrock, ackley, levy, rotated-quadratic. Throws InvalidArgument
/// for unknown names.
BenchmarkFn make_benchmark(const std::string& name, int dim, const BenchmarkParams& params = {});
std::vector<std::string> benchmark_names();

/// Noise-free value, or value plus N(0, noise_sd^2) drawn from `noise_rng`.
/// Throws OutOfBounds when x is outside the box.
double evaluate_builtin(const BenchmarkFn& fn, const Vector& x_raw, Rng* noise_rng = nullptr);

/// Objective wrapper. Noise for evaluation `id` comes from a stream keyed by
/// (noise_seed, id), so results do not depend on completion order.
class BuiltinObjective : public Objective {
 public:
  BuiltinObjective(BenchmarkFn fn, std::uint64_t noise_seed) : fn_(std::move(fn)), noise_seed_(noise_seed) {}
  EvalOutcome evaluate(const EvalRequest& request) override;
  const BenchmarkFn& function() const { return fn_; }

 private:
  BenchmarkFn fn_;
  std::uint64_t noise_seed_;
};

}  // namespace linebo
