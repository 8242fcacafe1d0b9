#pragma once

#include "linebo/benchmarks.hpp"
#include "linebo/executor.hpp"
#include "linebo/external.hpp"
#include "linebo/orchestrator.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace linebo {

inline constexpr int kSchemaVersion = 1;

struct ObjectiveConfig {
  std::string builtin;                  // empty when external
  BenchmarkParams params;
  std::optional<ExternalSpec> external;
  bool maximize = false;
};

enum class ClockKind { Simulated, Wall };

/// Everything one `run` needs. JSON on disk; see README for the schema.
struct RunConfig {
  int schema_version = kSchemaVersion;
  std::string label;  // prefix for run ids; defaults to the objective name
  std::vector<double> lower;
  std::vector<double> upper;
  ObjectiveConfig objective;
  OptimizerConfig optimizer;
  BudgetConfig budget;
  FailurePolicy failures;
  std::uint64_t seed = 1;
  ClockKind clock = ClockKind::Simulated;
  LatencyModel latency;
  double timeout_s = 0.0;  // per evaluation; 0 disables (simulated clock)
  std::string output_dir = "linebo-out";

  int dim() const { return static_cast<int>(lower.size()); }
  std::string run_label() const;
};

/// Parses and validates config text. Errors are ConfigError with a
/// "<source>:<line>: ..." prefix when the offending key can be located.
RunConfig parse_config(const std::string& text, const std::string& source = "<config>");
RunConfig load_config(const std::string& path);

/// Semantic checks (ranges, consistency). Throws ConfigError.
void validate_config(const RunConfig& config);

nlohmann::ordered_json config_to_json(const RunConfig& config);

/// Config for a built-in benchmark with its natural box.
RunConfig benchmark_config(const std::string& name, int dim, Algorithm algo, int batch);

/// Applies LINEBO_SEED and LINEBO_OUT if set.
void apply_environment(RunConfig& config);

}  // namespace linebo
