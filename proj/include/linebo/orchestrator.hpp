#pragma once

#include "linebo/executor.hpp"
#include "linebo/fullspace.hpp"
#include "linebo/gp.hpp"
#include "linebo/journal.hpp"
#include "linebo/linesearch.hpp"
#include "linebo/space.hpp"

#include <atomic>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace linebo {

enum class Algorithm { LinEasyBO, LineEI, LineLCB, EI, LCB, EasyBO, Random };

std::string_view to_string(Algorithm algo);
/// Accepts the canonical names plus "fullspace-ei", "fullspace-lcb",
/// "fullspace-easybo".
Algorithm parse_algorithm(std::string_view text);
std::vector<Algorithm> all_algorithms();
bool uses_line_search(Algorithm algo);
bool uses_model(Algorithm algo);
AcqKind acquisition_of(Algorithm algo);

struct BudgetConfig {
  int max_evals = 350;
  int n_init = 20;
  int batch_size = 1;
  int repeats = 20;

  void validate() const;
};

struct FailurePolicy {
  int retries = 1;                   // re-dispatches of a failed point
  int max_consecutive_failures = 10; // abort threshold; 0 disables
};

struct OptimizerConfig {
  Algorithm algorithm = Algorithm::LinEasyBO;
  AcqSettings acq;  // kind is derived from the algorithm
  DimSelectPolicy policy;
  LineGridConfig grid;
  FullSpaceConfig fullspace;
  FitConfig fit;
  int refit_all_until = 100;  // refit hyperparameters every proposal while N <= this
  int refit_every = 5;        // ... and every k-th proposal afterwards
  double proposal_time_s = 0.0;  // simulated-clock cost charged per proposal

  void validate(int dim) const;
};

struct TraceRow {
  long long eval_index = 0;  // completed evaluations so far (1-based)
  double sim_time = 0.0;
  std::optional<double> wall_time;
  double best = 0.0;
};

struct RunResult {
  std::vector<TraceRow> trace;
  double best_value = 0.0;
  Vector best_point_raw;
  long long completed = 0;
  long long failed = 0;
  long long dispatched = 0;
  bool aborted = false;
  bool interrupted = false;
  double total_time = 0.0;
  std::vector<long long> acq_evaluations;  // per model-based proposal
};

/// Shared coordinator loop: any batch size, any algorithm.
RunResult run_loop(Executor& executor, const DesignSpace& space, const OptimizerConfig& config,
                   const BudgetConfig& budget, const FailurePolicy& failures, std::uint64_t seed,
                   Journal& journal, const std::atomic<bool>* stop = nullptr);

/// Algorithm 1 loop. Requires batch_size == 1.
RunResult run_sequential(Executor& executor, const DesignSpace& space, const OptimizerConfig& config,
                         const BudgetConfig& budget, const FailurePolicy& failures, std::uint64_t seed,
                         Journal& journal, const std::atomic<bool>* stop = nullptr);

/// Asynchronous batch loop with predictive-mean fantasies for pending points.
/// Requires batch_size >= 2.
RunResult run_async_batch(Executor& executor, const DesignSpace& space, const OptimizerConfig& config,
                          const BudgetConfig& budget, const FailurePolicy& failures, std::uint64_t seed,
                          Journal& journal, const std::atomic<bool>* stop = nullptr);

RunResult run_random_search(Executor& executor, const DesignSpace& space, const BudgetConfig& budget,
                            const FailurePolicy& failures, std::uint64_t seed, Journal& journal,
                            const std::atomic<bool>* stop = nullptr);

/// Whole-cube acquisition maximization baseline. Requires batch_size == 1 and
/// an EI/LCB/EasyBO algorithm.
RunResult run_fullspace_bo(Executor& executor, const DesignSpace& space, const OptimizerConfig& config,
                           const BudgetConfig& budget, const FailurePolicy& failures, std::uint64_t seed,
                           Journal& journal, const std::atomic<bool>* stop = nullptr);

}  // namespace linebo
