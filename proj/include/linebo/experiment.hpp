#pragma once

#include "linebo/config.hpp"
#include "linebo/journal.hpp"
#include "linebo/orchestrator.hpp"

#include <atomic>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace linebo {

/// "%.17g": round-trips doubles exactly, so CSVs compare byte for byte.
std::string format_double(double v);

/// <label>-<algo>-b<B>-r<NN>
std::string make_run_id(const std::string& label, Algorithm algo, int batch, int repeat);

/// Minimization-side objective for one worker of one run.
std::unique_ptr<Objective> make_objective(const RunConfig& config, std::uint64_t run_seed);

struct RunOutput {
  std::string run_id;
  std::uint64_t seed = 0;
  RunResult result;
  std::string journal_path;
  std::string trace_path;
};

/// One repeat: seed = config.seed + repeat. Files go under config.output_dir
/// when `write_files` is set.
RunOutput run_single(const RunConfig& config, int repeat, bool write_files = true,
                     const std::atomic<bool>* stop = nullptr);

struct SummaryRow {
  std::string algo;
  int batch = 1;
  double best = 0.0;
  double worst = 0.0;
  double mean = 0.0;
  double std = 0.0;    // sample (n - 1); 0 for a single run
  double time_s = 0.0; // mean total run time
  int runs = 0;
};

SummaryRow summarize_finals(const std::string& algo, int batch, const std::vector<double>& finals,
                            const std::vector<double>& times);

struct ExperimentResult {
  std::vector<RunOutput> runs;
  std::vector<SummaryRow> rows;
  std::string summary_path;
  bool interrupted = false;
};

/// Runs config.budget.repeats seeded repeats and writes journals, traces and
/// summary.csv. An interrupt finishes in-flight work, keeps what completed and
/// still writes the summary.
ExperimentResult run_experiment(const RunConfig& config, const std::atomic<bool>* stop = nullptr,
                                std::ostream* log = nullptr);

void write_trace_csv(const std::string& path, const std::vector<TraceRow>& trace);
void write_summary_csv(const std::string& path, const std::vector<SummaryRow>& rows);
void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows);

/// One row per (algo, batch) found in the journals, in first-seen order.
std::vector<SummaryRow> summarize_journals(const std::vector<std::string>& paths);

/// Mean time and best-so-far (mean, std) per completed-evaluation index,
/// grouped by (algo, batch). Indices reached by fewer runs average over those.
void write_plot_data(const std::vector<std::string>& journal_paths, std::ostream& out);

struct BenchOptions {
  std::vector<std::pair<std::string, int>> benchmarks{{"levy", 12}, {"rotated-quadratic", 36}};
  std::vector<Algorithm> algorithms = all_algorithms();
  std::vector<int> batches{1};
  int max_evals = 350;
  int n_init = 20;
  int repeats = 20;
  std::uint64_t seed = 1;
  LatencyModel latency;
  std::string output_dir = "linebo-bench";
};

/// The default experiment grid. Each benchmark writes to
/// <output_dir>/<name><dim>/. Full-space baselines only run at batch 1.
std::vector<ExperimentResult> run_bench(const BenchOptions& options, const std::atomic<bool>* stop = nullptr,
                                        std::ostream* log = nullptr);

}  // namespace linebo
