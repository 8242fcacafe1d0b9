#include "linebo/experiment.hpp"

#include "linebo/benchmarks.hpp"
#include "linebo/error.hpp"
#include "linebo/external.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>

namespace linebo {

namespace fs = std::filesystem;

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string make_run_id(const std::string& label, Algorithm algo, int batch, int repeat) {
  char rep[16];
  std::snprintf(rep, sizeof rep, "%02d", repeat);
  return label + "-" + std::string(to_string(algo)) + "-b" + std::to_string(batch) + "-r" + rep;
}

std::unique_ptr<Objective> make_objective(const RunConfig& config, std::uint64_t run_seed) {
  std::unique_ptr<Objective> obj;
  if (config.objective.external) {
    obj = std::make_unique<ExternalEvaluator>(*config.objective.external);
  } else {
    BenchmarkFn fn = make_benchmark(config.objective.builtin, config.dim(), config.objective.params);
    // The run's box may be narrower than the benchmark's natural one.
    fn.lower = config.lower;
    fn.upper = config.upper;
    obj = std::make_unique<BuiltinObjective>(std::move(fn), mix_seed(run_seed, 0x6e6f697365ULL));
  }
  if (config.objective.maximize) obj = std::make_unique<NegatedObjective>(std::move(obj));
  return obj;
}

RunOutput run_single(const RunConfig& config, int repeat, bool write_files, const std::atomic<bool>* stop) {
  RunOutput out;
  out.seed = config.seed + static_cast<std::uint64_t>(repeat);
  out.run_id = make_run_id(config.run_label(), config.optimizer.algorithm, config.budget.batch_size, repeat);
  const DesignSpace space(config.lower, config.upper);

  Journal journal(out.run_id);
  if (write_files) {
    fs::create_directories(config.output_dir);
    out.journal_path = (fs::path(config.output_dir) / ("journal-" + out.run_id + ".ndjson")).string();
    out.trace_path = (fs::path(config.output_dir) / ("trace-" + out.run_id + ".csv")).string();
    journal.open_file(out.journal_path);
  }

  if (config.clock == ClockKind::Simulated) {
    auto objective = make_objective(config, out.seed);
    SimulatedExecutor exec(*objective, config.latency, out.seed, config.timeout_s);
    out.result = run_loop(exec, space, config.optimizer, config.budget, config.failures, out.seed, journal, stop);
  } else {
    const std::uint64_t seed = out.seed;
    ThreadedExecutor exec([&config, seed](int) { return make_objective(config, seed); }, config.budget.batch_size);
    out.result = run_loop(exec, space, config.optimizer, config.budget, config.failures, out.seed, journal, stop);
  }
  if (write_files) write_trace_csv(out.trace_path, out.result.trace);
  return out;
}

SummaryRow summarize_finals(const std::string& algo, int batch, const std::vector<double>& finals,
                            const std::vector<double>& times) {
  if (finals.empty()) throw InvalidArgument("summary needs at least one finished run");
  SummaryRow row;
  row.algo = algo;
  row.batch = batch;
  row.runs = static_cast<int>(finals.size());
  row.best = finals[0];
  row.worst = finals[0];
  double sum = 0.0;
  for (double v : finals) {
    row.best = std::min(row.best, v);
    row.worst = std::max(row.worst, v);
    sum += v;
  }
  row.mean = sum / finals.size();
  if (finals.size() > 1) {
    double ss = 0.0;
    for (double v : finals) ss += (v - row.mean) * (v - row.mean);
    row.std = std::sqrt(ss / (finals.size() - 1));
  }
  double t = 0.0;
  for (double v : times) t += v;
  row.time_s = times.empty() ? 0.0 : t / times.size();
  return row;
}

void write_trace_csv(const std::string& path, const std::vector<TraceRow>& trace) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path);
  f << "eval_index,simulated_time,wall_time,best_value\n";
  for (const TraceRow& r : trace) {
    f << r.eval_index << ',' << format_double(r.sim_time) << ',' << (r.wall_time ? format_double(*r.wall_time) : "")
      << ',' << format_double(r.best) << '\n';
  }
}

void write_summary_csv(std::ostream& f, const std::vector<SummaryRow>& rows) {
  f << "algo,batch,best,worst,mean,std,time_s\n";
  for (const SummaryRow& r : rows) {
    f << r.algo << ',' << r.batch << ',' << format_double(r.best) << ',' << format_double(r.worst) << ','
      << format_double(r.mean) << ',' << format_double(r.std) << ',' << format_double(r.time_s) << '\n';
  }
}

void write_summary_csv(const std::string& path, const std::vector<SummaryRow>& rows) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path);
  write_summary_csv(f, rows);
}

ExperimentResult run_experiment(const RunConfig& config, const std::atomic<bool>* stop, std::ostream* log) {
  validate_config(config);
  ExperimentResult ex;
  fs::create_directories(config.output_dir);
  {
    std::ofstream f(fs::path(config.output_dir) / "config.json", std::ios::binary);
    f << config_to_json(config).dump(2) << '\n';
  }
  std::vector<double> finals, times;
  for (int r = 0; r < config.budget.repeats; ++r) {
    if (stop && stop->load()) {
      ex.interrupted = true;
      break;
    }
    RunOutput run = run_single(config, r, true, stop);
    if (log) {
      *log << run.run_id << " best=" << format_double(run.result.best_value) << " evals=" << run.result.completed
           << (run.result.aborted ? " (aborted)" : "") << '\n';
    }
    if (run.result.completed > 0) {
      finals.push_back(run.result.best_value);
      times.push_back(run.result.total_time);
    }
    ex.interrupted = ex.interrupted || run.result.interrupted;
    ex.runs.push_back(std::move(run));
  }
  ex.summary_path = (fs::path(config.output_dir) / "summary.csv").string();
  if (!finals.empty()) {
    ex.rows.push_back(summarize_finals(std::string(to_string(config.optimizer.algorithm)),
                                       config.budget.batch_size, finals, times));
  }
  write_summary_csv(ex.summary_path, ex.rows);
  return ex;
}

namespace {

struct JournalRun {
  std::string algo;
  int batch = 1;
  std::vector<TraceRow> trace;
  std::optional<double> final_value;
  double total_time = 0.0;
};

JournalRun load_run(const std::string& path) {
  JournalRun run;
  bool started = false, ended = false;
  for (const EvalRecord& r : read_journal(path)) {
    switch (r.kind) {
      case EventKind::Start:
        run.algo = r.extra.value("algo", std::string());
        run.batch = r.extra.value("batch", 1);
        started = true;
        break;
      case EventKind::Observation: {
        TraceRow row;
        row.eval_index = static_cast<long long>(run.trace.size()) + 1;
        row.sim_time = r.sim_time;
        row.wall_time = r.wall_time;
        const double best = run.trace.empty() ? *r.value : std::min(run.trace.back().best, *r.value);
        row.best = best;
        run.trace.push_back(row);
        run.final_value = best;
        run.total_time = r.sim_time;
        break;
      }
      case EventKind::End:
        run.total_time = r.extra.value("total_time", run.total_time);
        ended = true;
        break;
      default: break;
    }
  }
  (void)ended;
  if (!started) throw ConfigError(path + ": journal has no start record");
  return run;
}

using GroupKey = std::pair<std::string, int>;

std::vector<std::pair<GroupKey, std::vector<JournalRun>>> group_runs(const std::vector<std::string>& paths) {
  std::vector<std::pair<GroupKey, std::vector<JournalRun>>> groups;
  for (const auto& path : paths) {
    JournalRun run = load_run(path);
    GroupKey key{run.algo, run.batch};
    auto it = std::find_if(groups.begin(), groups.end(), [&](const auto& g) { return g.first == key; });
    if (it == groups.end()) {
      groups.push_back({key, {}});
      it = groups.end() - 1;
    }
    it->second.push_back(std::move(run));
  }
  return groups;
}

}  // namespace

std::vector<SummaryRow> summarize_journals(const std::vector<std::string>& paths) {
  std::vector<SummaryRow> rows;
  for (const auto& [key, runs] : group_runs(paths)) {
    std::vector<double> finals, times;
    for (const JournalRun& r : runs) {
      if (!r.final_value) continue;
      finals.push_back(*r.final_value);
      times.push_back(r.total_time);
    }
    if (!finals.empty()) rows.push_back(summarize_finals(key.first, key.second, finals, times));
  }
  return rows;
}

void write_plot_data(const std::vector<std::string>& journal_paths, std::ostream& out) {
  out << "algo,batch,eval_index,mean_time_s,mean_best,std_best,runs\n";
  for (const auto& [key, runs] : group_runs(journal_paths)) {
    std::size_t longest = 0;
    for (const auto& r : runs) longest = std::max(longest, r.trace.size());
    for (std::size_t i = 0; i < longest; ++i) {
      double t = 0.0, s = 0.0;
      int n = 0;
      for (const auto& r : runs) {
        if (i >= r.trace.size()) continue;
        t += r.trace[i].sim_time;
        s += r.trace[i].best;
        ++n;
      }
      const double mean = s / n;
      double ss = 0.0;
      for (const auto& r : runs) {
        if (i < r.trace.size()) ss += (r.trace[i].best - mean) * (r.trace[i].best - mean);
      }
      const double sd = n > 1 ? std::sqrt(ss / (n - 1)) : 0.0;
      out << key.first << ',' << key.second << ',' << (i + 1) << ',' << format_double(t / n) << ','
          << format_double(mean) << ',' << format_double(sd) << ',' << n << '\n';
    }
  }
}

std::vector<ExperimentResult> run_bench(const BenchOptions& options, const std::atomic<bool>* stop,
                                        std::ostream* log) {
  std::vector<ExperimentResult> results;
  for (const auto& [name, dim] : options.benchmarks) {
    const std::string label = name + std::to_string(dim);
    const fs::path dir = fs::path(options.output_dir) / label;
    ExperimentResult bench;
    bench.summary_path = (dir / "summary.csv").string();
    for (Algorithm algo : options.algorithms) {
      for (int batch : options.batches) {
        if (batch > 1 && uses_model(algo) && !uses_line_search(algo)) continue;
        RunConfig cfg = benchmark_config(name, dim, algo, batch);
        cfg.budget.max_evals = options.max_evals;
        cfg.budget.n_init = options.n_init;
        cfg.budget.repeats = options.repeats;
        cfg.seed = options.seed;
        cfg.latency = options.latency;
        cfg.output_dir = dir.string();
        validate_config(cfg);
        std::vector<double> finals, times;
        for (int r = 0; r < options.repeats; ++r) {
          if (stop && stop->load()) break;
          RunOutput run = run_single(cfg, r, true, stop);
          if (log) *log << run.run_id << " best=" << format_double(run.result.best_value) << '\n';
          if (run.result.completed > 0) {
            finals.push_back(run.result.best_value);
            times.push_back(run.result.total_time);
          }
          bench.interrupted = bench.interrupted || run.result.interrupted;
          bench.runs.push_back(std::move(run));
        }
        if (!finals.empty()) {
          bench.rows.push_back(summarize_finals(std::string(to_string(algo)), batch, finals, times));
        }
        // Rewritten after every cell so an interrupt keeps a usable table.
        fs::create_directories(dir);
        write_summary_csv(bench.summary_path, bench.rows);
        if (stop && stop->load()) {
          bench.interrupted = true;
          break;
        }
      }
      if (bench.interrupted) break;
    }
    results.push_back(std::move(bench));
    if (stop && stop->load()) break;
  }
  return results;
}

}  // namespace linebo
