#include "linebo/cli.hpp"

#include "linebo/config.hpp"
#include "linebo/error.hpp"
#include "linebo/experiment.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace linebo {

namespace {

namespace fs = std::filesystem;

std::atomic<bool> g_stop{false};

extern "C" void on_sigint(int) { g_stop.store(true); }

class InterruptGuard {
 public:
  InterruptGuard() {
    g_stop.store(false);
    previous_ = std::signal(SIGINT, on_sigint);
  }
  ~InterruptGuard() { std::signal(SIGINT, previous_); }

 private:
  void (*previous_)(int);
};

std::vector<std::string> expand_journals(const std::vector<std::string>& inputs) {
  std::vector<std::string> out;
  for (const auto& in : inputs) {
    if (fs::is_directory(in)) {
      std::vector<std::string> found;
      for (const auto& e : fs::recursive_directory_iterator(in)) {
        const std::string name = e.path().filename().string();
        if (e.is_regular_file() && name.rfind("journal-", 0) == 0 && e.path().extension() == ".ndjson") {
          found.push_back(e.path().string());
        }
      }
      std::sort(found.begin(), found.end());
      out.insert(out.end(), found.begin(), found.end());
    } else if (fs::exists(in)) {
      out.push_back(in);
    } else {
      throw IoError(in + ": no such file or directory");
    }
  }
  if (out.empty()) throw IoError("no journal files found");
  return out;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    if (!item.empty()) parts.push_back(item);
  }
  return parts;
}

struct RunFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> algo;
  std::optional<int> batch;
  std::optional<int> repeats;
  std::optional<int> max_evals;
  bool quiet = false;
};

int do_run(const RunFlags& f, std::ostream& out, std::ostream& err) {
  RunConfig cfg = load_config(f.config);
  apply_environment(cfg);
  if (f.seed) cfg.seed = *f.seed;
  if (f.out) cfg.output_dir = *f.out;
  if (f.algo) cfg.optimizer.algorithm = parse_algorithm(*f.algo);
  if (f.batch) cfg.budget.batch_size = *f.batch;
  if (f.repeats) cfg.budget.repeats = *f.repeats;
  if (f.max_evals) cfg.budget.max_evals = *f.max_evals;
  validate_config(cfg);

  InterruptGuard guard;
  const ExperimentResult ex = run_experiment(cfg, &g_stop, f.quiet ? nullptr : &out);
  if (!f.quiet) out << "summary: " << ex.summary_path << '\n';
  if (ex.interrupted) {
    err << "interrupted; partial results kept in " << cfg.output_dir << '\n';
    return 130;
  }
  return 0;
}

}  // namespace

int cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Line-subspace Bayesian optimization"};
  app.require_subcommand(1);

  RunFlags rf;
  auto* run = app.add_subcommand("run", "Execute a config file");
  run->add_option("--config", rf.config, "Config file (JSON)")->required();
  run->add_option("--seed", rf.seed, "Seed override");
  run->add_option("--out", rf.out, "Output directory override");
  run->add_option("--algo", rf.algo, "Algorithm override");
  run->add_option("--batch", rf.batch, "Batch size override");
  run->add_option("--repeats", rf.repeats, "Repeat count override");
  run->add_option("--max-evals", rf.max_evals, "Evaluation budget override");
  run->add_flag("--quiet", rf.quiet, "Only report errors");

  BenchOptions bo;
  std::string bench_list = "levy:12,rotated-quadratic:36";
  std::string algo_list;
  std::string batch_list = "1";
  double latency = bo.latency.a;
  bool bench_quiet = false;
  auto* bench = app.add_subcommand("bench", "Run the default experiment grid over all algorithms");
  bench->add_option("--out", bo.output_dir, "Output directory")->capture_default_str();
  bench->add_option("--seed", bo.seed, "Base seed")->capture_default_str();
  bench->add_option("--repeats", bo.repeats, "Repeats per cell")->capture_default_str();
  bench->add_option("--max-evals", bo.max_evals, "Evaluation budget")->capture_default_str();
  bench->add_option("--n-init", bo.n_init, "Initial random points")->capture_default_str();
  bench->add_option("--benchmarks", bench_list, "name:dim list")->capture_default_str();
  bench->add_option("--algos", algo_list, "Comma-separated algorithms (default: all)");
  bench->add_option("--batches", batch_list, "Comma-separated batch sizes")->capture_default_str();
  bench->add_option("--latency", latency, "Constant simulated latency in seconds")->capture_default_str();
  bench->add_flag("--quiet", bench_quiet, "Only report errors");

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "Check a config file");
  validate->add_option("--config", validate_path, "Config file (JSON)")->required();

  std::vector<std::string> sum_inputs;
  std::string sum_out;
  auto* summarize = app.add_subcommand("summarize", "Aggregate journals into summary CSV");
  summarize->add_option("journals", sum_inputs, "Journal files or directories")->required();
  summarize->add_option("--out", sum_out, "Output CSV (default: stdout)");

  std::vector<std::string> plot_inputs;
  std::string plot_out;
  auto* plot = app.add_subcommand("plot-data", "Emit time vs best-value CSV");
  plot->add_option("journals", plot_inputs, "Journal files or directories")->required();
  plot->add_option("--out", plot_out, "Output CSV (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    std::ostringstream o, er;
    const int code = app.exit(e, o, er);
    out << o.str();
    err << er.str();
    return code == 0 ? 0 : 2;
  }

  try {
    if (*run) return do_run(rf, out, err);

    if (*bench) {
      bo.benchmarks.clear();
      for (const auto& item : split(bench_list, ',')) {
        const auto colon = item.find(':');
        if (colon == std::string::npos) throw InvalidArgument("--benchmarks expects name:dim, got " + item);
        bo.benchmarks.emplace_back(item.substr(0, colon), std::stoi(item.substr(colon + 1)));
      }
      if (!algo_list.empty()) {
        bo.algorithms.clear();
        for (const auto& a : split(algo_list, ',')) bo.algorithms.push_back(parse_algorithm(a));
      }
      bo.batches.clear();
      for (const auto& b : split(batch_list, ',')) bo.batches.push_back(std::stoi(b));
      bo.latency.kind = LatencyModel::Kind::Constant;
      bo.latency.a = bo.latency.b = latency;
      bo.latency.validate();
      if (const char* s = std::getenv("LINEBO_SEED"); s && *s && bench->count("--seed") == 0) bo.seed = std::stoull(s);
      if (const char* o = std::getenv("LINEBO_OUT"); o && *o && bench->count("--out") == 0) bo.output_dir = o;
      InterruptGuard guard;
      const auto results = run_bench(bo, &g_stop, bench_quiet ? nullptr : &out);
      bool interrupted = false;
      for (const auto& r : results) {
        if (!bench_quiet) out << "summary: " << r.summary_path << '\n';
        interrupted = interrupted || r.interrupted;
      }
      return interrupted ? 130 : 0;
    }

    if (*validate) {
      RunConfig cfg = load_config(validate_path);
      out << validate_path << ": ok (" << to_string(cfg.optimizer.algorithm) << ", d=" << cfg.dim()
          << ", max_evals=" << cfg.budget.max_evals << ")\n";
      return 0;
    }

    if (*summarize) {
      const auto rows = summarize_journals(expand_journals(sum_inputs));
      if (sum_out.empty()) {
        write_summary_csv(out, rows);
      } else {
        write_summary_csv(sum_out, rows);
      }
      return 0;
    }

    if (*plot) {
      const auto paths = expand_journals(plot_inputs);
      if (plot_out.empty()) {
        write_plot_data(paths, out);
      } else {
        std::ofstream f(plot_out, std::ios::binary);
        if (!f) throw IoError("cannot write " + plot_out);
        write_plot_data(paths, f);
      }
      return 0;
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace linebo
