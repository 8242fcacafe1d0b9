// Acceptance runner. One line per criterion:
//   PASS|FAIL <name>: <detail> [runtime <s> s, target < <s> s: met|missed]
// Usage: acceptance [--list] [--only NAME]...

#include "linebo/acquisition.hpp"
#include "linebo/cli.hpp"
#include "linebo/config.hpp"
#include "linebo/experiment.hpp"
#include "linebo/gp.hpp"
#include "linebo/linesearch.hpp"
#include "linebo/orchestrator.hpp"
#include "linebo/space.hpp"
#include "support/oracles.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

using namespace linebo;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  std::string name;
  double target_s;
  std::function<Outcome()> run;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

fs::path workdir(const std::string& name) {
  const fs::path p = fs::path(LINEBO_WORKDIR) / "acceptance-out" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

Matrix uniform_points(int n, int d, Rng& rng) {
  std::uniform_real_distribution<double> u(0, 1);
  Matrix x(n, d);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = u(rng);
  return x;
}

Vector standardize(const Vector& y) {
  const double m = y.mean();
  const double sd = std::sqrt((y.array() - m).square().sum() / y.size());
  return ((y.array() - m) / sd).matrix();
}

std::vector<EvalRecord> journal_of(const RunOutput& r) { return read_journal(r.journal_path); }

// ---------------------------------------------------------------------------

Outcome gp_oracle() {
  Rng rng(20240601);
  double worst = 0.0;
  for (int inst = 0; inst < 100; ++inst) {
    const int d = 1 + std::uniform_int_distribution<int>(0, 4)(rng);
    const int n = 2 + std::uniform_int_distribution<int>(0, 8)(rng);
    std::normal_distribution<double> g(0, 3);
    Vector y(n);
    for (int i = 0; i < n; ++i) y[i] = g(rng);
    Dataset data(uniform_points(n, d, rng), y);
    std::uniform_real_distribution<double> ls(0.05, 2.0), sf(0.2, 5.0), sn(1e-6, 0.2);
    KernelParams p;
    p.signal_var = sf(rng);
    p.lengthscales = Vector::NullaryExpr(d, [&](Eigen::Index) { return ls(rng); });
    p.noise_var = sn(rng);
    const GpModel m = GpModel::condition(data, p);
    const Matrix q = uniform_points(10, d, rng);
    const auto ref = oracle::dense_posterior(data.points(), standardize(y), p.signal_var, p.lengthscales,
                                             p.noise_var + m.jitter(), q);
    for (int i = 0; i < q.rows(); ++i) {
      const Posterior post = m.predict(q.row(i).transpose(), Scale::Standardized);
      worst = std::max({worst, std::abs(post.mean - ref.mean[i]), std::abs(post.var - std::max(ref.cov(i, i), 0.0))});
    }
  }
  return {worst < 1e-8, "max |predict - dense| = " + fmt("%.3g", worst) + " over 100 instances"};
}

Outcome lml_gradient() {
  Rng rng(77);
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    const int d = 1 + t % 5;
    const bool ard = t % 5 != 4;
    const int n = 10 + 2 * t;
    const Matrix x = uniform_points(n, d, rng);
    Vector y(n);
    for (int i = 0; i < n; ++i) y[i] = std::sin(4 * x.row(i).sum()) + 0.1 * std::normal_distribution<double>()(rng);
    y = standardize(y);
    std::uniform_real_distribution<double> lls(std::log(0.05), std::log(3.0)), lsf(std::log(0.1), std::log(10.0)),
        lsn(std::log(1e-6), std::log(0.5));
    Vector theta(ard ? d + 2 : 3);
    theta[0] = lsf(rng);
    for (Eigen::Index j = 1; j < theta.size() - 1; ++j) theta[j] = lls(rng);
    theta[theta.size() - 1] = lsn(rng);
    const Vector g = log_marginal_likelihood(x, y, unpack_log_params(theta, d, ard), ard).gradient;
    Vector fd(theta.size());
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
      Vector a = theta, b = theta;
      a[i] += 1e-5;
      b[i] -= 1e-5;
      fd[i] = (log_marginal_likelihood(x, y, unpack_log_params(a, d, ard), ard, false).value -
               log_marginal_likelihood(x, y, unpack_log_params(b, d, ard), ard, false).value) /
              2e-5;
    }
    worst = std::max(worst, (g - fd).norm() / std::max(fd.norm(), 1e-12));
  }
  return {worst < 1e-4, "max relative error = " + fmt("%.3g", worst) + " over 20 settings"};
}

Outcome ei_monte_carlo() {
  Rng rng(31337);
  std::uniform_real_distribution<double> mu(-1, 1), sd(0.05, 0.25);
  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    const double m = mu(rng), s = sd(rng), yb = mu(rng);
    worst = std::max(worst, std::abs(ei({m, s * s}, yb) - oracle::mc_ei(m, s, yb, 1000000, 1000 + t)));
  }
  std::uniform_real_distribution<double> wide(-1e3, 1e3), lv(-30, 10);
  long negative = 0;
  for (int t = 0; t < 100000; ++t) {
    const double var = t % 7 == 0 ? 0.0 : std::pow(10.0, lv(rng));
    if (ei({wide(rng), var}, wide(rng)) < 0.0) ++negative;
  }
  return {worst < 1e-3 && negative == 0,
          "max |EI - MC| = " + fmt("%.3g", worst) + " over 50 triples; negative EI in " + std::to_string(negative) +
              " of 1e5 fuzzed inputs"};
}

Outcome clip_soundness() {
  Rng rng(4242);
  std::uniform_real_distribution<double> u(0, 1), dir(-1, 1), wide(-4, 4);
  long violations = 0;
  for (int t = 0; t < 1000; ++t) {
    const int d = 1 + t % 8;
    Vector a(d), v(d);
    for (int j = 0; j < d; ++j) {
      a[j] = u(rng);
      v[j] = dir(rng);
    }
    if (t % 10 == 0) v[t % d] = 0.0;
    if (v.norm() < 1e-6) v[0] = 1.0;
    const LineSegment s = clip_line(a, v);
    const Vector unit = v / v.norm();
    for (int k = 0; k < 200; ++k) {
      const double b = wide(rng);
      const bool inside = oracle::in_cube(a + b * unit, 0.0);
      if (b >= s.beta_lo && b <= s.beta_hi && !oracle::in_cube(a + b * unit, 1e-12)) ++violations;
      if ((b < s.beta_lo - 1e-9 || b > s.beta_hi + 1e-9) && inside) ++violations;
    }
    for (double b : {s.beta_lo, s.beta_hi})
      if (!oracle::in_cube(s.at(b), 0.0)) ++violations;
  }
  return {violations == 0, std::to_string(violations) + " violations over 1000 anchor/direction pairs"};
}

Outcome line_grid() {
  Rng rng(555);
  std::uniform_real_distribution<double> u(0, 1), w(0.01, 0.15), h(0.3, 1.0);
  double worst = 0.0;
  int done = 0;
  while (done < 50) {
    const int k = 2 + done % 4;
    std::vector<double> c(k), wd(k), ht(k);
    for (int i = 0; i < k; ++i) c[i] = u(rng), wd[i] = w(rng), ht[i] = h(rng);
    auto f = [&](double x) {
      double s = 0.0;
      for (int i = 0; i < k; ++i) s += ht[i] * std::exp(-0.5 * std::pow((x - c[i]) / wd[i], 2));
      return s;
    };
    const int n = 1000000;
    double best = -1, best_x = 0;
    std::vector<double> vals(n);
    for (int i = 0; i < n; ++i) {
      vals[i] = f(static_cast<double>(i) / (n - 1));
      if (vals[i] > best) best = vals[i], best_x = static_cast<double>(i) / (n - 1);
    }
    // The optimum is only well defined when no other local maximum comes close.
    double runner_up = -1;
    for (int i = 1; i + 1 < n; ++i) {
      const double x = static_cast<double>(i) / (n - 1);
      if (vals[i] >= vals[i - 1] && vals[i] >= vals[i + 1] && std::abs(x - best_x) > 1e-3) runner_up = std::max(runner_up, vals[i]);
    }
    runner_up = std::max({runner_up, std::abs(best_x) > 1e-3 ? vals[0] : -1.0, std::abs(best_x - 1) > 1e-3 ? vals[n - 1] : -1.0});
    if (best - runner_up < 0.01 * best) continue;
    const BatchUtility bu = [&](const Vector& b, Vector& out) {
      out.resize(b.size());
      for (Eigen::Index i = 0; i < b.size(); ++i) out[i] = f(b[i]);
    };
    const IntervalOptimum r = maximize_on_interval(bu, 0.0, 1.0, LineGridConfig{});
    worst = std::max(worst, std::abs(r.beta - best_x));
    ++done;
  }
  return {worst < 1e-4, "max |beta - dense optimum| = " + fmt("%.3g", worst) + " over 50 mixtures"};
}

Outcome dimension_selection() {
  Rng rng(99);
  Dataset data(uniform_points(5, 36, rng), Vector::Random(5));
  const GpModel m36 = GpModel::condition(data, KernelParams::defaults(36));
  std::vector<long> counts(36, 0);
  for (int i = 0; i < 10000; ++i) ++counts[select_dimension(m36, Vector::Constant(36, 0.5), {1.0, 0.01}, rng)];
  const double p = oracle::chi_square_pvalue(counts);

  const Matrix x = uniform_points(30, 4, rng);
  Vector y(30);
  for (int i = 0; i < 30; ++i) y[i] = std::sin(6 * x(i, 2)) + 2 * x(i, 2);
  const GpModel m4 = GpModel::fit(Dataset(x, y), FitConfig{}, rng);
  int hits = 0;
  for (int t = 0; t < 200; ++t) {
    Rng r(5000 + t);
    if (select_dimension(m4, Vector::Constant(4, 0.5), {0.0, 0.01}, r) == 2) ++hits;
  }
  return {p > 0.01 && hits >= 190, "chi-square p = " + fmt("%.3f", p) + "; dominant dimension chosen " +
                                        std::to_string(hits) + "/200"};
}

Outcome cost_contrast() {
  const fs::path dir = workdir("cost");
  const long long line_expected = 1001 + refinement_evaluations(1.0, LineGridConfig{});
  std::ostringstream detail;
  bool ok = true;
  for (int d : {2, 3, 4, 12}) {
    RunConfig cfg = benchmark_config("levy", d, Algorithm::LinEasyBO, 1);
    cfg.budget = {40, 10, 1, 1};
    cfg.output_dir = dir.string();
    std::set<long long> counts;
    for (const auto& r : journal_of(run_single(cfg, 0)))
      if (r.kind == EventKind::Proposal) counts.insert(r.extra["acq_evals"].get<long long>());
    ok = ok && counts == std::set<long long>{line_expected};
    detail << "line d=" << d << ": " << (counts.size() == 1 ? std::to_string(*counts.begin()) : "varies") << "; ";
  }
  for (int d : {2, 3, 4}) {
    RunConfig cfg = benchmark_config("levy", d, Algorithm::EI, 1);
    cfg.budget = {40, 10, 1, 1};
    cfg.optimizer.fullspace.inner = FullSpaceConfig::Inner::Grid;
    cfg.optimizer.fullspace.grid_per_dim = 8;
    cfg.output_dir = dir.string();
    std::set<long long> counts;
    for (const auto& r : journal_of(run_single(cfg, 0)))
      if (r.kind == EventKind::Proposal) counts.insert(r.extra["acq_evals"].get<long long>());
    const long long expect = static_cast<long long>(std::pow(8, d));
    ok = ok && counts == std::set<long long>{expect};
    detail << "grid d=" << d << ": " << (counts.size() == 1 ? std::to_string(*counts.begin()) : "varies")
           << " (8^d = " << expect << "); ";
  }
  return {ok, detail.str()};
}

Outcome table1_analog() {
  const fs::path dir = workdir("table1");
  const std::vector<std::pair<std::string, int>> benches{{"levy", 12}, {"rotated-quadratic", 36}};
  bool a_ok = true;
  int b_fail = 0;
  std::ostringstream detail;
  for (const auto& [name, dim] : benches) {
    std::map<Algorithm, std::vector<double>> finals;
    std::vector<SummaryRow> rows;
    for (Algorithm algo : all_algorithms()) {
      RunConfig cfg = benchmark_config(name, dim, algo, 1);
      cfg.budget = {350, 20, 1, 20};
      cfg.seed = 1;
      cfg.output_dir = (dir / (name + std::to_string(dim))).string();
      std::vector<double> times;
      for (int r = 0; r < 20; ++r) {
        const RunOutput out = run_single(cfg, r);
        finals[algo].push_back(out.result.best_value);
        times.push_back(out.result.total_time);
        std::cerr << name << dim << " " << to_string(algo) << " r" << r << " best " << out.result.best_value << "\n";
      }
      rows.push_back(summarize_finals(std::string(to_string(algo)), 1, finals[algo], times));
    }
    write_summary_csv((dir / (name + std::to_string(dim)) / "summary.csv").string(), rows);
    detail << name << dim << ":";
    for (Algorithm algo : all_algorithms()) {
      if (algo == Algorithm::Random) continue;
      const double p = oracle::rank_sum_less_pvalue(finals[algo], finals[Algorithm::Random]);
      a_ok = a_ok && p < 0.05;
      detail << " " << to_string(algo) << "<random p=" << fmt("%.2g", p);
    }
    const double pb = oracle::rank_sum_less_pvalue(finals[Algorithm::LinEasyBO], finals[Algorithm::EasyBO]);
    if (!(pb < 0.05)) ++b_fail;
    detail << "; lineasybo<easybo p=" << fmt("%.2g", pb) << " (medians " << fmt("%.4g", oracle::median(finals[Algorithm::LinEasyBO]))
           << " vs " << fmt("%.4g", oracle::median(finals[Algorithm::EasyBO])) << "); ";
  }
  detail << "(a) " << (a_ok ? "holds" : "fails") << ", (b) fails on " << b_fail << "/2";
  return {a_ok && b_fail <= 1, detail.str()};
}

Outcome async_correctness() {
  const fs::path dir = workdir("async");
  std::ostringstream detail;
  bool ok = true;

  // B = 1 through the general loop vs the sequential entry point.
  RunConfig cfg = benchmark_config("levy", 12, Algorithm::LinEasyBO, 1);
  cfg.budget = {80, 20, 1, 1};
  cfg.output_dir = (dir / "b1").string();
  const RunOutput loop = run_single(cfg, 0);
  auto obj = make_objective(cfg, cfg.seed);
  SimulatedExecutor exec(*obj, cfg.latency, cfg.seed, cfg.timeout_s);
  Journal seq_journal(loop.run_id);
  const RunResult seq = run_sequential(exec, DesignSpace(cfg.lower, cfg.upper), cfg.optimizer, cfg.budget, cfg.failures,
                                       cfg.seed, seq_journal);
  bool same = seq.trace.size() == loop.result.trace.size();
  for (size_t i = 0; same && i < seq.trace.size(); ++i)
    same = seq.trace[i].best == loop.result.trace[i].best && seq.trace[i].sim_time == loop.result.trace[i].sim_time;
  ok = ok && same;
  detail << "B=1 trace " << (same ? "identical" : "DIFFERS") << "; ";

  for (int b : {5, 10, 15}) {
    RunConfig c = benchmark_config("levy", 12, Algorithm::LinEasyBO, b);
    c.budget = {120, 20, b, 1};
    c.latency = {LatencyModel::Kind::Uniform, 5.0, 15.0};
    c.output_dir = (dir / ("b" + std::to_string(b))).string();
    long long events = 0, bad_conservation = 0, bad_train = 0, fits = 0;
    long long completed = 0, pending = 0;
    for (const auto& r : journal_of(run_single(c, 0))) {
      if (r.kind == EventKind::Dispatch) ++pending;
      if (r.kind == EventKind::Observation) --pending, ++completed;
      if (r.kind == EventKind::Failure) --pending;
      if (r.extra.contains("remaining")) {
        ++events;
        const long long cc = r.extra["completed"], pp = r.extra["pending"], rem = r.extra["remaining"];
        if (cc + pp + rem != c.budget.max_evals || cc != completed || pp != pending) ++bad_conservation;
      }
      if (r.kind == EventKind::Fit) {
        ++fits;
        if (r.extra["train_size"].get<long long>() != completed + b - 1 || pending != b - 1) ++bad_train;
      }
    }
    ok = ok && bad_conservation == 0 && bad_train == 0 && fits > 0;
    detail << "B=" << b << ": " << events << " events, " << bad_conservation << " conservation and " << bad_train
           << " training-size violations over " << fits << " fits; ";
  }
  return {ok, detail.str()};
}

Outcome speedup() {
  const fs::path dir = workdir("speedup");
  std::map<int, std::vector<double>> finals, times;
  for (int b : {1, 15}) {
    RunConfig cfg = benchmark_config("levy", 12, Algorithm::LinEasyBO, b);
    cfg.budget = {350, 20, b, 20};
    cfg.latency = {LatencyModel::Kind::Constant, 10.0, 10.0};
    cfg.optimizer.proposal_time_s = 0.1;
    cfg.seed = 11;
    cfg.output_dir = (dir / ("b" + std::to_string(b))).string();
    for (int r = 0; r < 20; ++r) {
      const RunOutput out = run_single(cfg, r);
      finals[b].push_back(out.result.best_value);
      times[b].push_back(out.result.total_time);
      std::cerr << "speedup B=" << b << " r" << r << " best " << out.result.best_value << " time " << out.result.total_time
                << "\n";
    }
  }
  const double t1 = oracle::mean(times[1]), t15 = oracle::mean(times[15]);
  const double m1 = oracle::mean(finals[1]), s1 = oracle::sample_std(finals[1]), m15 = oracle::mean(finals[15]);
  const bool time_ok = t15 <= t1 / 10.0;
  const bool value_ok = std::abs(m15 - m1) <= s1;
  return {time_ok && value_ok, "mean simulated time B=1 " + fmt("%.1f", t1) + " s, B=15 " + fmt("%.1f", t15) +
                                   " s (ratio " + fmt("%.4f", t15 / t1) + "); final mean B=15 " + fmt("%.4g", m15) +
                                   " vs B=1 " + fmt("%.4g", m1) + " +- " + fmt("%.4g", s1)};
}

std::map<std::string, std::string> traces_under(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    const std::string name = e.path().filename().string();
    if (e.is_regular_file() && name.rfind("trace-", 0) == 0) {
      std::ifstream f(e.path());
      std::stringstream ss;
      ss << f.rdbuf();
      out[fs::relative(e.path(), root).string()] = ss.str();
    }
  }
  return out;
}

int bench_cli(const fs::path& out) {
  std::vector<std::string> args{"linebo",      "bench",        "--out",     out.string(),  "--seed",
                                "5",           "--repeats",    "2",         "--max-evals", "40",
                                "--n-init",    "10",           "--benchmarks", "levy:4,rotated-quadratic:6",
                                "--batches",   "1,4",          "--latency", "7", "--quiet"};
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream o, e;
  const int code = cli(static_cast<int>(argv.size()), argv.data(), o, e);
  if (code != 0) std::cerr << e.str();
  return code;
}

Outcome determinism() {
  const fs::path a = workdir("determinism-a"), b = workdir("determinism-b");
  const int ca = bench_cli(a), cb = bench_cli(b);
  const auto ta = traces_under(a), tb = traces_under(b);
  const bool ok = ca == 0 && cb == 0 && !ta.empty() && ta == tb;
  return {ok, std::to_string(ta.size()) + " trace files per bench run, " + (ta == tb ? "byte-identical" : "DIFFERENT")};
}

Outcome fuzz() {
  const fs::path dir = workdir("fuzz");
  const std::string text = std::string(R"({
  "schema_version": 1,
  "space": {"lower": [-1, -1, -1], "upper": [1, 1, 1]},
  "objective": {"external": {"command": ")") +
                           LINEBO_PYTHON + " " + LINEBO_FIXTURES + R"(/fuzz.py 1000", "mode": "persistent", "timeout_s": 30}},
  "algorithm": "random",
  "budget": {"max_evals": 20, "n_init": 20, "batch": 4, "repeats": 1},
  "failures": {"retries": 0, "max_consecutive": 0},
  "clock": "wall",
  "output_dir": ")" + dir.string() + R"("
})";
  RunOutput out;
  try {
    out = run_single(parse_config(text, "fuzz.json"), 0);
  } catch (const std::exception& e) {
    return {false, std::string("coordinator threw: ") + e.what()};
  }
  std::map<std::string, long> kinds;
  long failures = 0, observations = 0;
  for (const auto& r : journal_of(out)) {
    if (r.kind == EventKind::Failure) {
      ++failures;
      ++kinds[r.extra["error"].get<std::string>()];
    }
    if (r.kind == EventKind::Observation) ++observations;
  }
  std::ostringstream detail;
  detail << failures << " failure records, " << observations << " observations; errors:";
  bool typed = true;
  for (const auto& [k, n] : kinds) {
    detail << " " << k << "=" << n;
    typed = typed && (k == "protocol_violation" || k == "non_finite_value");
  }
  return {failures == 1000 && observations == 20 && typed && out.result.completed == 20, detail.str()};
}

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> all{
      {"gp_oracle", 5, gp_oracle},
      {"lml_gradient", 10, lml_gradient},
      {"ei_monte_carlo", 30, ei_monte_carlo},
      {"clip_soundness", 5, clip_soundness},
      {"line_grid", 30, line_grid},
      {"dimension_selection", 60, dimension_selection},
      {"cost_contrast", 120, cost_contrast},
      {"table1_analog", 1800, table1_analog},
      {"async_correctness", 300, async_correctness},
      {"speedup", 600, speedup},
      {"determinism", 0, determinism},
      {"fuzz", 0, fuzz},
  };
  return all;
}

}  // namespace

int main(int argc, char** argv) {
  std::set<std::string> only;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--list") {
      for (const auto& c : criteria()) std::cout << c.name << "\n";
      return 0;
    }
    if (a == "--only" && i + 1 < argc) {
      only.insert(argv[++i]);
      continue;
    }
    std::cerr << "usage: acceptance [--list] [--only NAME]...\n";
    return 2;
  }
  int failed = 0, ran = 0;
  for (const auto& c : criteria()) {
    if (!only.empty() && !only.count(c.name)) continue;
    ++ran;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::string timing = "runtime " + fmt("%.1f", secs) + " s";
    if (c.target_s > 0) timing += ", target < " + fmt("%.0f", c.target_s) + " s: " + (secs < c.target_s ? "met" : "missed");
    std::cout << (o.pass ? "PASS " : "FAIL ") << c.name << ": " << o.detail << " [" << timing << "]" << std::endl;
    if (!o.pass) ++failed;
  }
  if (ran == 0) {
    std::cerr << "no criterion matched\n";
    return 2;
  }
  return failed == 0 ? 0 : 1;
}
