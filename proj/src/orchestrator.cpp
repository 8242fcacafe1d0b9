#include "linebo/orchestrator.hpp"

#include "linebo/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

namespace linebo {

std::string_view to_string(Algorithm algo) {
  switch (algo) {
    case Algorithm::LinEasyBO: return "lineasybo";
    case Algorithm::LineEI: return "line-ei";
    case Algorithm::LineLCB: return "line-lcb";
    case Algorithm::EI: return "ei";
    case Algorithm::LCB: return "lcb";
    case Algorithm::EasyBO: return "easybo";
    case Algorithm::Random: return "random";
  }
  return "?";
}

Algorithm parse_algorithm(std::string_view text) {
  for (Algorithm a : all_algorithms()) {
    if (to_string(a) == text) return a;
  }
  if (text == "fullspace-ei") return Algorithm::EI;
  if (text == "fullspace-lcb") return Algorithm::LCB;
  if (text == "fullspace-easybo") return Algorithm::EasyBO;
  throw InvalidArgument("unknown algorithm '" + std::string(text) + "'");
}

std::vector<Algorithm> all_algorithms() {
  return {Algorithm::Random, Algorithm::EI,     Algorithm::LCB,      Algorithm::EasyBO,
          Algorithm::LineEI, Algorithm::LineLCB, Algorithm::LinEasyBO};
}

bool uses_line_search(Algorithm algo) {
  return algo == Algorithm::LinEasyBO || algo == Algorithm::LineEI || algo == Algorithm::LineLCB;
}

bool uses_model(Algorithm algo) { return algo != Algorithm::Random; }

AcqKind acquisition_of(Algorithm algo) {
  switch (algo) {
    case Algorithm::LineEI:
    case Algorithm::EI: return AcqKind::EI;
    case Algorithm::LineLCB:
    case Algorithm::LCB: return AcqKind::LCB;
    default: return AcqKind::RandLCB;
  }
}

void BudgetConfig::validate() const {
  if (max_evals < 1) throw InvalidArgument("max_evals must be >= 1");
  if (n_init < 0) throw InvalidArgument("n_init must be >= 0");
  if (n_init > max_evals) throw InvalidArgument("n_init must not exceed max_evals");
  if (batch_size < 1) throw InvalidArgument("batch size must be >= 1");
  if (repeats < 1) throw InvalidArgument("repeats must be >= 1");
}

void OptimizerConfig::validate(int dim) const {
  policy.validate();
  grid.validate();
  fullspace.validate(dim);
  if (!(acq.lcb_beta >= 0.0) || !std::isfinite(acq.lcb_beta)) throw InvalidArgument("LCB beta must be finite and >= 0");
  if (!(acq.beta_lo >= 0.0 && acq.beta_lo < acq.beta_hi && std::isfinite(acq.beta_hi))) {
    throw BadRange("exploration range must satisfy 0 <= lo < hi");
  }
  if (fit.restarts < 1) throw InvalidArgument("fit restarts must be >= 1");
  if (refit_every < 1) throw InvalidArgument("refit_every must be >= 1");
  if (proposal_time_s < 0.0) throw InvalidArgument("proposal_time_s must be >= 0");
}

namespace {

std::vector<double> to_std_vector(const Vector& v) { return {v.data(), v.data() + v.size()}; }

struct Pending {
  Vector unit;
  int worker = 0;
  int attempt = 1;
};

class Coordinator {
 public:
  Coordinator(Executor& executor, const DesignSpace& space, const OptimizerConfig& config,
              const BudgetConfig& budget, const FailurePolicy& failures, std::uint64_t seed, Journal& journal,
              const std::atomic<bool>* stop)
      : exec_(executor),
        space_(space),
        cfg_(config),
        budget_(budget),
        failures_(failures),
        rng_(seed),
        seed_(seed),
        journal_(journal),
        stop_(stop),
        data_(space.dim()) {
    cfg_.acq.kind = acquisition_of(cfg_.algorithm);
    budget_.validate();
    cfg_.validate(space.dim());
    n_random_ = std::min(budget_.max_evals, std::max(budget_.n_init, budget_.batch_size));
    for (int w = 0; w < budget_.batch_size; ++w) free_.insert(w);
  }

  RunResult run() {
    EvalRecord start = base(EventKind::Start);
    start.extra = {{"algo", to_string(cfg_.algorithm)}, {"batch", budget_.batch_size},
                   {"seed", seed_},                     {"max_evals", budget_.max_evals},
                   {"n_init", budget_.n_init},          {"dim", space_.dim()}};
    journal_.append(std::move(start));

    fill_workers();
    while (!pending_.empty()) {
      Completion c = exec_.wait_next();
      handle(std::move(c));
      fill_workers();
    }

    result_.total_time = exec_.now();
    result_.completed = completed_;
    result_.interrupted = stopped();
    EvalRecord end = base(EventKind::End);
    end.extra = {{"completed", completed_}, {"failed", result_.failed}, {"dispatched", next_index_},
                 {"aborted", result_.aborted}, {"interrupted", result_.interrupted},
                 {"total_time", result_.total_time}};
    if (best_index_ >= 0) {
      end.value = result_.best_value;
      end.point = to_std_vector(result_.best_point_raw);
    }
    journal_.append(std::move(end));
    result_.dispatched = next_index_;
    return std::move(result_);
  }

 private:
  bool stopped() const { return stop_ && stop_->load(); }
  long long remaining() const {
    return budget_.max_evals - completed_ - static_cast<long long>(pending_.size());
  }

  EvalRecord base(EventKind kind) const {
    EvalRecord r;
    r.kind = kind;
    r.sim_time = exec_.now();
    if (!exec_.simulated()) r.wall_time = exec_.now();
    return r;
  }

  void counters(EvalRecord& r) const {
    r.extra["completed"] = completed_;
    r.extra["pending"] = pending_.size();
    r.extra["remaining"] = remaining();
  }

  void fill_workers() {
    while (!result_.aborted && !stopped() && !free_.empty() && remaining() > 0) {
      const int worker = *free_.begin();
      free_.erase(free_.begin());
      dispatch(next_point(), worker, 1);
    }
  }

  void dispatch(const Vector& unit, int worker, int attempt) {
    const long long id = next_index_++;
    Job job{id, worker, attempt, space_.denormalize(unit)};
    pending_[id] = Pending{unit, worker, attempt};
    EvalRecord r = base(EventKind::Dispatch);
    r.index = id;
    r.worker = worker;
    r.point = to_std_vector(job.x_raw);
    r.extra["attempt"] = attempt;
    counters(r);
    journal_.append(std::move(r));
    exec_.submit(std::move(job));
  }

  Vector uniform_point() {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Vector x(space_.dim());
    for (int j = 0; j < space_.dim(); ++j) x[j] = unit(rng_);
    return x;
  }

  Vector next_point() {
    const bool random_phase = generated_ < n_random_ || completed_ < 2 || !uses_model(cfg_.algorithm);
    ++generated_;
    if (random_phase) return uniform_point();
    return propose();
  }

  Vector propose() {
    // Training set: real observations plus pending points at the current
    // model's predictive mean.
    Dataset train = data_;
    Matrix pending_pts(static_cast<Eigen::Index>(pending_.size()), space_.dim());
    {
      Eigen::Index i = 0;
      for (const auto& [id, p] : pending_) pending_pts.row(i++) = p.unit.transpose();
    }
    if (!pending_.empty()) {
      const KernelParams params = theta_ ? *theta_ : KernelParams::defaults(space_.dim());
      const GpModel current = GpModel::condition(data_, params);
      Vector mean, var;
      current.predict_batch(pending_pts, mean, var, Scale::Raw);
      for (Eigen::Index i = 0; i < mean.size(); ++i) train.add(pending_pts.row(i).transpose(), mean[i]);
    }

    const int n_train = train.size();
    const bool refit = !theta_ || n_train <= cfg_.refit_all_until || proposals_ % cfg_.refit_every == 0;
    GpModel model = refit ? GpModel::fit(train, cfg_.fit, rng_, theta_)
                          : GpModel::condition(train, *theta_);
    theta_ = model.params();

    EvalRecord fit = base(EventKind::Fit);
    fit.index = next_index_;
    fit.extra = {{"train_size", n_train},
                 {"fantasies", pending_.size()},
                 {"refit", refit},
                 {"signal_var", model.params().signal_var},
                 {"noise_var", model.params().noise_var},
                 {"lengthscales", to_std_vector(model.params().lengthscales)},
                 {"jitter", model.jitter()},
                 {"lml", model.log_marginal_likelihood()}};
    journal_.append(std::move(fit));

    const Vector x_star = data_.points().row(best_index_).transpose();
    Proposal p = uses_line_search(cfg_.algorithm)
                     ? propose_next(model, x_star, result_.best_value, cfg_.policy, cfg_.grid, cfg_.acq, rng_)
                     : propose_fullspace(model, result_.best_value, cfg_.acq, cfg_.fullspace, rng_);
    ++proposals_;
    result_.acq_evaluations.push_back(p.acq_evaluations);

    double min_dist = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < pending_pts.rows(); ++i) {
      min_dist = std::min(min_dist, (pending_pts.row(i).transpose() - p.point).norm());
    }
    EvalRecord r = base(EventKind::Proposal);
    r.index = next_index_;
    if (p.dimension >= 0) {
      r.dimension = p.dimension;
      r.line_beta = p.line_beta;
    }
    r.acquisition = std::string(to_string(cfg_.acq.kind));
    if (cfg_.acq.kind != AcqKind::EI) r.explore_beta = p.explore_beta;
    r.point = to_std_vector(space_.denormalize(p.point));
    r.extra["acq_evals"] = p.acq_evaluations;
    r.extra["utility"] = std::isfinite(p.utility) ? nlohmann::json(p.utility) : nlohmann::json(nullptr);
    r.extra["train_size"] = n_train;
    r.extra["random_dimension"] = p.random_dimension;
    r.extra["degenerate_segment"] = p.degenerate;
    r.extra["duplicate"] = !(min_dist > 1e-9);
    counters(r);
    journal_.append(std::move(r));
    exec_.advance(cfg_.proposal_time_s);
    return p.point;
  }

  void handle(Completion c) {
    const auto it = pending_.find(c.job.id);
    if (it == pending_.end()) throw InvalidArgument("completion for unknown evaluation");
    const Pending p = it->second;
    pending_.erase(it);

    if (c.outcome.ok()) {
      const double y = *c.outcome.value;
      data_.add(p.unit, y);
      ++completed_;
      const int idx = data_.size() - 1;
      if (best_index_ < 0 || y < result_.best_value) {
        best_index_ = idx;
        result_.best_value = y;
        result_.best_point_raw = c.job.x_raw;
      }
      consecutive_failures_ = 0;
      EvalRecord r = base(EventKind::Observation);
      r.sim_time = c.time;
      r.index = c.job.id;
      r.worker = c.job.worker;
      r.point = to_std_vector(c.job.x_raw);
      r.value = y;
      r.extra["best"] = result_.best_value;
      counters(r);
      journal_.append(std::move(r));
      TraceRow row;
      row.eval_index = completed_;
      row.sim_time = c.time;
      if (!exec_.simulated()) row.wall_time = c.time;
      row.best = result_.best_value;
      result_.trace.push_back(row);
      free_.insert(c.job.worker);
      return;
    }

    const bool retry = p.attempt <= failures_.retries && !stopped();
    EvalRecord r = base(EventKind::Failure);
    r.sim_time = c.time;
    r.index = c.job.id;
    r.worker = c.job.worker;
    r.point = to_std_vector(c.job.x_raw);
    r.extra["error"] = to_string(c.outcome.error);
    r.extra["message"] = c.outcome.message;
    r.extra["attempt"] = p.attempt;
    r.extra["retrying"] = retry;
    counters(r);
    journal_.append(std::move(r));
    if (retry) {
      dispatch(p.unit, p.worker, p.attempt + 1);
      return;
    }
    ++result_.failed;
    ++consecutive_failures_;
    free_.insert(c.job.worker);
    if (failures_.max_consecutive_failures > 0 && consecutive_failures_ >= failures_.max_consecutive_failures) {
      result_.aborted = true;
    }
  }

  Executor& exec_;
  const DesignSpace& space_;
  OptimizerConfig cfg_;
  BudgetConfig budget_;
  FailurePolicy failures_;
  Rng rng_;
  std::uint64_t seed_;
  Journal& journal_;
  const std::atomic<bool>* stop_;

  Dataset data_;
  std::map<long long, Pending> pending_;
  std::set<int> free_;
  std::optional<KernelParams> theta_;
  RunResult result_;
  int best_index_ = -1;
  long long completed_ = 0;
  long long next_index_ = 0;
  int n_random_ = 0;
  int generated_ = 0;
  long long proposals_ = 0;
  int consecutive_failures_ = 0;
};

}  // namespace

RunResult run_loop(Executor& executor, const DesignSpace& space, const OptimizerConfig& config,
                   const BudgetConfig& budget, const FailurePolicy& failures, std::uint64_t seed,
                   Journal& journal, const std::atomic<bool>* stop) {
  return Coordinator(executor, space, config, budget, failures, seed, journal, stop).run();
}

RunResult run_sequential(Executor& executor, const DesignSpace& space, const OptimizerConfig& config,
                         const BudgetConfig& budget, const FailurePolicy& failures, std::uint64_t seed,
                         Journal& journal, const std::atomic<bool>* stop) {
  if (budget.batch_size != 1) throw InvalidArgument("run_sequential requires batch size 1");
  return run_loop(executor, space, config, budget, failures, seed, journal, stop);
}

RunResult run_async_batch(Executor& executor, const DesignSpace& space, const OptimizerConfig& config,
                          const BudgetConfig& budget, const FailurePolicy& failures, std::uint64_t seed,
                          Journal& journal, const std::atomic<bool>* stop) {
  if (budget.batch_size < 2) throw InvalidArgument("run_async_batch requires batch size >= 2");
  return run_loop(executor, space, config, budget, failures, seed, journal, stop);
}

RunResult run_random_search(Executor& executor, const DesignSpace& space, const BudgetConfig& budget,
                            const FailurePolicy& failures, std::uint64_t seed, Journal& journal,
                            const std::atomic<bool>* stop) {
  OptimizerConfig cfg;
  cfg.algorithm = Algorithm::Random;
  return run_loop(executor, space, cfg, budget, failures, seed, journal, stop);
}

RunResult run_fullspace_bo(Executor& executor, const DesignSpace& space, const OptimizerConfig& config,
                           const BudgetConfig& budget, const FailurePolicy& failures, std::uint64_t seed,
                           Journal& journal, const std::atomic<bool>* stop) {
  if (budget.batch_size != 1) throw InvalidArgument("run_fullspace_bo requires batch size 1");
  if (!uses_model(config.algorithm) || uses_line_search(config.algorithm)) {
    throw InvalidArgument("run_fullspace_bo needs the ei, lcb or easybo algorithm");
  }
  return run_loop(executor, space, config, budget, failures, seed, journal, stop);
}

}  // namespace linebo
