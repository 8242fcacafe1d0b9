#include "linebo/executor.hpp"

#include "linebo/error.hpp"

#include <cmath>

namespace linebo {

std::string_view to_string(EvalError e) {
  switch (e) {
    case EvalError::None: return "none";
    case EvalError::Timeout: return "timeout";
    case EvalError::ProtocolViolation: return "protocol_violation";
    case EvalError::NonFiniteValue: return "non_finite_value";
    case EvalError::ProcessCrash: return "process_crash";
    case EvalError::EvaluatorFailure: return "evaluator_failure";
    case EvalError::OutOfBounds: return "out_of_bounds";
  }
  return "?";
}

std::string_view to_string(LatencyModel::Kind kind) {
  switch (kind) {
    case LatencyModel::Kind::Constant: return "constant";
    case LatencyModel::Kind::Uniform: return "uniform";
    case LatencyModel::Kind::Exponential: return "exponential";
  }
  return "?";
}

LatencyModel::Kind parse_latency_kind(std::string_view text) {
  if (text == "constant") return LatencyModel::Kind::Constant;
  if (text == "uniform") return LatencyModel::Kind::Uniform;
  if (text == "exponential") return LatencyModel::Kind::Exponential;
  throw InvalidArgument("unknown latency model '" + std::string(text) + "'");
}

double LatencyModel::sample(Rng& rng) const {
  switch (kind) {
    case Kind::Constant: return a;
    case Kind::Uniform: return std::uniform_real_distribution<double>(a, b)(rng);
    case Kind::Exponential: return std::exponential_distribution<double>(1.0 / a)(rng);
  }
  return a;
}

void LatencyModel::validate() const {
  const bool ok = kind == Kind::Uniform ? (a >= 0.0 && b >= a && std::isfinite(b))
                                        : (a >= 0.0 && std::isfinite(a) && (kind != Kind::Exponential || a > 0.0));
  if (!ok) throw InvalidArgument("invalid latency model parameters");
}

SimulatedExecutor::SimulatedExecutor(Objective& objective, LatencyModel latency, std::uint64_t seed,
                                     double timeout_s)
    : objective_(objective), latency_(latency), seed_(seed), timeout_s_(timeout_s) {
  latency_.validate();
}

void SimulatedExecutor::submit(Job job) {
  Rng rng(mix_seed(seed_, static_cast<std::uint64_t>(job.id)));
  double latency = latency_.sample(rng);
  Completion c;
  if (timeout_s_ > 0.0 && latency > timeout_s_) {
    latency = timeout_s_;
    c.outcome = EvalOutcome::failure(EvalError::Timeout, "simulated evaluation exceeded the timeout");
  } else {
    try {
      c.outcome = objective_.evaluate({job.id, job.worker, job.x_raw});
    } catch (const std::exception& e) {
      c.outcome = EvalOutcome::failure(EvalError::ProcessCrash, e.what());
    }
  }
  c.time = clock_ + latency;
  c.job = std::move(job);
  events_.push({c.time, seq_++, std::move(c)});
}

Completion SimulatedExecutor::wait_next() {
  if (events_.empty()) throw InvalidArgument("wait_next with no evaluation in flight");
  Event e = events_.top();
  events_.pop();
  clock_ = std::max(clock_, e.time);
  return std::move(e.completion);
}

ThreadedExecutor::ThreadedExecutor(ObjectiveFactory factory, int workers)
    : factory_(std::move(factory)),
      objectives_(static_cast<std::size_t>(workers)),
      threads_(static_cast<std::size_t>(workers)),
      start_(std::chrono::steady_clock::now()) {
  if (workers < 1) throw InvalidArgument("ThreadedExecutor needs at least one worker");
}

ThreadedExecutor::~ThreadedExecutor() {
  for (auto& t : threads_) {
    if (t.joinable()) t.join();
  }
}

double ThreadedExecutor::now() const {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
}

void ThreadedExecutor::submit(Job job) {
  const auto w = static_cast<std::size_t>(job.worker);
  if (w >= threads_.size()) throw InvalidArgument("worker id out of range");
  if (threads_[w].joinable()) threads_[w].join();
  if (!objectives_[w]) objectives_[w] = factory_(job.worker);
  Objective* objective = objectives_[w].get();
  threads_[w] = std::thread([this, objective, job = std::move(job)]() mutable {
    Completion c;
    try {
      c.outcome = objective->evaluate({job.id, job.worker, job.x_raw});
    } catch (const std::exception& e) {
      c.outcome = EvalOutcome::failure(EvalError::ProcessCrash, e.what());
    }
    c.job = std::move(job);
    std::lock_guard lock(mutex_);
    c.time = now();
    done_.push_back(std::move(c));
    ready_.notify_one();
  });
}

Completion ThreadedExecutor::wait_next() {
  std::unique_lock lock(mutex_);
  ready_.wait(lock, [this] { return !done_.empty(); });
  Completion c = std::move(done_.front());
  done_.pop_front();
  return c;
}

}  // namespace linebo
