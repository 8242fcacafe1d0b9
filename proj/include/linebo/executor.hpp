#pragma once

#include "linebo/objective.hpp"

#include <chrono>
#include <condition_variable>
#include <deque>
#include <memory>
#include <mutex>
#include <queue>
#include <string_view>
#include <thread>
#include <vector>

namespace linebo {

/// Distribution of simulated evaluation latency, in seconds.
struct LatencyModel {
  enum class Kind { Constant, Uniform, Exponential };
  Kind kind = Kind::Constant;
  double a = 10.0;  // constant value | uniform lower | exponential mean
  double b = 10.0;  // uniform upper

  double sample(Rng& rng) const;
  void validate() const;
};

std::string_view to_string(LatencyModel::Kind kind);
LatencyModel::Kind parse_latency_kind(std::string_view text);

struct Job {
  long long id = 0;
  int worker = 0;
  int attempt = 1;
  Vector x_raw;
};

struct Completion {
  Job job;
  EvalOutcome outcome;
  double time = 0.0;  // on the executor's clock
};

/// Runs evaluations for the coordinator, which waits for one completion at a
/// time.
class Executor {
 public:
  virtual ~Executor() = default;
  virtual void submit(Job job) = 0;
  /// Blocks until the next evaluation finishes. Precondition: jobs in flight.
  virtual Completion wait_next() = 0;
  /// Seconds since the run started on the executor's clock.
  virtual double now() const = 0;
  virtual bool simulated() const = 0;
  /// Charges coordinator work (proposal cost) to the simulated clock.
  virtual void advance(double /*seconds*/) {}
};

/// Discrete-event executor: evaluates at submission, delivers the result at
/// submit time + sampled latency. Ties complete in submission order.
/// Latency for (id, attempt) comes from its own seeded stream, so traces are
/// reproducible.
class SimulatedExecutor : public Executor {
 public:
  SimulatedExecutor(Objective& objective, LatencyModel latency, std::uint64_t seed, double timeout_s = 0.0);

  void submit(Job job) override;
  Completion wait_next() override;
  double now() const override { return clock_; }
  bool simulated() const override { return true; }
  void advance(double seconds) override { clock_ += seconds; }

 private:
  struct Event {
    double time;
    long long seq;
    Completion completion;
  };
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      return a.time > b.time || (a.time == b.time && a.seq > b.seq);
    }
  };

  Objective& objective_;
  LatencyModel latency_;
  std::uint64_t seed_;
  double timeout_s_;
  double clock_ = 0.0;
  long long seq_ = 0;
  std::priority_queue<Event, std::vector<Event>, Later> events_;
};

/// Real concurrency: one thread per in-flight evaluation, one objective
/// instance per worker slot, wall-clock time.
class ThreadedExecutor : public Executor {
 public:
  ThreadedExecutor(ObjectiveFactory factory, int workers);
  ~ThreadedExecutor() override;

  void submit(Job job) override;
  Completion wait_next() override;
  double now() const override;
  bool simulated() const override { return false; }

 private:
  ObjectiveFactory factory_;
  std::vector<std::unique_ptr<Objective>> objectives_;
  std::vector<std::thread> threads_;
  std::chrono::steady_clock::time_point start_;
  std::mutex mutex_;
  std::condition_variable ready_;
  std::deque<Completion> done_;
};

}  // namespace linebo
