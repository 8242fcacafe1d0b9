#pragma once

#include "linebo/acquisition.hpp"
#include "linebo/gp.hpp"
#include "linebo/space.hpp"

#include <functional>

namespace linebo {

/// Mixture of uniform-random axis choice (probability p_random) and
/// Thompson-sample finite-difference gradient estimation.
struct DimSelectPolicy {
  double p_random = 0.8;
  double delta = 0.01;  // normalized units

  void validate() const;
};

struct LineGridConfig {
  int grid_points = 1001;
  bool refine = true;
  double refine_tol = 1e-6;

  void validate() const;
};

/// Acquisition settings for a whole run; the per-episode AcqContext is built
/// from these.
struct AcqSettings {
  AcqKind kind = AcqKind::RandLCB;
  double lcb_beta = 2.0;
  double beta_lo = 0.0;
  double beta_hi = 3.0;
};

/// Returns the argmax over i of |(f(x + d_i e_i) - f(x)) / d_i| for one joint
/// Thompson draw f, or a uniform axis with probability p_random.
int select_dimension(const GpModel& model, const Vector& x_star, const DimSelectPolicy& policy,
                     Rng& rng, bool* used_random = nullptr);

/// Utilities for a batch of line parameters.
using BatchUtility = std::function<void(const Vector& betas, Vector& utilities)>;

struct IntervalOptimum {
  double beta = 0.0;
  double utility = 0.0;
  int evaluations = 0;
  bool degenerate = false;
};

/// Grid search with M points over [lo, hi] (endpoints included), optionally
/// followed by golden-section refinement inside the bracket around the best
/// grid point. Ties go to the smaller beta.
IntervalOptimum maximize_on_interval(const BatchUtility& f, double lo, double hi,
                                     const LineGridConfig& cfg);

/// Number of refinement evaluations the golden-section stage performs on a
/// segment of the given length.
int refinement_evaluations(double segment_length, const LineGridConfig& cfg);

struct LineOptimum {
  double beta = 0.0;
  Vector point;
  double utility = 0.0;
  int evaluations = 0;
  bool degenerate = false;
};

LineOptimum optimize_on_line(const GpModel& model, const LineSegment& segment, const AcqContext& acq,
                             const LineGridConfig& cfg);

struct Proposal {
  Vector point;               // normalized
  int dimension = -1;         // -1 for full-space proposals
  bool random_dimension = false;
  double line_beta = 0.0;
  double explore_beta = 0.0;  // beta actually used by LCB-type scoring
  double utility = 0.0;
  long long acq_evaluations = 0;
  bool degenerate = false;
};

AcqContext make_context(const GpModel& model, const AcqSettings& acq, double y_best_raw, Rng& rng);

/// select_dimension -> axis line through x_star -> exploration draw ->
/// optimize_on_line.
Proposal propose_next(const GpModel& model, const Vector& x_star, double y_best_raw,
                      const DimSelectPolicy& policy, const LineGridConfig& grid,
                      const AcqSettings& acq, Rng& rng);

}  // namespace linebo
