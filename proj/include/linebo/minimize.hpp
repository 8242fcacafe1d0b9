#pragma once

#include "linebo/types.hpp"

#include <functional>

namespace linebo {

/// Objective for box-constrained minimization: returns f(x) and writes the
/// gradient into `grad`. Returning a non-finite value rejects the point.
using SmoothObjective = std::function<double(const Vector& x, Vector& grad)>;

struct BoxMinimizeOptions {
  int max_iterations = 100;
  int memory = 8;
  double gradient_tol = 1e-5;   // on the projected gradient, infinity norm
  double relative_f_tol = 2.2e-9;
};

struct BoxMinimizeResult {
  Vector x;
  double value = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
};

/// Projected limited-memory BFGS over the box [lower, upper] with Armijo
/// backtracking. Never returns a point worse than the (projected) start.
BoxMinimizeResult minimize_box(const SmoothObjective& f, Vector x0, const Vector& lower,
                               const Vector& upper, const BoxMinimizeOptions& options = {});

}  // namespace linebo
