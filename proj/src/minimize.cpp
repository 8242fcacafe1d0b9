#include "linebo/minimize.hpp"

#include "linebo/error.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

namespace linebo {

namespace {

Vector project(const Vector& x, const Vector& lower, const Vector& upper) {
  return x.cwiseMax(lower).cwiseMin(upper);
}

// Variables pinned at a bound with the gradient pushing outward stay fixed.
Eigen::Array<bool, Eigen::Dynamic, 1> free_mask(const Vector& x, const Vector& g,
                                               const Vector& lower, const Vector& upper) {
  Eigen::Array<bool, Eigen::Dynamic, 1> mask(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const bool at_lo = x[i] <= lower[i] && g[i] > 0.0;
    const bool at_hi = x[i] >= upper[i] && g[i] < 0.0;
    mask[i] = !(at_lo || at_hi);
  }
  return mask;
}

}  // namespace

BoxMinimizeResult minimize_box(const SmoothObjective& f, Vector x0, const Vector& lower,
                               const Vector& upper, const BoxMinimizeOptions& options) {
  if (x0.size() != lower.size() || x0.size() != upper.size()) {
    throw DimensionMismatch("minimize_box: start and bounds differ in size");
  }
  const Eigen::Index n = x0.size();
  BoxMinimizeResult result;
  result.x = project(x0, lower, upper);
  Vector g(n);
  result.value = f(result.x, g);
  result.evaluations = 1;
  if (!std::isfinite(result.value)) return result;

  std::deque<Vector> s_hist, y_hist;
  std::deque<double> rho_hist;

  for (int iter = 0; iter < options.max_iterations; ++iter) {
    result.iterations = iter + 1;
    const Vector pg = result.x - project(result.x - g, lower, upper);
    if (pg.lpNorm<Eigen::Infinity>() < options.gradient_tol) {
      result.converged = true;
      break;
    }
    const auto mask = free_mask(result.x, g, lower, upper);
    Vector q = g;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!mask[i]) q[i] = 0.0;
    }

    // Two-loop recursion restricted to the free variables.
    std::vector<double> alpha(s_hist.size());
    for (int k = static_cast<int>(s_hist.size()) - 1; k >= 0; --k) {
      alpha[k] = rho_hist[k] * s_hist[k].dot(q);
      q -= alpha[k] * y_hist[k];
    }
    if (!s_hist.empty()) {
      const double gamma = s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
      q *= gamma;
    }
    for (std::size_t k = 0; k < s_hist.size(); ++k) {
      const double beta = rho_hist[k] * y_hist[k].dot(q);
      q += (alpha[k] - beta) * s_hist[k];
    }
    Vector dir = -q;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!mask[i]) dir[i] = 0.0;
    }
    if (!(dir.dot(g) < 0.0)) {
      dir = -g;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (!mask[i]) dir[i] = 0.0;
      }
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
    }

    double step = s_hist.empty() ? std::min(1.0, 1.0 / std::max(dir.norm(), 1e-12)) : 1.0;
    Vector x_new(n), g_new(n);
    double f_new = 0.0;
    bool accepted = false;
    for (int ls = 0; ls < 40; ++ls) {
      x_new = project(result.x + step * dir, lower, upper);
      const double decrease = g.dot(x_new - result.x);
      if ((x_new - result.x).lpNorm<Eigen::Infinity>() == 0.0) break;
      f_new = f(x_new, g_new);
      ++result.evaluations;
      if (std::isfinite(f_new) && f_new <= result.value + 1e-4 * decrease) {
        accepted = true;
        break;
      }
      // Minimizer of the quadratic through f(0), f'(0) and f(step),
      // kept within [0.1, 0.5] of the current step.
      double shrink = 0.5;
      if (std::isfinite(f_new) && decrease < 0.0) {
        const double curvature = f_new - result.value - decrease;
        if (curvature > 0.0) shrink = std::clamp(-0.5 * decrease / curvature, 0.1, 0.5);
      } else if (!std::isfinite(f_new)) {
        shrink = 0.1;
      }
      step *= shrink;
    }
    if (!accepted) break;

    const Vector s = x_new - result.x;
    const Vector y = g_new - g;
    const double sy = s.dot(y);
    const double f_old = result.value;
    result.x = x_new;
    result.value = f_new;
    g = g_new;
    if (sy > 1e-12 * s.norm() * y.norm()) {
      s_hist.push_back(s);
      y_hist.push_back(y);
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > options.memory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
    if (std::abs(f_old - f_new) <= options.relative_f_tol * std::max(1.0, std::abs(f_new))) {
      result.converged = true;
      break;
    }
  }
  return result;
}

}  // namespace linebo
