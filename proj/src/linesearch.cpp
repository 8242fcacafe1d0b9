#include "linebo/linesearch.hpp"

#include "linebo/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace linebo {

namespace {

constexpr double kInvPhi = 0.6180339887498949;  // 1 / golden ratio
constexpr int kMaxRefineEvals = 60;

double finite_or_lowest(double v) {
  return std::isnan(v) ? -std::numeric_limits<double>::infinity() : v;
}

double eval_one(const BatchUtility& f, double beta) {
  Vector b(1), u(1);
  b[0] = beta;
  f(b, u);
  return finite_or_lowest(u[0]);
}

int golden_iterations(double width, double tol) {
  if (!(width > tol)) return 0;
  const int n = static_cast<int>(std::ceil(std::log(width / tol) / -std::log(kInvPhi)));
  return std::clamp(n, 0, kMaxRefineEvals - 2);
}

}  // namespace

void DimSelectPolicy::validate() const {
  if (!(p_random >= 0.0 && p_random <= 1.0)) throw InvalidArgument("p_random must lie in [0, 1]");
  if (!(delta > 0.0 && delta < 0.5)) throw InvalidArgument("delta must lie in (0, 0.5)");
}

void LineGridConfig::validate() const {
  if (grid_points < 2) throw InvalidArgument("grid_points must be >= 2");
  if (!(refine_tol > 0.0)) throw InvalidArgument("refine_tol must be positive");
}

int select_dimension(const GpModel& model, const Vector& x_star, const DimSelectPolicy& policy,
                     Rng& rng, bool* used_random) {
  if (!model.fitted()) throw ModelNotFitted("select_dimension needs a fitted model");
  if (x_star.size() != model.dim()) throw DimensionMismatch("incumbent dimension mismatch");
  policy.validate();
  const int d = model.dim();
  const double coin = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  if (coin < policy.p_random) {
    if (used_random) *used_random = true;
    return std::uniform_int_distribution<int>(0, d - 1)(rng);
  }
  if (used_random) *used_random = false;

  Matrix queries(d + 1, d);
  Vector steps(d);
  queries.row(0) = x_star.transpose();
  for (int j = 0; j < d; ++j) {
    steps[j] = x_star[j] + policy.delta > 1.0 ? -policy.delta : policy.delta;
    queries.row(j + 1) = x_star.transpose();
    queries(j + 1, j) += steps[j];
  }
  const Vector draw = model.sample_joint(queries, rng, Scale::Standardized);
  int best = 0;
  double best_mag = -1.0;
  for (int j = 0; j < d; ++j) {
    const double g = std::abs((draw[j + 1] - draw[0]) / steps[j]);
    if (g > best_mag) {
      best_mag = g;
      best = j;
    }
  }
  return best;
}

int refinement_evaluations(double segment_length, const LineGridConfig& cfg) {
  if (!cfg.refine) return 0;
  const double spacing = segment_length / (cfg.grid_points - 1);
  const int n = golden_iterations(2.0 * spacing, cfg.refine_tol);
  return n == 0 ? 0 : n + 2;
}

IntervalOptimum maximize_on_interval(const BatchUtility& f, double lo, double hi,
                                     const LineGridConfig& cfg) {
  cfg.validate();
  IntervalOptimum out;
  if (!(hi - lo >= 1e-12)) {
    out.beta = std::clamp(0.0, lo, hi);
    out.utility = eval_one(f, out.beta);
    out.evaluations = 1;
    out.degenerate = true;
    return out;
  }

  const int m = cfg.grid_points;
  const double spacing = (hi - lo) / (m - 1);
  Vector betas(m);
  for (int k = 0; k < m; ++k) betas[k] = lo + k * spacing;
  betas[m - 1] = hi;
  Vector u(m);
  f(betas, u);
  out.evaluations = m;
  int best_k = 0;
  double best_u = finite_or_lowest(u[0]);
  for (int k = 1; k < m; ++k) {
    const double v = finite_or_lowest(u[k]);
    if (v > best_u) {
      best_u = v;
      best_k = k;
    }
  }
  out.beta = betas[best_k];
  out.utility = best_u;

  const int iterations = cfg.refine ? golden_iterations(2.0 * spacing, cfg.refine_tol) : 0;
  if (iterations == 0) return out;

  double a = best_k > 0 ? betas[best_k - 1] : betas[0];
  double b = best_k < m - 1 ? betas[best_k + 1] : betas[m - 1];
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = eval_one(f, c);
  double fd = eval_one(f, d);
  out.evaluations += 2;
  double cand_beta = fc >= fd ? c : d;
  double cand_u = std::max(fc, fd);
  for (int it = 0; it < iterations; ++it) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = eval_one(f, c);
      if (fc > cand_u || (fc == cand_u && c < cand_beta)) {
        cand_u = fc;
        cand_beta = c;
      }
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = eval_one(f, d);
      if (fd > cand_u || (fd == cand_u && d < cand_beta)) {
        cand_u = fd;
        cand_beta = d;
      }
    }
    ++out.evaluations;
  }
  if (cand_u > out.utility) {
    out.utility = cand_u;
    out.beta = std::clamp(cand_beta, lo, hi);
  }
  return out;
}

LineOptimum optimize_on_line(const GpModel& model, const LineSegment& segment, const AcqContext& acq,
                             const LineGridConfig& cfg) {
  if (!model.fitted()) throw ModelNotFitted("optimize_on_line needs a fitted model");
  if (segment.anchor.size() != model.dim()) throw DimensionMismatch("segment dimension mismatch");
  const BatchUtility f = [&](const Vector& betas, Vector& out) {
    Matrix queries(betas.size(), model.dim());
    for (Eigen::Index k = 0; k < betas.size(); ++k) queries.row(k) = segment.at(betas[k]).transpose();
    Vector mean, var;
    model.predict_batch(queries, mean, var, Scale::Standardized);
    out.resize(betas.size());
    for (Eigen::Index k = 0; k < betas.size(); ++k) out[k] = utility({mean[k], var[k]}, acq);
  };
  const IntervalOptimum opt = maximize_on_interval(f, segment.beta_lo, segment.beta_hi, cfg);
  LineOptimum out;
  out.beta = opt.beta;
  out.point = segment.at(opt.beta);
  out.utility = opt.utility;
  out.evaluations = opt.evaluations;
  out.degenerate = opt.degenerate;
  return out;
}

AcqContext make_context(const GpModel& model, const AcqSettings& acq, double y_best_raw, Rng& rng) {
  AcqContext ctx;
  ctx.kind = acq.kind;
  ctx.y_best = model.scaling().to_std(y_best_raw);
  switch (acq.kind) {
    case AcqKind::EI: ctx.beta = 0.0; break;
    case AcqKind::LCB: ctx.beta = acq.lcb_beta; break;
    case AcqKind::RandLCB: ctx.beta = draw_exploration_beta(rng, acq.beta_lo, acq.beta_hi); break;
  }
  return ctx;
}

Proposal propose_next(const GpModel& model, const Vector& x_star, double y_best_raw,
                      const DimSelectPolicy& policy, const LineGridConfig& grid,
                      const AcqSettings& acq, Rng& rng) {
  Proposal p;
  p.dimension = select_dimension(model, x_star, policy, rng, &p.random_dimension);
  const LineSegment segment = axis_line(x_star, p.dimension);
  const AcqContext ctx = make_context(model, acq, y_best_raw, rng);
  const LineOptimum opt = optimize_on_line(model, segment, ctx, grid);
  p.point = opt.point;
  p.line_beta = opt.beta;
  p.explore_beta = ctx.beta;
  p.utility = opt.utility;
  p.acq_evaluations = opt.evaluations;
  p.degenerate = opt.degenerate;
  return p;
}

}  // namespace linebo
