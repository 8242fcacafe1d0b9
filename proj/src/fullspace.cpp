#include "linebo/fullspace.hpp"

#include "linebo/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace linebo {

namespace {

constexpr double kInvPhi = 0.6180339887498949;

// Unique positive root of x^(d+1) = x + 1.
double generalized_golden(int dim) {
  double x = 2.0;
  for (int i = 0; i < 64; ++i) x = std::pow(1.0 + x, 1.0 / (dim + 1));
  return x;
}

class Scorer {
 public:
  Scorer(const GpModel& model, const AcqContext& ctx) : model_(model), ctx_(ctx) {}

  void batch(const Matrix& queries, Vector& out) {
    Vector mean, var;
    model_.predict_batch(queries, mean, var, Scale::Standardized);
    out.resize(queries.rows());
    for (Eigen::Index k = 0; k < queries.rows(); ++k) {
      const double u = utility({mean[k], var[k]}, ctx_);
      out[k] = std::isnan(u) ? -std::numeric_limits<double>::infinity() : u;
    }
    evaluations_ += queries.rows();
  }

  double one(const Vector& x) {
    Vector u;
    batch(x.transpose(), u);
    return u[0];
  }

  long long evaluations() const { return evaluations_; }

 private:
  const GpModel& model_;
  const AcqContext& ctx_;
  long long evaluations_ = 0;
};

// Golden-section search over coordinate j of x inside the window; keeps the
// move only when it improves.
void refine_coordinate(Scorer& scorer, Vector& x, double& fx, int j, const FullSpaceConfig& cfg) {
  double a = std::max(0.0, x[j] - cfg.window);
  double b = std::min(1.0, x[j] + cfg.window);
  if (!(b - a > cfg.golden_tol)) return;
  Vector probe = x;
  auto at = [&](double t) {
    probe[j] = t;
    return scorer.one(probe);
  };
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = at(c), fd = at(d);
  double best_t = fc >= fd ? c : d;
  double best_f = std::max(fc, fd);
  while (b - a > cfg.golden_tol) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = at(c);
      if (fc > best_f) best_f = fc, best_t = c;
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = at(d);
      if (fd > best_f) best_f = fd, best_t = d;
    }
  }
  if (best_f > fx) {
    fx = best_f;
    x[j] = best_t;
  }
}

}  // namespace

void FullSpaceConfig::validate(int dim) const {
  if (inner == Inner::Grid) {
    if (grid_per_dim < 2) throw InvalidArgument("grid_per_dim must be >= 2");
    if (dim * std::log(static_cast<double>(grid_per_dim)) > std::log(1e7)) {
      throw InvalidArgument("full grid would exceed 1e7 acquisition evaluations");
    }
    return;
  }
  if (candidates < 1) throw InvalidArgument("candidates must be >= 1");
  if (starts < 0) throw InvalidArgument("starts must be >= 0");
  if (!(window > 0.0) || !(golden_tol > 0.0)) throw InvalidArgument("window and golden_tol must be positive");
}

Matrix quasi_random_points(int count, int dim, Rng& rng) {
  const double g = generalized_golden(dim);
  Vector alpha(dim), shift(dim);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int j = 0; j < dim; ++j) {
    alpha[j] = std::fmod(1.0 / std::pow(g, j + 1), 1.0);
    shift[j] = unit(rng);
  }
  Matrix pts(count, dim);
  for (int n = 0; n < count; ++n) {
    for (int j = 0; j < dim; ++j) {
      double v = shift[j] + (n + 1) * alpha[j];
      pts(n, j) = v - std::floor(v);
    }
  }
  return pts;
}

Proposal propose_fullspace(const GpModel& model, double y_best_raw, const AcqSettings& acq,
                           const FullSpaceConfig& cfg, Rng& rng) {
  if (!model.fitted()) throw ModelNotFitted("propose_fullspace needs a fitted model");
  const int d = model.dim();
  cfg.validate(d);
  const AcqContext ctx = make_context(model, acq, y_best_raw, rng);
  Scorer scorer(model, ctx);
  Proposal p;
  p.explore_beta = ctx.beta;

  if (cfg.inner == FullSpaceConfig::Inner::Grid) {
    const int m = cfg.grid_per_dim;
    long long total = 1;
    for (int j = 0; j < d; ++j) total *= m;
    constexpr long long kChunk = 4096;
    double best_u = -std::numeric_limits<double>::infinity();
    Vector best_x = Vector::Zero(d);
    std::vector<int> idx(d, 0);
    for (long long start = 0; start < total; start += kChunk) {
      const long long n = std::min(kChunk, total - start);
      Matrix q(n, d);
      for (long long r = 0; r < n; ++r) {
        long long code = start + r;
        for (int j = 0; j < d; ++j) {
          q(r, j) = static_cast<double>(code % m) / (m - 1);
          code /= m;
        }
      }
      Vector u;
      scorer.batch(q, u);
      for (long long r = 0; r < n; ++r) {
        if (u[r] > best_u) {
          best_u = u[r];
          best_x = q.row(r).transpose();
        }
      }
    }
    p.point = best_x;
    p.utility = best_u;
    p.acq_evaluations = scorer.evaluations();
    return p;
  }

  const Matrix cand = quasi_random_points(cfg.candidates, d, rng);
  Vector u;
  scorer.batch(cand, u);
  std::vector<int> order(cfg.candidates);
  std::iota(order.begin(), order.end(), 0);
  const int k = std::min(cfg.starts, cfg.candidates);
  std::partial_sort(order.begin(), order.begin() + std::max(k, 1), order.end(),
                    [&](int a, int b) { return u[a] > u[b] || (u[a] == u[b] && a < b); });

  p.point = cand.row(order[0]).transpose();
  p.utility = u[order[0]];
  for (int s = 0; s < k; ++s) {
    Vector x = cand.row(order[s]).transpose();
    double fx = u[order[s]];
    for (int j = 0; j < d; ++j) refine_coordinate(scorer, x, fx, j, cfg);
    if (fx > p.utility) {
      p.utility = fx;
      p.point = x;
    }
  }
  p.acq_evaluations = scorer.evaluations();
  return p;
}

}  // namespace linebo
