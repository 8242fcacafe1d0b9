#include "linebo/gp.hpp"

#include "linebo/error.hpp"
#include "linebo/minimize.hpp"
#include "linebo/space.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#if defined(__SSE2__)
#include <xmmintrin.h>
#endif

namespace linebo {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;

// Rows of `points` divided elementwise by the lengthscales.
Matrix scaled(const Matrix& points, const Vector& lengthscales) {
  return points * lengthscales.cwiseInverse().asDiagonal();
}

Matrix se_cross(const Matrix& za, const Matrix& zb, double signal_var) {
  const Vector na = za.rowwise().squaredNorm();
  const Vector nb = zb.rowwise().squaredNorm();
  Matrix d2 = -2.0 * za * zb.transpose();
  d2.colwise() += na;
  d2.rowwise() += nb.transpose();
  // Entries below 1e-150 become exact zeros: subnormal products downstream
  // slow dense kernels by orders of magnitude.
  Matrix k = (-0.5 * d2.array().max(0.0)).exp().matrix();
  double* v = k.data();
  for (Eigen::Index i = 0; i < k.size(); ++i) {
    if (v[i] < 1e-150) v[i] = 0.0;
  }
  return signal_var * k;
}

// Flush-to-zero / denormals-are-zero for the current thread while alive.
class FlushDenormals {
 public:
#if defined(__SSE2__)
  FlushDenormals() : saved_(_mm_getcsr()) { _mm_setcsr(saved_ | 0x8040); }
  ~FlushDenormals() { _mm_setcsr(saved_); }

 private:
  unsigned int saved_;
#endif
};

struct Factorization {
  Eigen::LLT<Matrix> llt;
  double jitter = 0.0;
};

// Cholesky of K + (sn2 + jitter) I with jitter escalating from 1e-10 to
// 1e-4 times trace(K)/N.
Factorization factorize(const Matrix& k_se, double noise_var) {
  const Eigen::Index n = k_se.rows();
  const double mean_diag = n > 0 ? k_se.trace() / static_cast<double>(n) : 1.0;
  Factorization f;
  for (double rel = 1e-10; rel <= 1e-4 * 1.0000001; rel *= 10.0) {
    f.jitter = rel * mean_diag;
    Matrix ky = k_se;
    ky.diagonal().array() += noise_var + f.jitter;
    f.llt.compute(ky);
    if (f.llt.info() == Eigen::Success) {
      const auto& l = f.llt.matrixLLT();
      if ((l.diagonal().array() > 0.0).all() && l.diagonal().allFinite()) return f;
    }
  }
  throw SingularKernel("kernel matrix not positive definite after jitter escalation (N = " +
                       std::to_string(n) + ")");
}

// In-place inverse of a lower-triangular matrix, blocked so the work is GEMM.
void invert_lower(Eigen::Ref<Matrix> l) {
  const Eigen::Index n = l.rows();
  if (n <= 48) {
    Matrix inv = Matrix::Identity(n, n);
    l.triangularView<Eigen::Lower>().solveInPlace(inv);
    l = inv;
    return;
  }
  const Eigen::Index h = n / 2;
  invert_lower(l.topLeftCorner(h, h));
  invert_lower(l.bottomRightCorner(n - h, n - h));
  const Matrix b = l.bottomLeftCorner(n - h, h) * l.topLeftCorner(h, h).triangularView<Eigen::Lower>();
  l.bottomLeftCorner(n - h, h).noalias() = -(l.bottomRightCorner(n - h, n - h).triangularView<Eigen::Lower>() * b);
  l.topRightCorner(h, n - h).setZero();
}

TargetScaling standardization(const Vector& y) {
  TargetScaling s;
  if (y.size() == 0) return s;
  s.offset = y.mean();
  if (y.size() == 1) return s;
  const double sd = std::sqrt((y.array() - s.offset).square().mean());
  if (sd > 1e-12 * std::max(1.0, std::abs(s.offset))) s.scale = sd;
  return s;
}

bool all_equal(const Vector& y) {
  if (y.size() == 0) return true;
  const double sd = std::sqrt((y.array() - y.mean()).square().mean());
  return !(sd > 1e-12 * std::max(1.0, std::abs(y.mean())));
}

}  // namespace

Dataset::Dataset(Matrix points, Vector targets)
    : points_(std::move(points)), targets_(std::move(targets)), dim_(static_cast<int>(points_.cols())) {
  if (points_.rows() != targets_.size()) {
    throw InvalidData("dataset has " + std::to_string(points_.rows()) + " points but " +
                      std::to_string(targets_.size()) + " targets");
  }
  for (Eigen::Index i = 0; i < points_.rows(); ++i) {
    if (!in_unit_cube(points_.row(i).transpose())) throw InvalidData("dataset point outside unit cube");
    if (!std::isfinite(targets_[i])) throw InvalidData("non-finite target");
  }
}

void Dataset::add(const Vector& point, double target) {
  if (point.size() != dim_) throw DimensionMismatch("dataset point dimension mismatch");
  if (!in_unit_cube(point)) throw InvalidData("dataset point outside unit cube");
  if (!std::isfinite(target)) throw InvalidData("non-finite target");
  const Eigen::Index n = targets_.size();
  points_.conservativeResize(n + 1, dim_);
  points_.row(n) = point.transpose();
  targets_.conservativeResize(n + 1);
  targets_[n] = target;
}

double kernel_eval(const KernelParams& params, const Vector& a, const Vector& b) {
  if (a.size() != b.size() || a.size() != params.lengthscales.size()) {
    throw DimensionMismatch("kernel_eval: dimension mismatch");
  }
  const double r2 = ((a - b).array() / params.lengthscales.array()).square().sum();
  return params.signal_var * std::exp(-0.5 * r2);
}

Vector pack_log_params(const KernelParams& params, bool ard) {
  const Eigen::Index d = params.lengthscales.size();
  const Eigen::Index p = ard ? d : 1;
  Vector theta(p + 2);
  theta[0] = std::log(params.signal_var);
  if (ard) {
    theta.segment(1, d) = params.lengthscales.array().log().matrix();
  } else {
    theta[1] = std::log(params.lengthscales[0]);
  }
  theta[p + 1] = std::log(params.noise_var);
  return theta;
}

KernelParams unpack_log_params(const Vector& theta, int dim, bool ard) {
  KernelParams params;
  params.signal_var = std::exp(theta[0]);
  if (ard) {
    params.lengthscales = theta.segment(1, dim).array().exp().matrix();
  } else {
    params.lengthscales = Vector::Constant(dim, std::exp(theta[1]));
  }
  params.noise_var = std::exp(theta[theta.size() - 1]);
  return params;
}

MarginalLikelihood log_marginal_likelihood(const Matrix& points, const Vector& std_targets,
                                           const KernelParams& params, bool ard,
                                           bool with_gradient) {
  const FlushDenormals ftz;
  const Eigen::Index n = points.rows();
  const Eigen::Index d = points.cols();
  if (std_targets.size() != n) throw DimensionMismatch("targets/points size mismatch");
  if (params.lengthscales.size() != d) throw DimensionMismatch("lengthscale count mismatch");

  const Matrix z = scaled(points, params.lengthscales);
  const Matrix k_se = se_cross(z, z, params.signal_var);
  Factorization fac = factorize(k_se, params.noise_var);
  const Vector alpha = fac.llt.solve(std_targets);

  MarginalLikelihood out;
  out.jitter = fac.jitter;
  const double log_det_half = fac.llt.matrixLLT().diagonal().array().log().sum();
  out.value = -0.5 * std_targets.dot(alpha) - log_det_half - 0.5 * static_cast<double>(n) * kLog2Pi;
  if (!with_gradient) return out;

  // dL/dtheta = 1/2 tr(W dK/dtheta), W = alpha alpha^T - K^{-1}
  Matrix l_inv = fac.llt.matrixL();
  invert_lower(l_inv);
  Matrix w(n, n);
  w.noalias() = -(l_inv.transpose() * l_inv.triangularView<Eigen::Lower>());
  w.noalias() += alpha * alpha.transpose();
  const Matrix g = w.cwiseProduct(k_se);
  const Vector r = g.rowwise().sum();
  const Matrix gz = g * z;

  const Eigen::Index p = ard ? d : 1;
  out.gradient.resize(p + 2);
  out.gradient[0] = 0.5 * g.sum();
  // sum_ab G_ab (z_aj - z_bj)^2 = 2 sum_a r_a z_aj^2 - 2 (Z^T G Z)_jj
  Vector per_dim(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    per_dim[j] = 2.0 * r.dot(z.col(j).cwiseAbs2()) - 2.0 * z.col(j).dot(gz.col(j));
  }
  if (ard) {
    out.gradient.segment(1, d) = 0.5 * per_dim;
  } else {
    out.gradient[1] = 0.5 * per_dim.sum();
  }
  out.gradient[p + 1] = 0.5 * params.noise_var * w.trace();
  return out;
}

GpModel GpModel::condition(Dataset data, KernelParams params) {
  if (params.lengthscales.size() != data.dim()) {
    throw DimensionMismatch("kernel has " + std::to_string(params.lengthscales.size()) +
                            " lengthscales, data has dimension " + std::to_string(data.dim()));
  }
  if (!(params.signal_var > 0.0) || !(params.noise_var >= 0.0) ||
      !(params.lengthscales.array() > 0.0).all()) {
    throw InvalidArgument("kernel parameters must be positive (noise_var >= 0)");
  }
  GpModel m;
  m.data_ = std::move(data);
  m.params_ = std::move(params);
  m.scaling_ = standardization(m.data_.targets());
  const Eigen::Index n = m.data_.size();
  if (n > 0) {
    const Matrix z = scaled(m.data_.points(), m.params_.lengthscales);
    Factorization fac = factorize(se_cross(z, z, m.params_.signal_var), m.params_.noise_var);
    m.jitter_ = fac.jitter;
    m.chol_ = fac.llt.matrixL();
    const Vector y = (m.data_.targets().array() - m.scaling_.offset) / m.scaling_.scale;
    m.alpha_ = fac.llt.solve(y);
  } else {
    m.chol_.resize(0, 0);
    m.alpha_.resize(0);
  }
  m.fitted_ = true;
  return m;
}

GpModel GpModel::fit(Dataset data, const FitConfig& config, Rng& rng,
                     const std::optional<KernelParams>& warm_start, FitReport* report) {
  if (data.size() < 2) {
    throw InsufficientData("fitting needs at least 2 observations, got " + std::to_string(data.size()));
  }
  const int d = data.dim();
  if (all_equal(data.targets())) {
    if (report) report->degenerate = true;
    return condition(std::move(data), fallback_params(d));
  }

  const bool ard = config.ard;
  const TargetScaling s = standardization(data.targets());
  const Vector y = (data.targets().array() - s.offset) / s.scale;
  const Matrix& x = data.points();

  const int p = ard ? d : 1;
  Vector lo(p + 2), hi(p + 2);
  lo[0] = config.log_signal_lo;
  hi[0] = config.log_signal_hi;
  lo.segment(1, p).setConstant(config.log_lengthscale_lo);
  hi.segment(1, p).setConstant(config.log_lengthscale_hi);
  lo[p + 1] = config.log_noise_lo;
  hi[p + 1] = config.log_noise_hi;

  const int restarts = std::max(1, config.restarts);
  std::vector<Vector> starts;
  starts.push_back(pack_log_params(KernelParams::defaults(d), ard));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int r = 1; r < restarts; ++r) {
    Vector theta(p + 2);
    for (int i = 0; i < p + 2; ++i) theta[i] = lo[i] + unit(rng) * (hi[i] - lo[i]);
    starts.push_back(theta);
  }
  if (warm_start && restarts >= 2 && warm_start->lengthscales.size() == d) {
    KernelParams w = *warm_start;
    if (!ard) w.lengthscales.setConstant(w.lengthscales.mean());
    starts.back() = pack_log_params(w, ard);
  }

  const SmoothObjective objective = [&](const Vector& theta, Vector& grad) {
    try {
      const MarginalLikelihood ml = linebo::log_marginal_likelihood(x, y, unpack_log_params(theta, d, ard), ard);
      grad = -ml.gradient;
      return -ml.value;
    } catch (const SingularKernel&) {
      grad.setZero(theta.size());
      return std::numeric_limits<double>::infinity();
    }
  };

  BoxMinimizeOptions options;
  options.max_iterations = config.max_iterations;
  std::optional<Vector> best;
  double best_value = std::numeric_limits<double>::infinity();
  for (const Vector& start : starts) {
    const Vector clamped = start.cwiseMax(lo).cwiseMin(hi);
    const BoxMinimizeResult res = minimize_box(objective, clamped, lo, hi, options);
    if (report) {
      report->starts.push_back(unpack_log_params(clamped, d, ard));
      Vector unused;
      report->start_lml.push_back(-objective(clamped, unused));
      report->final_lml.push_back(-res.value);
    }
    if (std::isfinite(res.value) && res.value < best_value) {
      best_value = res.value;
      best = res.x;
    }
  }
  if (!best) throw SingularKernel("no restart produced a factorizable kernel");
  if (report) report->best_lml = -best_value;
  return condition(std::move(data), unpack_log_params(*best, d, ard));
}

double GpModel::log_marginal_likelihood() const {
  require_fitted();
  const Eigen::Index n = data_.size();
  if (n == 0) return 0.0;
  const Vector y = (data_.targets().array() - scaling_.offset) / scaling_.scale;
  return -0.5 * y.dot(alpha_) - chol_.diagonal().array().log().sum() -
         0.5 * static_cast<double>(n) * kLog2Pi;
}

void GpModel::require_fitted() const {
  if (!fitted_) throw ModelNotFitted("GP model used before fitting/conditioning");
}

void GpModel::check_queries(const Matrix& queries) const {
  if (queries.cols() != dim()) {
    throw DimensionMismatch("query dimension " + std::to_string(queries.cols()) +
                            " != model dimension " + std::to_string(dim()));
  }
}

Matrix GpModel::cross_kernel(const Matrix& queries) const {
  return se_cross(scaled(queries, params_.lengthscales), scaled(data_.points(), params_.lengthscales),
                  params_.signal_var);
}

Posterior GpModel::predict(const Vector& query, Scale scale) const {
  Vector mean, var;
  predict_batch(query.transpose(), mean, var, scale);
  return {mean[0], var[0]};
}

void GpModel::predict_batch(const Matrix& queries, Vector& mean, Vector& var, Scale scale) const {
  require_fitted();
  check_queries(queries);
  const Eigen::Index m = queries.rows();
  if (data_.empty()) {
    mean = Vector::Zero(m);
    var = Vector::Constant(m, params_.signal_var);
  } else {
    const Matrix ks = cross_kernel(queries);  // m x n
    mean = ks * alpha_;
    const Matrix v = chol_.triangularView<Eigen::Lower>().solve(ks.transpose());
    var = (params_.signal_var - v.colwise().squaredNorm().transpose().array()).max(0.0).matrix();
  }
  if (scale == Scale::Raw) {
    mean = (scaling_.offset + scaling_.scale * mean.array()).matrix();
    var *= scaling_.scale * scaling_.scale;
  }
}

JointPosterior GpModel::predict_joint(const Matrix& queries, Scale scale) const {
  require_fitted();
  check_queries(queries);
  if (queries.rows() < 1 || queries.rows() > kMaxJointQueries) {
    throw TooManyQueries("joint prediction takes 1.." + std::to_string(kMaxJointQueries) +
                         " queries, got " + std::to_string(queries.rows()));
  }
  const Matrix zq = scaled(queries, params_.lengthscales);
  JointPosterior out;
  out.cov = se_cross(zq, zq, params_.signal_var);
  if (data_.empty()) {
    out.mean = Vector::Zero(queries.rows());
  } else {
    const Matrix ks = cross_kernel(queries);
    out.mean = ks * alpha_;
    const Matrix v = chol_.triangularView<Eigen::Lower>().solve(ks.transpose());
    out.cov.noalias() -= v.transpose() * v;
  }
  out.cov = 0.5 * (out.cov + out.cov.transpose()).eval();
  out.cov.diagonal() = out.cov.diagonal().cwiseMax(0.0);
  if (scale == Scale::Raw) {
    out.mean = (scaling_.offset + scaling_.scale * out.mean.array()).matrix();
    out.cov *= scaling_.scale * scaling_.scale;
  }
  return out;
}

Vector GpModel::sample_joint(const Matrix& queries, Rng& rng, Scale scale) const {
  JointPosterior post = predict_joint(queries, Scale::Standardized);
  const Eigen::Index m = post.mean.size();
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector z(m);
  for (Eigen::Index i = 0; i < m; ++i) z[i] = normal(rng);

  // Pivoted LDL^T tolerates the rank-deficient covariances that appear at
  // (fantasy) training points; pivots below the floor count as zero.
  const Eigen::LDLT<Matrix> ldlt(post.cov);
  const double floor = 1e-9 * params_.signal_var;
  const Vector root_d = ldlt.vectorD().unaryExpr([floor](double v) { return v > floor ? std::sqrt(v) : 0.0; });
  Vector draw = ldlt.matrixL() * root_d.cwiseProduct(z);
  draw = ldlt.transpositionsP().transpose() * draw;
  draw += post.mean;
  if (scale == Scale::Raw) draw = (scaling_.offset + scaling_.scale * draw.array()).matrix();
  return draw;
}

}  // namespace linebo
