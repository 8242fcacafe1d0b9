#pragma once

#include "linebo/types.hpp"

#include <optional>
#include <vector>

namespace linebo {

/// Observations in normalized coordinates. Rows of `points()` are designs.
class Dataset {
 public:
  explicit Dataset(int dim = 0) : points_(0, dim), dim_(dim) {}
  Dataset(Matrix points, Vector targets);

  /// Rejects points outside the unit cube and non-finite targets (InvalidData).
  void add(const Vector& point, double target);

  int size() const { return static_cast<int>(targets_.size()); }
  int dim() const { return dim_; }
  bool empty() const { return targets_.size() == 0; }
  const Matrix& points() const { return points_; }
  const Vector& targets() const { return targets_; }

 private:
  Matrix points_;
  Vector targets_;
  int dim_ = 0;
};

/// SE kernel hyperparameters. `signal_var` and `noise_var` live on the
/// standardized target scale.
struct KernelParams {
  double signal_var = 1.0;
  Vector lengthscales;
  double noise_var = 1e-4;

  static KernelParams defaults(int dim) { return {1.0, Vector::Constant(dim, 0.5), 1e-4}; }
};

/// sigma_f^2 * exp(-1/2 sum_j (a_j - b_j)^2 / l_j^2)
double kernel_eval(const KernelParams& params, const Vector& a, const Vector& b);

struct Posterior {
  double mean = 0.0;
  double var = 0.0;
};

struct JointPosterior {
  Vector mean;
  Matrix cov;
};

enum class Scale { Raw, Standardized };

/// Affine map between raw targets and the zero-mean/unit-variance scale the
/// GP prior is placed on.
struct TargetScaling {
  double offset = 0.0;
  double scale = 1.0;

  double to_std(double y) const { return (y - offset) / scale; }
  double from_std(double z) const { return offset + scale * z; }
};

struct FitConfig {
  bool ard = true;
  int restarts = 5;
  int max_iterations = 100;
  double log_lengthscale_lo = -6.907755278982137;  // log 1e-3
  double log_lengthscale_hi = 2.302585092994046;   // log 10
  double log_signal_lo = -6.907755278982137;       // log 1e-3
  double log_signal_hi = 6.907755278982137;        // log 1e3
  double log_noise_lo = -18.420680743952367;       // log 1e-8
  double log_noise_hi = 0.0;                       // log 1
};

/// Log marginal likelihood on standardized targets and its gradient with
/// respect to the log-parameters [log sf2, log l_1..l_p, log sn2], where
/// p = d for ARD and p = 1 for an isotropic kernel.
struct MarginalLikelihood {
  double value = 0.0;
  Vector gradient;
  double jitter = 0.0;
};

/// Throws SingularKernel when the Cholesky factorization fails even after
/// jitter escalation.
MarginalLikelihood log_marginal_likelihood(const Matrix& points, const Vector& std_targets,
                                           const KernelParams& params, bool ard,
                                           bool with_gradient = true);

Vector pack_log_params(const KernelParams& params, bool ard);
KernelParams unpack_log_params(const Vector& theta, int dim, bool ard);

struct FitReport {
  std::vector<KernelParams> starts;
  std::vector<double> start_lml;
  std::vector<double> final_lml;
  double best_lml = 0.0;
  bool degenerate = false;
};

/// Zero-mean GP posterior over a (possibly fantasy-augmented) dataset.
/// A value type: fitting or adding data produces a new model.
class GpModel {
 public:
  GpModel() = default;

  /// Conditions on `data` with fixed hyperparameters (no fitting). Works for
  /// any N >= 0; N = 0 gives the prior.
  static GpModel condition(Dataset data, KernelParams params);

  /// Maximizes the log marginal likelihood over log-parameters from R starts
  /// (defaults, then log-uniform draws). A `warm_start` replaces the last
  /// random start. All-equal targets skip fitting and use fallback params.
  static GpModel fit(Dataset data, const FitConfig& config, Rng& rng,
                     const std::optional<KernelParams>& warm_start = std::nullopt,
                     FitReport* report = nullptr);

  static KernelParams fallback_params(int dim) { return {1.0, Vector::Constant(dim, 0.5), 1e-6}; }

  bool fitted() const { return fitted_; }
  int dim() const { return data_.dim(); }
  int size() const { return data_.size(); }
  const Dataset& data() const { return data_; }
  const KernelParams& params() const { return params_; }
  const TargetScaling& scaling() const { return scaling_; }
  double jitter() const { return jitter_; }
  /// Lower Cholesky factor of K + (sn2 + jitter) I on the standardized scale.
  const Matrix& cholesky_factor() const { return chol_; }
  double log_marginal_likelihood() const;

  Posterior predict(const Vector& query, Scale scale = Scale::Raw) const;
  /// Marginal posteriors for each row of `queries`.
  void predict_batch(const Matrix& queries, Vector& mean, Vector& var,
                     Scale scale = Scale::Raw) const;
  static constexpr int kMaxJointQueries = 512;
  /// Joint posterior over the rows of `queries` (at most 512).
  JointPosterior predict_joint(const Matrix& queries, Scale scale = Scale::Raw) const;
  /// One joint posterior draw over the rows of `queries`.
  Vector sample_joint(const Matrix& queries, Rng& rng, Scale scale = Scale::Raw) const;

 private:
  void require_fitted() const;
  void check_queries(const Matrix& queries) const;
  Matrix cross_kernel(const Matrix& queries) const;

  Dataset data_;
  KernelParams params_;
  TargetScaling scaling_;
  Matrix chol_;
  Vector alpha_;
  double jitter_ = 0.0;
  bool fitted_ = false;
};

}  // namespace linebo
