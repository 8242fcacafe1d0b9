#include "linebo/benchmarks.hpp"

#include "linebo/error.hpp"

#include <cmath>
#include <numbers>

namespace linebo {

namespace {

constexpr double kPi = std::numbers::pi;

double sphere(const Vector& x) { return x.squaredNorm(); }

double rosenbrock(const Vector& x) {
  double s = 0.0;
  for (Eigen::Index i = 0; i + 1 < x.size(); ++i) {
    const double a = x[i + 1] - x[i] * x[i];
    const double b = 1.0 - x[i];
    s += 100.0 * a * a + b * b;
  }
  return s;
}

double ackley(const Vector& x) {
  const double n = static_cast<double>(x.size());
  const double s1 = x.squaredNorm() / n;
  const double s2 = (2.0 * kPi * x.array()).cos().sum() / n;
  return -20.0 * std::exp(-0.2 * std::sqrt(s1)) - std::exp(s2) + 20.0 + std::numbers::e;
}

double levy(const Vector& x) {
  const Eigen::Index d = x.size();
  const Vector w = (1.0 + (x.array() - 1.0) / 4.0).matrix();
  const double head = std::sin(kPi * w[0]);
  double s = head * head;
  for (Eigen::Index i = 0; i + 1 < d; ++i) {
    const double t = std::sin(kPi * w[i] + 1.0);
    s += (w[i] - 1.0) * (w[i] - 1.0) * (1.0 + 10.0 * t * t);
  }
  const double tail = std::sin(2.0 * kPi * w[d - 1]);
  s += (w[d - 1] - 1.0) * (w[d - 1] - 1.0) * (1.0 + tail * tail);
  return s;
}

BenchmarkFn rotated_quadratic(int dim, const BenchmarkParams& params) {
  const int k = params.effective_dim > 0 ? std::min(params.effective_dim, dim) : dim;
  Rng rng(mix_seed(params.rotation_seed, 0x5eed));
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix g(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) g(i, j) = normal(rng);
  const Matrix q = Eigen::HouseholderQR<Matrix>(g).householderQ();
  std::uniform_real_distribution<double> unit(-2.5, 2.5);
  Vector center(dim);
  for (int i = 0; i < dim; ++i) center[i] = unit(rng);
  Vector eig = Vector::Zero(dim);
  for (int i = 0; i < k; ++i) {
    eig[i] = k == 1 ? 1.0 : std::pow(params.condition, -static_cast<double>(i) / (k - 1));
  }

  BenchmarkFn fn;
  fn.lower.assign(dim, -5.0);
  fn.upper.assign(dim, 5.0);
  fn.optimum_value = 0.0;
  fn.optimum_location = center;
  fn.f = [q, center, eig](const Vector& x) {
    const Vector r = q.transpose() * (x - center);
    return eig.dot(r.cwiseAbs2());
  };
  return fn;
}

}  // namespace

std::vector<std::string> benchmark_names() {
  return {"sphere", "rosenbrock", "ackley", "levy", "rotated-quadratic"};
}

BenchmarkFn make_benchmark(const std::string& name, int dim, const BenchmarkParams& params) {
  if (dim < 1) throw InvalidArgument("benchmark dimension must be >= 1");
  if (name == "rosenbrock" && dim < 2) throw InvalidArgument("rosenbrock needs dim >= 2");
  BenchmarkFn fn;
  if (name == "sphere") {
    fn.lower.assign(dim, -5.12);
    fn.upper.assign(dim, 5.12);
    fn.optimum_value = 0.0;
    fn.optimum_location = Vector::Zero(dim);
    fn.f = sphere;
  } else if (name == "rosenbrock") {
    fn.lower.assign(dim, -2.048);
    fn.upper.assign(dim, 2.048);
    fn.optimum_value = 0.0;
    fn.optimum_location = Vector::Ones(dim);
    fn.f = rosenbrock;
  } else if (name == "ackley") {
    fn.lower.assign(dim, -32.768);
    fn.upper.assign(dim, 32.768);
    fn.optimum_value = 0.0;
    fn.optimum_location = Vector::Zero(dim);
    fn.f = ackley;
  } else if (name == "levy") {
    fn.lower.assign(dim, -10.0);
    fn.upper.assign(dim, 10.0);
    fn.optimum_value = 0.0;
    fn.optimum_location = Vector::Ones(dim);
    fn.f = levy;
  } else if (name == "rotated-quadratic") {
    fn = rotated_quadratic(dim, params);
  } else {
    throw InvalidArgument("unknown builtin benchmark '" + name + "'");
  }
  fn.name = name;
  fn.dim = dim;
  fn.noise_sd = params.noise_sd;
  return fn;
}

double evaluate_builtin(const BenchmarkFn& fn, const Vector& x_raw, Rng* noise_rng) {
  if (x_raw.size() != fn.dim) throw DimensionMismatch("benchmark input has wrong dimension");
  for (int i = 0; i < fn.dim; ++i) {
    const double slack = 1e-9 * (fn.upper[i] - fn.lower[i]);
    if (!(x_raw[i] >= fn.lower[i] - slack && x_raw[i] <= fn.upper[i] + slack)) {
      throw OutOfBounds(fn.name + ": coordinate " + std::to_string(i) + " out of bounds");
    }
  }
  double y = fn.f(x_raw);
  if (fn.noise_sd > 0.0 && noise_rng) y += std::normal_distribution<double>(0.0, fn.noise_sd)(*noise_rng);
  return y;
}

EvalOutcome BuiltinObjective::evaluate(const EvalRequest& request) {
  try {
    Rng rng(mix_seed(noise_seed_, static_cast<std::uint64_t>(request.id)));
    return EvalOutcome::success(evaluate_builtin(fn_, request.x, &rng));
  } catch (const OutOfBounds& e) {
    return EvalOutcome::failure(EvalError::OutOfBounds, e.what());
  } catch (const DimensionMismatch& e) {
    return EvalOutcome::failure(EvalError::OutOfBounds, e.what());
  }
}

}  // namespace linebo
