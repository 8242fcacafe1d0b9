#pragma once

// Independent reference implementations used by the tests. Nothing here
// calls into the library's numerics.

#include "linebo/types.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <vector>

namespace oracle {

using linebo::Matrix;
using linebo::Vector;

inline double se(double sf2, const Vector& ls, const Vector& a, const Vector& b) {
  double s = 0.0;
  for (Eigen::Index j = 0; j < a.size(); ++j) {
    const double t = (a[j] - b[j]) / ls[j];
    s += t * t;
  }
  return sf2 * std::exp(-0.5 * s);
}

inline Matrix gram(double sf2, const Vector& ls, const Matrix& a, const Matrix& b) {
  Matrix k(a.rows(), b.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < b.rows(); ++j) k(i, j) = se(sf2, ls, a.row(i).transpose(), b.row(j).transpose());
  return k;
}

struct Dense {
  Vector mean;
  Matrix cov;
};

// Zero-mean GP posterior with an explicit matrix inverse; targets already on
// the scale the prior lives on.
inline Dense dense_posterior(const Matrix& x, const Vector& y, double sf2, const Vector& ls, double sn2,
                             const Matrix& q) {
  Dense out;
  if (x.rows() == 0) {
    out.mean = Vector::Zero(q.rows());
    out.cov = gram(sf2, ls, q, q);
    return out;
  }
  Matrix k = gram(sf2, ls, x, x);
  k.diagonal().array() += sn2;
  const Matrix kinv = k.inverse();
  const Matrix ks = gram(sf2, ls, q, x);
  out.mean = ks * kinv * y;
  out.cov = gram(sf2, ls, q, q) - ks * kinv * ks.transpose();
  return out;
}

inline double dense_lml(const Matrix& x, const Vector& y, double sf2, const Vector& ls, double sn2) {
  Matrix k = gram(sf2, ls, x, x);
  k.diagonal().array() += sn2;
  const double logdet = std::log(k.determinant());
  return -0.5 * y.dot(k.inverse() * y) - 0.5 * logdet - 0.5 * x.rows() * std::log(2.0 * M_PI);
}

inline double mc_ei(double mu, double sigma, double y_best, int draws, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(mu, sigma);
  double s = 0.0;
  for (int i = 0; i < draws; ++i) s += std::max(y_best - g(rng), 0.0);
  return s / draws;
}

inline double chi_square_pvalue(const std::vector<long>& counts) {
  const double n = std::accumulate(counts.begin(), counts.end(), 0.0);
  const double e = n / counts.size();
  double stat = 0.0;
  for (long c : counts) stat += (c - e) * (c - e) / e;
  boost::math::chi_squared dist(static_cast<double>(counts.size() - 1));
  return boost::math::cdf(boost::math::complement(dist, stat));
}

// One-sample Kolmogorov-Smirnov against Uniform(0, 1), asymptotic p-value.
inline double ks_uniform_pvalue(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    d = std::max(d, std::max((i + 1) / n - xs[i], xs[i] - i / n));
  }
  const double t = (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * d;
  double p = 0.0;
  for (int k = 1; k <= 100; ++k) p += 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * t * t);
  return std::clamp(p, 0.0, 1.0);
}

// Mann-Whitney U, one-sided: small p means `a` tends to be smaller than `b`.
// Normal approximation with tie correction.
inline double rank_sum_less_pvalue(const std::vector<double>& a, const std::vector<double>& b) {
  struct Item {
    double v;
    int group;
  };
  std::vector<Item> all;
  for (double v : a) all.push_back({v, 0});
  for (double v : b) all.push_back({v, 1});
  std::sort(all.begin(), all.end(), [](const Item& l, const Item& r) { return l.v < r.v; });
  const double n1 = a.size(), n2 = b.size(), n = n1 + n2;
  double r1 = 0.0, ties = 0.0;
  for (std::size_t i = 0; i < all.size();) {
    std::size_t j = i;
    while (j < all.size() && all[j].v == all[i].v) ++j;
    const double rank = 0.5 * (i + 1 + j);
    const double t = static_cast<double>(j - i);
    ties += t * t * t - t;
    for (std::size_t k = i; k < j; ++k)
      if (all[k].group == 0) r1 += rank;
    i = j;
  }
  const double u1 = r1 - n1 * (n1 + 1) / 2.0;
  const double mean = n1 * n2 / 2.0;
  const double var = n1 * n2 / 12.0 * ((n + 1) - ties / (n * (n - 1)));
  if (var <= 0.0) return 0.5;
  const double z = (u1 - mean + 0.5) / std::sqrt(var);  // continuity correction
  return boost::math::cdf(boost::math::normal(), z);
}

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

inline double sample_std(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return v.size() > 1 ? std::sqrt(s / (v.size() - 1)) : 0.0;
}

inline bool in_cube(const Vector& p, double tol) {
  for (Eigen::Index i = 0; i < p.size(); ++i)
    if (p[i] < -tol || p[i] > 1.0 + tol) return false;
  return true;
}

}  // namespace oracle
