#include "linebo/space.hpp"

#include "linebo/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace linebo {

namespace {

constexpr double kClampTol = 1e-9;

void check_dim(const Vector& p, int dim) {
  if (p.size() != dim) {
    throw DimensionMismatch("point has " + std::to_string(p.size()) +
                            " coordinates, space has " + std::to_string(dim));
  }
}

}  // namespace

DesignSpace::DesignSpace(std::vector<double> lower, std::vector<double> upper)
    : lower_(std::move(lower)), upper_(std::move(upper)) {
  if (lower_.empty()) throw InvalidSpace("design space needs at least one dimension");
  if (lower_.size() != upper_.size()) {
    throw InvalidSpace("lower has " + std::to_string(lower_.size()) + " bounds, upper has " +
                       std::to_string(upper_.size()));
  }
  for (std::size_t i = 0; i < lower_.size(); ++i) {
    if (!std::isfinite(lower_[i]) || !std::isfinite(upper_[i])) {
      throw InvalidSpace("non-finite bound in dimension " + std::to_string(i));
    }
    if (!(lower_[i] < upper_[i])) {
      throw InvalidSpace("dimension " + std::to_string(i) + " has zero or negative width");
    }
  }
}

Vector DesignSpace::normalize(const Vector& raw) const {
  check_dim(raw, dim());
  Vector out(dim());
  for (int i = 0; i < dim(); ++i) {
    const double width = upper_[i] - lower_[i];
    double u = (raw[i] - lower_[i]) / width;
    if (!(u >= -kClampTol && u <= 1.0 + kClampTol)) {
      throw OutOfBounds("coordinate " + std::to_string(i) + " = " + std::to_string(raw[i]) +
                        " outside [" + std::to_string(lower_[i]) + ", " +
                        std::to_string(upper_[i]) + "]");
    }
    out[i] = std::clamp(u, 0.0, 1.0);
  }
  return out;
}

Vector DesignSpace::denormalize(const Vector& unit) const {
  check_dim(unit, dim());
  Vector out(dim());
  for (int i = 0; i < dim(); ++i) {
    if (!(unit[i] >= -kClampTol && unit[i] <= 1.0 + kClampTol)) {
      throw OutOfBounds("normalized coordinate " + std::to_string(i) + " = " +
                        std::to_string(unit[i]) + " outside [0, 1]");
    }
    const double u = std::clamp(unit[i], 0.0, 1.0);
    // Endpoints map exactly onto the bounds.
    out[i] = u == 1.0 ? upper_[i] : lower_[i] + u * (upper_[i] - lower_[i]);
  }
  return out;
}

bool DesignSpace::contains_raw(const Vector& raw, double tol) const {
  if (raw.size() != dim()) return false;
  for (int i = 0; i < dim(); ++i) {
    const double slack = tol * (upper_[i] - lower_[i]);
    if (!(raw[i] >= lower_[i] - slack && raw[i] <= upper_[i] + slack)) return false;
  }
  return true;
}

bool in_unit_cube(const Vector& p, double tol) {
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (!(p[i] >= -tol && p[i] <= 1.0 + tol)) return false;
  }
  return true;
}

Vector LineSegment::at(double beta) const {
  Vector p = anchor + beta * direction;
  for (Eigen::Index i = 0; i < p.size(); ++i) p[i] = std::clamp(p[i], 0.0, 1.0);
  return p;
}

LineSegment clip_line(const Vector& anchor, const Vector& direction) {
  if (anchor.size() != direction.size()) {
    throw DimensionMismatch("anchor and direction differ in dimension");
  }
  if (!in_unit_cube(anchor)) throw OutOfBounds("line anchor outside the unit cube");
  const double norm = direction.norm();
  if (!(norm >= 1e-12)) throw ZeroDirection("line direction has norm below 1e-12");

  LineSegment seg;
  seg.anchor = anchor.cwiseMax(0.0).cwiseMin(1.0);
  seg.direction = direction / norm;
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < seg.anchor.size(); ++j) {
    const double dj = seg.direction[j];
    if (std::abs(dj) <= 1e-12) continue;
    // 0 <= a + beta d <= 1
    double b0 = -seg.anchor[j] / dj;
    double b1 = (1.0 - seg.anchor[j]) / dj;
    if (b0 > b1) std::swap(b0, b1);
    lo = std::max(lo, b0);
    hi = std::min(hi, b1);
  }
  seg.beta_lo = std::min(lo, 0.0);
  seg.beta_hi = std::max(hi, 0.0);
  return seg;
}

LineSegment axis_line(const Vector& anchor, int axis) {
  if (axis < 0 || axis >= anchor.size()) {
    throw DimensionMismatch("axis " + std::to_string(axis) + " out of range");
  }
  if (!in_unit_cube(anchor)) throw OutOfBounds("line anchor outside the unit cube");
  LineSegment seg;
  seg.anchor = anchor.cwiseMax(0.0).cwiseMin(1.0);
  seg.direction = Vector::Zero(anchor.size());
  seg.direction[axis] = 1.0;
  seg.beta_lo = -seg.anchor[axis];
  seg.beta_hi = 1.0 - seg.anchor[axis];
  return seg;
}

}  // namespace linebo
