#pragma once

#include "linebo/types.hpp"

#include <vector>

namespace linebo {

/// Axis-aligned box in raw units. All optimizer math happens in the unit cube;
/// raw coordinates only cross the evaluator boundary.
class DesignSpace {
 public:
  /// Throws InvalidSpace on empty, mismatched, non-finite or zero-width bounds.
  DesignSpace(std::vector<double> lower, std::vector<double> upper);

  int dim() const { return static_cast<int>(lower_.size()); }
  const std::vector<double>& lower() const { return lower_; }
  const std::vector<double>& upper() const { return upper_; }

  /// Raw -> unit cube. Coordinates within 1e-9 (relative to the width) of a
  /// bound are clamped; anything further out is OutOfBounds.
  Vector normalize(const Vector& raw) const;
  /// Unit cube -> raw, same clamping rule.
  Vector denormalize(const Vector& unit) const;

  bool contains_raw(const Vector& raw, double tol = 1e-9) const;

 private:
  std::vector<double> lower_;
  std::vector<double> upper_;
};

inline constexpr double kCubeTol = 1e-12;

bool in_unit_cube(const Vector& p, double tol = kCubeTol);

/// Feasible part of the line {anchor + beta * direction} inside the unit cube.
struct LineSegment {
  Vector anchor;
  Vector direction;  // unit norm
  double beta_lo = 0.0;
  double beta_hi = 0.0;

  double length() const { return beta_hi - beta_lo; }
  /// anchor + beta * direction, clamped onto the cube to absorb rounding.
  Vector at(double beta) const;
};

/// Intersects the line through `anchor` along `direction` with the unit cube.
/// The direction is normalized; a norm below 1e-12 throws ZeroDirection.
LineSegment clip_line(const Vector& anchor, const Vector& direction);

/// clip_line along coordinate axis `axis`; the interval is exactly
/// [-anchor[axis], 1 - anchor[axis]].
LineSegment axis_line(const Vector& anchor, int axis);

}  // namespace linebo
