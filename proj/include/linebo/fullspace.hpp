#pragma once

#include "linebo/linesearch.hpp"

namespace linebo {

/// Inner optimizer for the conventional (whole-cube) baselines.
struct FullSpaceConfig {
  enum class Inner { RandomGolden, Grid };
  Inner inner = Inner::RandomGolden;
  int candidates = 1024;   // quasi-random candidates
  int starts = 5;          // best candidates refined coordinate-wise
  double window = 0.05;    // half-width of each coordinate's golden bracket
  double golden_tol = 1e-3;
  int grid_per_dim = 8;    // Inner::Grid: grid_per_dim^d points

  void validate(int dim) const;
};

/// Randomly shifted Kronecker (R_d) sequence: `count` points in [0, 1)^dim.
Matrix quasi_random_points(int count, int dim, Rng& rng);

/// Maximizes the acquisition over the whole unit cube.
Proposal propose_fullspace(const GpModel& model, double y_best_raw, const AcqSettings& acq,
                           const FullSpaceConfig& cfg, Rng& rng);

}  // namespace linebo
