#pragma once

#include "linebo/gp.hpp"
#include "linebo/types.hpp"

#include <string>
#include <string_view>

namespace linebo {

enum class AcqKind { EI, LCB, RandLCB };

std::string_view to_string(AcqKind kind);
/// Accepts "EI", "LCB", "RandLCB" (case-insensitive). Throws InvalidArgument.
AcqKind parse_acq_kind(std::string_view text);

/// Scoring context for one acquisition-maximization episode. Minimization
/// convention; y_best and the posteriors share the model's standardized scale.
struct AcqContext {
  AcqKind kind = AcqKind::RandLCB;
  double y_best = 0.0;
  double beta = 2.0;  // ignored by EI
};

/// Closed-form expected improvement below y_best.
double ei(const Posterior& post, double y_best);

/// mu - beta * sigma. Lower is better.
double lcb(const Posterior& post, double beta);

/// The "higher is better" view both search routines maximize: EI itself, or
/// the negated LCB.
double utility(const Posterior& post, const AcqContext& ctx);

/// Uniform draw from [lo, hi]; BadRange unless 0 <= lo < hi.
double draw_exploration_beta(Rng& rng, double lo, double hi);

double normal_pdf(double z);
double normal_cdf(double z);

}  // namespace linebo
