#include "linebo/acquisition.hpp"

#include "linebo/error.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>

namespace linebo {

std::string_view to_string(AcqKind kind) {
  switch (kind) {
    case AcqKind::EI: return "EI";
    case AcqKind::LCB: return "LCB";
    case AcqKind::RandLCB: return "RandLCB";
  }
  return "?";
}

AcqKind parse_acq_kind(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "ei") return AcqKind::EI;
  if (lower == "lcb") return AcqKind::LCB;
  if (lower == "randlcb") return AcqKind::RandLCB;
  throw InvalidArgument("unknown acquisition kind '" + std::string(text) + "'");
}

double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double ei(const Posterior& post, double y_best) {
  const double sigma = std::sqrt(std::max(post.var, 0.0));
  const double gap = y_best - post.mean;
  if (sigma < 1e-12) return std::max(gap, 0.0);
  const double z = gap / sigma;
  return std::max(gap * normal_cdf(z) + sigma * normal_pdf(z), 0.0);
}

double lcb(const Posterior& post, double beta) {
  return post.mean - beta * std::sqrt(std::max(post.var, 0.0));
}

double utility(const Posterior& post, const AcqContext& ctx) {
  if (ctx.kind == AcqKind::EI) return ei(post, ctx.y_best);
  return -lcb(post, ctx.beta);
}

double draw_exploration_beta(Rng& rng, double lo, double hi) {
  if (!(lo >= 0.0 && lo < hi && std::isfinite(hi))) {
    throw BadRange("exploration range must satisfy 0 <= lo < hi, got [" + std::to_string(lo) +
                   ", " + std::to_string(hi) + "]");
  }
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

}  // namespace linebo
