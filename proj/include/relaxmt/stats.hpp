#pragma once

// Standard normal distribution functions and composite Gauss-Legendre
// quadrature. Everything here is stateless and thread-safe.

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>

#include "relaxmt/error.hpp"

namespace relaxmt {

inline constexpr double kInvSqrt2Pi = 0.39894228040143267794;
inline constexpr double kInvSqrt2 = 0.70710678118654752440;

/// Semi-infinite integration limits are truncated here. Every integrand we
/// integrate carries a phi(z) factor, which is below 1e-16 beyond this point.
inline constexpr double kGaussianTailCut = 8.5;

inline constexpr std::size_t kGaussLegendreNodes = 20;
inline constexpr std::size_t kDefaultPanels = 64;

inline double normal_pdf(double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }

/// Phi(z).
inline double normal_cdf(double z) { return 0.5 * std::erfc(-z * kInvSqrt2); }

/// 1 - Phi(z), computed without cancellation in the upper tail.
inline double normal_sf(double z) { return 0.5 * std::erfc(z * kInvSqrt2); }

/// One-sided p-value of a score: P(N(0,1) >= z).
inline double one_sided_pvalue(double z) { return normal_sf(z); }

/// Phi^{-1}(p) for 0 < p < 1 (Wichura's AS241, ~1e-16 relative accuracy).
/// Throws Error(Domain) outside the open unit interval.
double normal_quantile(double p);

/// Phi^{-1}(1 - q), accurate for tiny q. Returns +inf for q == 0 and -inf for
/// q == 1, which is how score cutoffs encode "never" and "always".
double normal_upper_quantile(double q);

struct GaussLegendreRule {
  std::array<double, kGaussLegendreNodes> nodes;    // on [-1, 1]
  std::array<double, kGaussLegendreNodes> weights;
};

const GaussLegendreRule& gauss_legendre_rule();

/// Composite Gauss-Legendre quadrature with kGaussLegendreNodes nodes per
/// panel. Infinite limits are truncated to +/-kGaussianTailCut; the integrand
/// must therefore be negligible beyond that point.
template <class F>
double gauss_legendre_integrate(F&& f, double lower, double upper,
                                std::size_t panels = kDefaultPanels) {
  require(!std::isnan(lower) && !std::isnan(upper), ErrorCode::InvalidArgument,
          "integration bounds must not be NaN");
  require(panels >= 1, ErrorCode::InvalidArgument, "panel count must be >= 1");
  if (std::isinf(lower)) lower = lower < 0 ? -kGaussianTailCut : kGaussianTailCut;
  if (std::isinf(upper)) upper = upper < 0 ? -kGaussianTailCut : kGaussianTailCut;
  require(lower < upper, ErrorCode::InvalidArgument,
          "invalid integration bounds: lower >= upper after truncation");

  const auto& rule = gauss_legendre_rule();
  const double width = (upper - lower) / static_cast<double>(panels);
  const double half = 0.5 * width;
  double total = 0.0;
  for (std::size_t k = 0; k < panels; ++k) {
    const double mid = lower + (static_cast<double>(k) + 0.5) * width;
    double panel = 0.0;
    for (std::size_t i = 0; i < kGaussLegendreNodes; ++i)
      panel += rule.weights[i] * f(mid + half * rule.nodes[i]);
    total += half * panel;
  }
  return total;
}

/// Integral of f over [lower, +inf) for an integrand carrying a Gaussian
/// weight. Returns 0 when lower is at or beyond the truncation point.
template <class F>
double gaussian_tail_integral(F&& f, double lower, std::size_t panels = kDefaultPanels) {
  if (lower >= kGaussianTailCut) return 0.0;
  return gauss_legendre_integrate(std::forward<F>(f), lower,
                                  std::numeric_limits<double>::infinity(), panels);
}

}  // namespace relaxmt
