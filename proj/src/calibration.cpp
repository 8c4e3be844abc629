#include "relaxmt/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>
#include <vector>

#include "relaxmt/error.hpp"
#include "relaxmt/stats.hpp"

namespace relaxmt {

namespace {

// Tail integrals shared by the positive and negative sides:
//   null = int_cut^inf g(C_0(z)) phi(z) dz
//   alt  = int_cut^inf g(C_mu(z)) phi(z) dz
// with g = 1 - Phi on the positive side and g = Phi on the negative side.
struct TailTerms {
  double null_term = 0.0;
  double alt_term = 0.0;
};

struct Geometry {
  double u;      // Phi^{-1}(1 - U)
  double rho;
  double scale;  // sqrt(1 - rho^2)
};

Geometry geometry(double threshold, double rho) {
  return {normal_upper_quantile(threshold), rho, std::sqrt(1.0 - rho * rho)};
}

TailTerms positive_terms(const Geometry& g, double mu, double c) {
  TailTerms t;
  if (c >= kGaussianTailCut) return t;
  t.null_term = gaussian_tail_integral(
      [&](double z) { return normal_sf((g.u - g.rho * z) / g.scale) * normal_pdf(z); }, c);
  if (std::isinf(mu)) {
    t.alt_term = normal_sf(c);
  } else {
    t.alt_term = gaussian_tail_integral(
        [&](double z) { return normal_sf((g.u - mu - g.rho * z) / g.scale) * normal_pdf(z); }, c);
  }
  return t;
}

TailTerms negative_terms(const Geometry& g, double mu, double cbar) {
  TailTerms t;
  if (cbar >= kGaussianTailCut) return t;
  t.null_term = gaussian_tail_integral(
      [&](double z) { return normal_cdf((g.u - g.rho * z) / g.scale) * normal_pdf(z); }, cbar);
  if (!std::isinf(mu)) {
    t.alt_term = gaussian_tail_integral(
        [&](double z) { return normal_cdf((g.u - mu - g.rho * z) / g.scale) * normal_pdf(z); },
        cbar);
  }
  return t;
}

// Tail probability of the affected-subset summary beyond the screening cut.
double affected_pass_probability(double u, double mu) {
  return std::isinf(mu) ? 1.0 : normal_sf(u - mu);
}

bool all_positive(double threshold) { return threshold >= 1.0; }
bool all_negative(double threshold) { return threshold <= 0.0; }

void check_calibration_inputs(std::size_t m, std::size_t s, double alpha, double threshold,
                              double rbar) {
  require(m >= 1, ErrorCode::InvalidArgument, "subset count m must be >= 1");
  require(s >= 2, ErrorCode::InvalidArgument,
          "subset size s must be >= 2 (s = 1 gives rho = 1, a degenerate model)");
  require(alpha > 0.0 && alpha < 1.0, ErrorCode::InvalidArgument, "alpha must lie in (0, 1)");
  require(threshold >= 0.0 && threshold <= 1.0, ErrorCode::InvalidArgument,
          "screening threshold must lie in [0, 1]");
  require(rbar >= 0.0 && rbar <= 1.0, ErrorCode::InvalidArgument,
          "tightening coefficient rbar must lie in [0, 1]");
}

// Evaluates the worst case over the (m0, pi) lattice for one r, reusing the
// negative-side integrals, which depend only on rbar.
class WorstCaseEvaluator {
 public:
  WorstCaseEvaluator(std::size_t m, std::size_t s, double alpha, double threshold, double rbar,
                     const DeltaMode& delta)
      : m_(m), s_(s), alpha_(alpha), threshold_(threshold), rbar_(rbar), mu_(delta.mu()) {
    const double total = static_cast<double>(m * s);
    const double cbar = normal_upper_quantile(std::min(rbar * alpha / total, 1.0));
    if (all_negative(threshold_)) {
      const double tail = std::isinf(cbar) ? 0.0 : normal_sf(cbar);
      negative_ = {tail, tail};
    } else if (!all_positive(threshold_)) {
      geometry_ = geometry(threshold_, 1.0 / std::sqrt(static_cast<double>(s_)));
      negative_ = negative_terms(geometry_, mu_, cbar);
    }
  }

  WorstCase operator()(double r) {
    ++evaluations_;
    const double total = static_cast<double>(m_ * s_);
    const double c = normal_upper_quantile(std::min(r * alpha_ / total, 1.0));
    TailTerms positive;
    if (all_positive(threshold_)) {
      const double tail = std::isinf(c) ? 0.0 : normal_sf(c);
      positive = {tail, tail};
    } else if (!all_negative(threshold_)) {
      positive = positive_terms(geometry_, mu_, c);
    }
    const double null_rate = positive.null_term + negative_.null_term;
    const double alt_rate = positive.alt_term + negative_.alt_term;
    const double s = static_cast<double>(s_);

    WorstCase worst{-1.0, 0, 0.0};
    for (std::size_t m0 = 0; m0 <= m_; ++m0) {
      const double m1 = static_cast<double>(m_ - m0);
      const std::size_t first = m0 == m_ ? s_ : 1;  // pi is irrelevant when m1 = 0
      for (std::size_t k = first; k <= s_; ++k) {
        const double pi = static_cast<double>(k) / s;
        const double value = s * (static_cast<double>(m0) * null_rate + m1 * (1.0 - pi) * alt_rate);
        if (value > worst.expected_fp) worst = {value, m0, m0 == m_ ? 0.0 : pi};
      }
    }
    return worst;
  }

  std::size_t evaluations() const { return evaluations_; }

 private:
  std::size_t m_, s_;
  double alpha_, threshold_, rbar_, mu_;
  Geometry geometry_{};
  TailTerms negative_;
  std::size_t evaluations_ = 0;
};

}  // namespace

ModelParams ModelParams::least_favorable(std::size_t m, std::size_t m0, std::size_t s, double pi,
                                         double mu, double threshold, double alpha) {
  ModelParams p;
  p.m = m;
  p.m0 = m0;
  p.s = s;
  p.pi = pi;
  p.mu = mu;
  p.rho = 1.0 / std::sqrt(static_cast<double>(s));
  p.threshold = threshold;
  p.alpha = alpha;
  return p;
}

void ModelParams::validate() const {
  require(m >= 1 && m0 <= m, ErrorCode::InvalidArgument, "need m >= 1 and 0 <= m0 <= m");
  require(s >= 1, ErrorCode::InvalidArgument, "subset size must be >= 1");
  require(pi >= 0.0 && pi <= 1.0, ErrorCode::InvalidArgument, "pi must lie in [0, 1]");
  require(rho > 0.0 && rho < 1.0, ErrorCode::InvalidArgument,
          "correlation rho must lie in (0, 1)");
  require(threshold >= 0.0 && threshold <= 1.0, ErrorCode::InvalidArgument,
          "screening threshold must lie in [0, 1]");
  require(alpha > 0.0 && alpha < 1.0, ErrorCode::InvalidArgument, "alpha must lie in (0, 1)");
  require(!std::isnan(mu), ErrorCode::InvalidArgument, "mu must not be NaN");
}

double expected_positive_subsets(const ModelParams& params) {
  params.validate();
  if (all_positive(params.threshold)) return static_cast<double>(params.m);
  if (all_negative(params.threshold)) return 0.0;
  const double u = normal_upper_quantile(params.threshold);
  return static_cast<double>(params.m0) * params.threshold +
         static_cast<double>(params.m1()) * affected_pass_probability(u, params.mu);
}

double expected_fp_positive(const ModelParams& params, double c) {
  params.validate();
  require(!std::isnan(c), ErrorCode::InvalidArgument, "score cutoff must not be NaN");
  const double s = static_cast<double>(params.s);
  const double m0 = static_cast<double>(params.m0);
  const double m1_null = static_cast<double>(params.m1()) * (1.0 - params.pi);
  if (c == std::numeric_limits<double>::infinity() || all_negative(params.threshold)) return 0.0;
  if (all_positive(params.threshold)) return s * (m0 + m1_null) * normal_sf(c);

  const auto g = geometry(params.threshold, params.rho);
  const auto terms = positive_terms(g, params.mu, c);
  // Sum over I+ in expectation: E|I+| subsets, each contributing s times the
  // conditional integral normalised by P(P_i <= U) averaged over subsets.
  const double subsets = expected_positive_subsets(params);
  const double denominator = m0 * params.threshold +
                             static_cast<double>(params.m1()) * affected_pass_probability(g.u, params.mu);
  if (denominator <= 0.0) return 0.0;
  return subsets * s * (m0 * terms.null_term + m1_null * terms.alt_term) / denominator;
}

double expected_fp_negative(const ModelParams& params, double cbar) {
  params.validate();
  require(!std::isnan(cbar), ErrorCode::InvalidArgument, "score cutoff must not be NaN");
  const double s = static_cast<double>(params.s);
  const double m0 = static_cast<double>(params.m0);
  const double m1_null = static_cast<double>(params.m1()) * (1.0 - params.pi);
  if (cbar == std::numeric_limits<double>::infinity() || all_positive(params.threshold)) return 0.0;
  if (all_negative(params.threshold)) return s * (m0 + m1_null) * normal_sf(cbar);

  const auto g = geometry(params.threshold, params.rho);
  const auto terms = negative_terms(g, params.mu, cbar);
  const double affected_fail = 1.0 - affected_pass_probability(g.u, params.mu);
  const double subsets = static_cast<double>(params.m) - expected_positive_subsets(params);
  const double denominator = m0 * (1.0 - params.threshold) +
                             static_cast<double>(params.m1()) * affected_fail;
  if (denominator <= 0.0) return 0.0;
  return subsets * s * (m0 * terms.null_term + m1_null * terms.alt_term) / denominator;
}

RelaxationCoefficients coefficients_for(double r, double rbar, double alpha,
                                        std::size_t total_atoms) {
  require(total_atoms >= 1, ErrorCode::InvalidArgument, "need at least one atom");
  const double level = alpha / static_cast<double>(total_atoms);
  RelaxationCoefficients out;
  out.r = r;
  out.rbar = rbar;
  out.c = normal_upper_quantile(std::min(r * level, 1.0));
  out.cbar = normal_upper_quantile(std::min(rbar * level, 1.0));
  return out;
}

std::string to_string(const DeltaMode& mode) {
  if (mode.infinite) return "inf";
  std::ostringstream out;
  out.precision(17);
  out << mode.value;
  return out.str();
}

WorstCase worst_case_expected_fp(std::size_t m, std::size_t s, double alpha, double threshold,
                                 double r, double rbar, const DeltaMode& delta) {
  check_calibration_inputs(m, s, alpha, threshold, rbar);
  require(r > 0.0, ErrorCode::InvalidArgument, "relaxation coefficient must be positive");
  WorstCaseEvaluator eval(m, s, alpha, threshold, rbar, delta);
  return eval(r);
}

CalibrationResult calibrate_relaxation_at(std::size_t m, std::size_t s, double alpha,
                                          double threshold, double rbar, const DeltaMode& delta,
                                          const CalibrationOptions& options) {
  check_calibration_inputs(m, s, alpha, threshold, rbar);
  require(!std::isnan(delta.mu()), ErrorCode::InvalidArgument, "delta must not be NaN");

  WorstCaseEvaluator eval(m, s, alpha, threshold, rbar, delta);
  // Small absolute slack absorbs rounding in the closed-form Bonferroni case.
  const double limit = alpha * (1.0 + 1e-12);
  auto feasible = [&](double r) { return eval(r).expected_fp <= limit; };

  // r = 1 with rbar <= 1 is plain Bonferroni and always feasible. Beyond
  // r_cap = M / alpha every positive-subset p-value is relaxed to 0.
  const double r_cap = static_cast<double>(m * s) / alpha;
  double lo = 1.0;
  double hi = 2.0;
  while (hi < r_cap && feasible(hi)) {
    lo = hi;
    hi *= 2.0;
  }
  if (hi >= r_cap) {
    hi = r_cap;
    if (feasible(hi)) lo = hi;
  }
  while (lo < hi && hi - lo > options.relative_tolerance * lo) {
    const double mid = 0.5 * (lo + hi);
    if (feasible(mid))
      lo = mid;
    else
      hi = mid;
  }

  CalibrationResult out;
  out.coefficients = coefficients_for(lo, rbar, alpha, m * s);
  out.threshold = threshold;
  out.m = m;
  out.s = s;
  out.alpha = alpha;
  out.delta = delta;
  out.worst = eval(lo);
  out.bracket_low = lo;
  out.bracket_high = hi;
  out.evaluations = eval.evaluations();
  return out;
}

CalibrationResult calibrate_relaxation(std::size_t m, std::size_t s, double alpha,
                                       const ScreeningRule& rule, double rbar,
                                       const DeltaMode& delta,
                                       const CalibrationOptions& options) {
  double threshold = 0.0;
  switch (rule.kind) {
    case ScreeningKind::Nmcp: threshold = rule.alpha; break;
    case ScreeningKind::Bonferroni: threshold = rule.alpha / static_cast<double>(m); break;
    case ScreeningKind::Lsu:
      fail(ErrorCode::InvalidArgument,
           "LSU screening has a data-dependent threshold; analytic calibration is unsupported");
  }
  return calibrate_relaxation_at(m, s, alpha, threshold, rbar, delta, options);
}

double estimate_delta_top(std::span<const double> z, std::size_t count) {
  require(count >= 1 && count <= z.size(), ErrorCode::InvalidArgument,
          "delta estimate needs 1 <= count <= M");
  std::vector<double> sorted(z.begin(), z.end());
  std::partial_sort(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(count),
                    sorted.end(), std::greater<>());
  double sum = 0.0;
  for (std::size_t k = 0; k < count; ++k) sum += sorted[k];
  return sum / static_cast<double>(count);
}

double estimate_delta(std::span<const double> z, std::size_t m1, std::size_t s) {
  require(m1 * s <= z.size(), ErrorCode::InvalidArgument,
          "m1 * s exceeds the number of scores");
  return estimate_delta_top(z, m1 * s);
}

}  // namespace relaxmt
