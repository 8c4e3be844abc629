#pragma once

// Expected numbers of false positives after screening and relaxation, and
// calibration of the relaxation coefficient r so that the worst-case
// expected number of false positives stays at or below alpha.
//
// Model: m subsets of common size s, m0 of them null. Affected subsets hold a
// proportion pi of non-null atoms and their summary statistic has mean mu.
// A null atom's score Z and its subset summary T are jointly Gaussian with
// correlation rho, so T | Z = z ~ N(mu_T + rho z, 1 - rho^2).

#include <cstddef>
#include <limits>
#include <span>
#include <string>

#include "relaxmt/grouping.hpp"

namespace relaxmt {

struct ModelParams {
  std::size_t m = 1;
  std::size_t m0 = 1;
  std::size_t s = 2;
  double pi = 0.0;
  double mu = std::numeric_limits<double>::infinity();
  double rho = 0.0;
  double threshold = 0.05;  // screening threshold U
  double alpha = 0.05;

  std::size_t m1() const { return m - m0; }
  std::size_t total_atoms() const { return m * s; }

  /// rho = 1/sqrt(s), the value for independent atoms within a subset.
  static ModelParams least_favorable(std::size_t m, std::size_t m0, std::size_t s, double pi,
                                     double mu, double threshold, double alpha);

  /// Throws on rho outside (0, 1), m0 > m, pi outside [0, 1] or U outside [0, 1].
  /// U = 1 and U = 0 are taken as the "all positive" / "all negative" limits.
  void validate() const;
};

/// E|J^N cap R+|: expected null atoms in positive subsets whose score exceeds c.
double expected_fp_positive(const ModelParams& params, double c);

/// E|J^N cap R-|: expected null atoms in negative subsets whose score exceeds cbar.
double expected_fp_negative(const ModelParams& params, double cbar);

/// Expected number of positive subsets, m0 U + m1 (1 - Phi(Phi^{-1}(1-U) - mu)).
double expected_positive_subsets(const ModelParams& params);

struct RelaxationCoefficients {
  double r = 1.0;
  double rbar = 1.0;
  double c = 0.0;     // Phi^{-1}(1 - r alpha / M)
  double cbar = 0.0;  // Phi^{-1}(1 - rbar alpha / M); +inf when rbar == 0
};

RelaxationCoefficients coefficients_for(double r, double rbar, double alpha, std::size_t total_atoms);

/// Affected-subset summary mean used in the worst-case search: either +inf
/// (the conservative limit) or a finite value, typically estimated from data.
struct DeltaMode {
  bool infinite = true;
  double value = std::numeric_limits<double>::infinity();

  static DeltaMode Infinite() { return {}; }
  static DeltaMode Value(double mu) { return {false, mu}; }

  double mu() const { return infinite ? std::numeric_limits<double>::infinity() : value; }
};

std::string to_string(const DeltaMode& mode);

struct WorstCase {
  double expected_fp = 0.0;
  std::size_t m0 = 0;
  double pi = 0.0;
};

/// Maximum over m0 in {0..m} and pi in {1/s, ..., 1} (pi only matters when
/// m1 > 0) of E|J^N cap R+| + E|J^N cap R-| at the given coefficients.
WorstCase worst_case_expected_fp(std::size_t m, std::size_t s, double alpha, double threshold,
                                 double r, double rbar, const DeltaMode& delta);

struct CalibrationResult {
  RelaxationCoefficients coefficients;
  double threshold = 0.0;
  std::size_t m = 0;
  std::size_t s = 0;
  double alpha = 0.0;
  DeltaMode delta;
  WorstCase worst;              // binding configuration at the returned r
  double bracket_low = 1.0;     // final bisection bracket
  double bracket_high = 1.0;
  std::size_t evaluations = 0;  // worst-case evaluations performed
};

struct CalibrationOptions {
  double relative_tolerance = 1e-10;
};

/// Largest r >= 1 (bisection) with worst-case E(V) <= alpha, for a fixed
/// tightening coefficient rbar in [0, 1] and screening threshold U.
CalibrationResult calibrate_relaxation_at(std::size_t m, std::size_t s, double alpha,
                                          double threshold, double rbar, const DeltaMode& delta,
                                          const CalibrationOptions& options = {});

/// Same, with U resolved from a data-independent rule (NMCP: alpha,
/// Bonferroni: alpha/m). LSU screening is data dependent and is rejected.
CalibrationResult calibrate_relaxation(std::size_t m, std::size_t s, double alpha,
                                       const ScreeningRule& rule, double rbar,
                                       const DeltaMode& delta,
                                       const CalibrationOptions& options = {});

/// Mean of the `count` largest scores.
double estimate_delta_top(std::span<const double> z, std::size_t count);

/// Mean of the m1 * s largest scores.
double estimate_delta(std::span<const double> z, std::size_t m1, std::size_t s);

}  // namespace relaxmt
