#pragma once

// Single-step, step-down and step-up multiple testing procedures over a
// vector of p-values, plus p-value weighting.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace relaxmt {

/// rejected[j] is true when hypothesis j is rejected.
using Decisions = std::vector<bool>;

/// Critical-value scaling g(j) for the scaled step-up procedure, which uses
/// alpha * g(j) / M in place of the linear alpha * j / M.
class ScalingFunction {
 public:
  /// g(j) = j^gamma, gamma > 0.
  static ScalingFunction power(double gamma);
  /// Tabulated g(1..M); must be positive and nondecreasing.
  static ScalingFunction tabulated(std::vector<double> values);

  /// g(j) for 1-based rank j.
  double operator()(std::size_t j) const;

  /// Throws if the function is not usable for M hypotheses.
  void validate(std::size_t m) const;

  bool is_power() const { return table_.empty(); }
  double gamma() const { return gamma_; }

 private:
  double gamma_ = 1.0;
  std::vector<double> table_;
};

Decisions nmcp(std::span<const double> p, double alpha);
Decisions bonferroni(std::span<const double> p, double alpha);
Decisions holm(std::span<const double> p, double alpha);
Decisions linear_step_up(std::span<const double> p, double alpha);
Decisions scaled_step_up(std::span<const double> p, double alpha, const ScalingFunction& g);

/// Generic step-up: rejects the U smallest p-values where U is the largest
/// rank with p_(U) <= critical[U-1]. critical must be nondecreasing.
Decisions step_up(std::span<const double> p, std::span<const double> critical);

/// Indices sorted by (p-value, original index).
std::vector<std::size_t> rank_order(std::span<const double> p);

struct WeightedPValues {
  std::vector<double> p;
  double mean_weight = 0.0;
  /// mean(w) <= 1, the condition under which weighted Bonferroni/LSU keep
  /// their error-rate guarantees.
  bool control_ok = false;
};

/// p_j / w_j capped at 1, with p / 0 == 1.
WeightedPValues apply_weights(std::span<const double> p, std::span<const double> w);

enum class BaseProcedure { Bonferroni, Lsu, ScaledStepUp };

/// The second-step procedure applied to (possibly modified) p-values.
struct BaseSpec {
  BaseProcedure kind = BaseProcedure::Bonferroni;
  double gamma = 0.5;  // ScaledStepUp only

  static BaseSpec bonferroni() { return {BaseProcedure::Bonferroni, 0.5}; }
  static BaseSpec lsu() { return {BaseProcedure::Lsu, 0.5}; }
  static BaseSpec scaled(double gamma) { return {BaseProcedure::ScaledStepUp, gamma}; }

  /// True when the procedure targets FWER/PFER (as opposed to FDR/SEV).
  bool controls_fwer() const { return kind == BaseProcedure::Bonferroni; }

  friend bool operator==(const BaseSpec&, const BaseSpec&) = default;
};

Decisions apply_base(const BaseSpec& base, std::span<const double> p, double alpha);

std::string to_string(const BaseSpec& base);
/// Parses "bonf", "lsu" or "ssu" (gamma supplied separately).
BaseSpec parse_base(const std::string& name, double gamma = 0.5);

std::size_t count_rejections(const Decisions& d);

}  // namespace relaxmt
