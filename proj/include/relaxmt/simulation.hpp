#pragma once

// Scenario generators and Monte Carlo estimators for the partially affected
// subsets experiments and the correlated 2D field experiments.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "relaxmt/calibration.hpp"
#include "relaxmt/field.hpp"
#include "relaxmt/grouping.hpp"
#include "relaxmt/parallel.hpp"
#include "relaxmt/pipeline.hpp"

namespace relaxmt {

enum class SizeMode { Random, Equal };

std::string to_string(SizeMode mode);
SizeMode parse_size_mode(const std::string& name);

struct SubsetScenario {
  std::size_t M = 1000;
  std::size_t m = 20;
  std::size_t m1 = 5;
  double pi = 0.5;
  double delta = 1.5;
  SizeMode size_mode = SizeMode::Random;

  void validate() const;
};

struct FieldScenario {
  std::size_t side = 64;
  double theta = 2.0;
  double effect_fraction = 0.05;
  double delta = 2.0;
  std::size_t block = 4;

  std::size_t atoms() const { return side * side; }
  void validate() const;
};

using Scenario = std::variant<SubsetScenario, FieldScenario>;

struct TruthVector {
  std::vector<bool> h;  // true = affected

  std::size_t affected() const;
};

struct GeneratedData {
  std::vector<double> z;
  Decomposition decomposition;
  TruthVector truth;
  bool vacuous = false;  // affected subsets exist but no atom was planted
};

/// Uniform random composition of `total` into `parts` positive sizes.
std::vector<std::size_t> random_composition(std::size_t total, std::size_t parts, Rng& rng);

/// Throws Error(Domain) on a vacuous draw unless allow_vacuous is set.
GeneratedData gen_subset_scenario(const SubsetScenario& sc, Rng& rng, bool allow_vacuous = false);

struct PlantedField {
  std::vector<double> z;
  TruthVector truth;
};

/// The round(fraction * M) largest pixels get mean delta, the rest 0, then
/// i.i.d. N(0, 1) noise is added.
PlantedField plant_effect(std::span<const double> field, double effect_fraction, double delta,
                          Rng& rng);

/// Builds data for either scenario kind. Field scenarios keep one sampler.
class ScenarioGenerator {
 public:
  explicit ScenarioGenerator(Scenario scenario);

  GeneratedData generate(Rng& rng) const;
  const Scenario& scenario() const { return scenario_; }
  std::vector<std::string> warnings() const;

 private:
  Scenario scenario_;
  std::shared_ptr<const FieldSampler> sampler_;
  std::optional<Decomposition> blocks_;
};

struct ReplicateOutcome {
  double power = 0.0;
  bool has_affected = false;
  std::size_t false_positives = 0;
  std::size_t rejections = 0;
  double fdp = 0.0;
  bool certificate_ok = true;
  double r = 1.0;
};

ReplicateOutcome score_decisions(const Decisions& decisions, const TruthVector& truth);

struct MetricsRecord {
  double avg_power = 0.0;
  double power_se = 0.0;
  double e_v = 0.0;
  double e_v_se = 0.0;
  double fdr = 0.0;
  double fdr_se = 0.0;
  double fwer = 0.0;
  double fwer_se = 0.0;
  std::optional<double> power_ratio_vs_awa;
  std::optional<double> ratio_se;
  std::size_t replicates = 0;
  std::size_t power_replicates = 0;  // replicates with at least one affected atom
  std::size_t vacuous_replicates = 0;
  std::size_t certificate_violations = 0;
  double mean_r = 1.0;
};

struct EvaluationOptions {
  std::size_t workers = 0;  // 0 = default_workers()
};

/// Runs every spec on the same data in each replicate. Replicate i draws
/// from stream_seed(seed, cell, i). Ratios vs AWA are filled for specs whose
/// AWA companion (same base, alpha) is among `specs`.
std::vector<MetricsRecord> evaluate_methods(std::span<const MethodSpec> specs,
                                            const Scenario& scenario, std::size_t replicates,
                                            std::uint64_t seed, std::uint64_t cell = 0,
                                            const EvaluationOptions& options = {});

/// One method plus its AWA companion; the ratio is always filled.
MetricsRecord estimate_metrics(const MethodSpec& spec, const Scenario& scenario,
                               std::size_t replicates, std::uint64_t seed,
                               const EvaluationOptions& options = {});

/// Paired ratio of mean powers with a delta-method standard error.
struct RatioEstimate {
  double ratio = 0.0;
  double se = 0.0;
};
std::optional<RatioEstimate> paired_power_ratio(std::span<const ReplicateOutcome> method,
                                                std::span<const ReplicateOutcome> awa);

struct MonteCarloEstimate {
  double mean = 0.0;
  double se = 0.0;
  std::size_t replicates = 0;
};

/// Direct simulation of the calibration model: m subsets of size s with
/// independent N(0,1) atoms; m - m0 affected subsets hold round(pi s)
/// non-null atoms of mean mu / (pi sqrt(s)) (mu = inf: the subset always
/// passes). Counts null atoms above c in positive subsets and above cbar in
/// negative subsets.
MonteCarloEstimate simulate_model_expected_fp(const ModelParams& params,
                                              const RelaxationCoefficients& coefficients,
                                              std::size_t replicates, std::uint64_t seed,
                                              const EvaluationOptions& options = {});

}  // namespace relaxmt
