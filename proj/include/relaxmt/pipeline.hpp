#pragma once

// End-to-end analysis: two-sample scoring, the atom-wise baseline (AWA) and
// the relaxed two-step methods (RMNC, RMWC, RMIO).

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "relaxmt/calibration.hpp"
#include "relaxmt/grouping.hpp"
#include "relaxmt/procedures.hpp"

namespace relaxmt {

/// Rows are subjects, columns are atoms.
struct DataMatrix {
  std::vector<std::string> atom_ids;
  std::vector<std::vector<double>> group_x;
  std::vector<std::vector<double>> group_y;

  std::size_t atoms() const { return atom_ids.size(); }
};

enum class ScoreKind {
  PooledZ,  // (xbar - ybar) / sqrt(s_pooled^2 (1/n1 + 1/n2)) read as N(0,1)
  TtoZ,     // same statistic, p-value from Student t, mapped back through Phi^{-1}
};

struct ScoreSet {
  std::vector<double> z;
  std::vector<std::size_t> zero_variance;  // columns whose score was forced to 0
};

/// One-sided scores, positive when group X exceeds group Y.
ScoreSet two_sample_scores(const DataMatrix& data, ScoreKind kind = ScoreKind::PooledZ);

std::vector<double> pvalues_from_scores(std::span<const double> z);

enum class MethodFamily { Awa, Rmnc, Rmwc, Rmio };

std::string to_string(MethodFamily family);
MethodFamily parse_family(const std::string& name);

/// How the affected-subset summary mean is set during calibration.
enum class DeltaSource {
  Infinite,   // conservative limit
  Estimated,  // mean of the M+ largest scores
  Fixed,      // user-supplied value
};

std::string to_string(DeltaSource source);
DeltaSource parse_delta_source(const std::string& name);

/// Bypasses screening resolution and calibration (diagnostics only).
struct DiagnosticOverride {
  double threshold = 1.0;
  double r = 1.0;
  double rbar = 1.0;
};

struct MethodSpec {
  MethodFamily family = MethodFamily::Awa;
  BaseSpec base;
  double alpha = 0.05;
  double rbar = 0.0;
  DeltaSource delta = DeltaSource::Estimated;
  double delta_value = 0.0;  // DeltaSource::Fixed only
  /// Screening rule other than the one paired with the base procedure;
  /// only honoured together with allow_mixed_screening.
  std::optional<ScreeningKind> screening_override;
  bool allow_mixed_screening = false;
  std::optional<DiagnosticOverride> diagnostic;

  /// Defaults per family: rbar = 0 for RMNC/RMWC, 0.5 for RMIO.
  static MethodSpec make(MethodFamily family, BaseSpec base, double alpha);

  ScreeningRule screening() const;
  void validate() const;
  std::string label() const;
};

struct AnalysisResult {
  MethodSpec spec;
  Decisions decisions;
  std::optional<ScreeningOutcome> screening;
  std::optional<CalibrationResult> calibration;
  /// Coefficients actually applied, with cutoffs at the data's M.
  std::optional<RelaxationCoefficients> coefficients;
  std::optional<std::vector<double>> modified_p;
  double calibrated_r = 1.0;
  bool r_capped = false;
  double delta_used = 0.0;
  double weight_sum = 0.0;
  std::vector<std::string> warnings;
};

AnalysisResult run_awa(std::span<const double> p, const MethodSpec& spec);

/// Screening, calibration, p-value modification and the base procedure on
/// the modified p-values. Throws Error(Certificate) if the weight budget
/// M+ r + M- rbar <= M is violated.
AnalysisResult run_two_step(std::span<const double> z, const Decomposition& d,
                            const MethodSpec& spec);

/// Dispatches on spec.family.
AnalysisResult run_method(std::span<const double> z, const Decomposition& d,
                          const MethodSpec& spec);

}  // namespace relaxmt
