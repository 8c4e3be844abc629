#pragma once

// Decompositions of the atom set into disjoint subsets, subset summary
// statistics, first-step screening and the relaxation/tightening p-value
// modification that feeds the second step.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace relaxmt {

/// A partition of atoms 0..M-1 into subsets 0..m-1. Immutable once built.
class Decomposition {
 public:
  /// subset_of[j] is the subset index of atom j. Subset indices must cover
  /// 0..m-1 with every subset nonempty.
  static Decomposition from_assignment(std::vector<std::size_t> subset_of);

  std::size_t atoms() const { return subset_of_.size(); }
  std::size_t subsets() const { return offsets_.size() - 1; }
  std::size_t subset_of(std::size_t atom) const { return subset_of_[atom]; }
  std::size_t size(std::size_t subset) const { return offsets_[subset + 1] - offsets_[subset]; }
  std::size_t max_size() const;
  std::span<const std::size_t> members(std::size_t subset) const;
  const std::vector<std::size_t>& assignment() const { return subset_of_; }

 private:
  std::vector<std::size_t> subset_of_;
  std::vector<std::size_t> offsets_;  // CSR layout over members_
  std::vector<std::size_t> members_;
};

/// Row-major N x N grid cut into (N/b)^2 blocks of b x b atoms.
Decomposition square_decomposition(std::size_t side, std::size_t block);

struct SubsetSummary {
  std::vector<double> t;  // standardized subset means
  std::vector<double> p;  // one-sided subset p-values
};

/// T_i = sum_{j in J_i} Z_j / sqrt(s_i), P_i = 1 - Phi(T_i).
SubsetSummary summarize_subsets(std::span<const double> z, const Decomposition& d);

enum class ScreeningKind { Nmcp, Bonferroni, Lsu };

struct ScreeningRule {
  ScreeningKind kind = ScreeningKind::Bonferroni;
  double alpha = 0.05;
};

std::string to_string(ScreeningKind kind);
ScreeningKind parse_screening(const std::string& name);

/// Probability-scale screening threshold U. For LSU this is k * alpha / m
/// with k the LSU rejection count (0 when nothing passes).
double resolve_threshold(std::span<const double> subset_p, const ScreeningRule& rule);

struct ScreeningOutcome {
  std::vector<std::size_t> positive;
  std::vector<std::size_t> negative;
  std::vector<bool> is_positive;  // indexed by subset
  std::size_t atoms_positive = 0;
  std::size_t atoms_negative = 0;
  double threshold = 0.0;
};

ScreeningOutcome screen(const SubsetSummary& summary, const Decomposition& d,
                        const ScreeningRule& rule);

/// Screening at an explicit threshold: I+ = {i : P_i <= U}.
ScreeningOutcome screen_at(const SubsetSummary& summary, const Decomposition& d, double threshold);

struct ModifiedPValues {
  std::vector<double> p;
  std::vector<double> weights;  // r on positive-subset atoms, rbar elsewhere
  double weight_sum = 0.0;      // M+ r + M- rbar
};

/// Divides p-values in positive subsets by r and in negative subsets by rbar
/// (p / 0 == 1), capping at 1.
ModifiedPValues modify_pvalues(std::span<const double> p, const Decomposition& d,
                               const ScreeningOutcome& screening, double r, double rbar);

}  // namespace relaxmt
