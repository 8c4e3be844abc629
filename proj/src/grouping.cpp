#include "relaxmt/grouping.hpp"

#include <algorithm>
#include <cmath>

#include "relaxmt/error.hpp"
#include "relaxmt/procedures.hpp"
#include "relaxmt/stats.hpp"

namespace relaxmt {

Decomposition Decomposition::from_assignment(std::vector<std::size_t> subset_of) {
  require(!subset_of.empty(), ErrorCode::InvalidArgument, "decomposition has no atoms");
  const std::size_t m = *std::max_element(subset_of.begin(), subset_of.end()) + 1;
  std::vector<std::size_t> counts(m, 0);
  for (std::size_t s : subset_of) ++counts[s];
  for (std::size_t i = 0; i < m; ++i)
    require(counts[i] > 0, ErrorCode::InvalidArgument,
            "decomposition subset " + std::to_string(i) + " is empty");

  Decomposition d;
  d.offsets_.assign(m + 1, 0);
  for (std::size_t i = 0; i < m; ++i) d.offsets_[i + 1] = d.offsets_[i] + counts[i];
  d.members_.resize(subset_of.size());
  std::vector<std::size_t> fill(d.offsets_.begin(), d.offsets_.end() - 1);
  for (std::size_t j = 0; j < subset_of.size(); ++j) d.members_[fill[subset_of[j]]++] = j;
  d.subset_of_ = std::move(subset_of);
  return d;
}

std::size_t Decomposition::max_size() const {
  std::size_t best = 0;
  for (std::size_t i = 0; i < subsets(); ++i) best = std::max(best, size(i));
  return best;
}

std::span<const std::size_t> Decomposition::members(std::size_t subset) const {
  return {members_.data() + offsets_[subset], size(subset)};
}

Decomposition square_decomposition(std::size_t side, std::size_t block) {
  require(side >= 1 && block >= 1, ErrorCode::InvalidArgument,
          "grid side and block must be positive");
  require(side % block == 0, ErrorCode::InvalidArgument,
          "block size " + std::to_string(block) + " does not divide grid side " +
              std::to_string(side));
  const std::size_t per_row = side / block;
  std::vector<std::size_t> assignment(side * side);
  for (std::size_t row = 0; row < side; ++row)
    for (std::size_t col = 0; col < side; ++col)
      assignment[row * side + col] = (row / block) * per_row + col / block;
  return Decomposition::from_assignment(std::move(assignment));
}

SubsetSummary summarize_subsets(std::span<const double> z, const Decomposition& d) {
  require(z.size() == d.atoms(), ErrorCode::InvalidArgument,
          "score count does not match the decomposition");
  SubsetSummary out;
  out.t.resize(d.subsets());
  out.p.resize(d.subsets());
  for (std::size_t i = 0; i < d.subsets(); ++i) {
    double sum = 0.0;
    for (std::size_t j : d.members(i)) sum += z[j];
    out.t[i] = sum / std::sqrt(static_cast<double>(d.size(i)));
    out.p[i] = one_sided_pvalue(out.t[i]);
  }
  return out;
}

std::string to_string(ScreeningKind kind) {
  switch (kind) {
    case ScreeningKind::Nmcp: return "nmcp";
    case ScreeningKind::Bonferroni: return "bonf";
    case ScreeningKind::Lsu: return "lsu";
  }
  return "?";
}

ScreeningKind parse_screening(const std::string& name) {
  if (name == "nmcp") return ScreeningKind::Nmcp;
  if (name == "bonf" || name == "bonferroni") return ScreeningKind::Bonferroni;
  if (name == "lsu") return ScreeningKind::Lsu;
  fail(ErrorCode::InvalidArgument, "unknown screening rule '" + name + "'");
}

double resolve_threshold(std::span<const double> subset_p, const ScreeningRule& rule) {
  require(!subset_p.empty(), ErrorCode::InvalidArgument, "no subsets to screen");
  require(rule.alpha > 0.0 && rule.alpha < 1.0, ErrorCode::InvalidArgument,
          "screening alpha must lie in (0, 1)");
  const double m = static_cast<double>(subset_p.size());
  switch (rule.kind) {
    case ScreeningKind::Nmcp: return rule.alpha;
    case ScreeningKind::Bonferroni: return rule.alpha / m;
    case ScreeningKind::Lsu: {
      const auto order = rank_order(subset_p);
      for (std::size_t k = order.size(); k > 0; --k)
        if (subset_p[order[k - 1]] <= static_cast<double>(k) * rule.alpha / m)
          return static_cast<double>(k) * rule.alpha / m;
      return 0.0;
    }
  }
  return 0.0;
}

ScreeningOutcome screen_at(const SubsetSummary& summary, const Decomposition& d,
                           double threshold) {
  require(summary.p.size() == d.subsets(), ErrorCode::InvalidArgument,
          "subset summary does not match the decomposition");
  ScreeningOutcome out;
  out.threshold = threshold;
  out.is_positive.assign(d.subsets(), false);
  for (std::size_t i = 0; i < d.subsets(); ++i) {
    if (summary.p[i] <= threshold) {
      out.is_positive[i] = true;
      out.positive.push_back(i);
      out.atoms_positive += d.size(i);
    } else {
      out.negative.push_back(i);
      out.atoms_negative += d.size(i);
    }
  }
  return out;
}

ScreeningOutcome screen(const SubsetSummary& summary, const Decomposition& d,
                        const ScreeningRule& rule) {
  return screen_at(summary, d, resolve_threshold(summary.p, rule));
}

ModifiedPValues modify_pvalues(std::span<const double> p, const Decomposition& d,
                               const ScreeningOutcome& screening, double r, double rbar) {
  require(r > 0.0 && std::isfinite(r), ErrorCode::InvalidArgument,
          "relaxation coefficient r must be positive");
  require(rbar >= 0.0 && rbar <= 1.0, ErrorCode::InvalidArgument,
          "tightening coefficient rbar must lie in [0, 1]");
  require(p.size() == d.atoms(), ErrorCode::InvalidArgument,
          "p-value count does not match the decomposition");
  std::vector<double> w(p.size());
  for (std::size_t j = 0; j < p.size(); ++j)
    w[j] = screening.is_positive[d.subset_of(j)] ? r : rbar;
  auto weighted = apply_weights(p, w);
  ModifiedPValues out;
  out.p = std::move(weighted.p);
  out.weight_sum = static_cast<double>(screening.atoms_positive) * r +
                   static_cast<double>(screening.atoms_negative) * rbar;
  out.weights = std::move(w);
  return out;
}

}  // namespace relaxmt
