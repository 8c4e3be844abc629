#include "relaxmt/pipeline.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>

#include "relaxmt/error.hpp"
#include "relaxmt/stats.hpp"

namespace relaxmt {

namespace {

struct ColumnMoments {
  double mean = 0.0;
  double sum_squares = 0.0;  // sum of squared deviations
};

ColumnMoments moments(const std::vector<std::vector<double>>& rows, std::size_t column) {
  ColumnMoments out;
  for (const auto& row : rows) out.mean += row[column];
  out.mean /= static_cast<double>(rows.size());
  for (const auto& row : rows) {
    const double d = row[column] - out.mean;
    out.sum_squares += d * d;
  }
  return out;
}

}  // namespace

ScoreSet two_sample_scores(const DataMatrix& data, ScoreKind kind) {
  const std::size_t n1 = data.group_x.size();
  const std::size_t n2 = data.group_y.size();
  require(n1 >= 2 && n2 >= 2, ErrorCode::InvalidArgument,
          "each group needs at least two subjects");
  require(data.atoms() >= 1, ErrorCode::InvalidArgument, "data matrix has no atoms");
  for (const auto* rows : {&data.group_x, &data.group_y})
    for (const auto& row : *rows)
      require(row.size() == data.atoms(), ErrorCode::Schema,
              "row length does not match the number of atoms");

  const double df = static_cast<double>(n1 + n2 - 2);
  const double inv_n = 1.0 / static_cast<double>(n1) + 1.0 / static_cast<double>(n2);
  const boost::math::students_t t_dist(df);

  ScoreSet out;
  out.z.resize(data.atoms());
  for (std::size_t j = 0; j < data.atoms(); ++j) {
    const auto x = moments(data.group_x, j);
    const auto y = moments(data.group_y, j);
    const double pooled = (x.sum_squares + y.sum_squares) / df;
    const double scale = std::sqrt(pooled * inv_n);
    if (!(scale > 0.0) || !std::isfinite(scale)) {
      out.z[j] = 0.0;
      out.zero_variance.push_back(j);
      continue;
    }
    const double stat = (x.mean - y.mean) / scale;
    if (kind == ScoreKind::PooledZ) {
      out.z[j] = stat;
    } else {
      const double p = boost::math::cdf(boost::math::complement(t_dist, stat));
      out.z[j] = p <= 0.0 ? std::numeric_limits<double>::max()
                          : (p >= 1.0 ? std::numeric_limits<double>::lowest()
                                      : normal_upper_quantile(p));
    }
  }
  return out;
}

std::vector<double> pvalues_from_scores(std::span<const double> z) {
  std::vector<double> p(z.size());
  for (std::size_t j = 0; j < z.size(); ++j) p[j] = one_sided_pvalue(z[j]);
  return p;
}

std::string to_string(MethodFamily family) {
  switch (family) {
    case MethodFamily::Awa: return "awa";
    case MethodFamily::Rmnc: return "rmnc";
    case MethodFamily::Rmwc: return "rmwc";
    case MethodFamily::Rmio: return "rmio";
  }
  return "?";
}

MethodFamily parse_family(const std::string& name) {
  if (name == "awa") return MethodFamily::Awa;
  if (name == "rmnc") return MethodFamily::Rmnc;
  if (name == "rmwc") return MethodFamily::Rmwc;
  if (name == "rmio") return MethodFamily::Rmio;
  fail(ErrorCode::InvalidArgument, "unknown method family '" + name + "'");
}

std::string to_string(DeltaSource source) {
  switch (source) {
    case DeltaSource::Infinite: return "inf";
    case DeltaSource::Estimated: return "est";
    case DeltaSource::Fixed: return "fixed";
  }
  return "?";
}

DeltaSource parse_delta_source(const std::string& name) {
  if (name == "inf") return DeltaSource::Infinite;
  if (name == "est") return DeltaSource::Estimated;
  if (name == "fixed") return DeltaSource::Fixed;
  fail(ErrorCode::InvalidArgument, "unknown delta mode '" + name + "'");
}

MethodSpec MethodSpec::make(MethodFamily family, BaseSpec base, double alpha) {
  MethodSpec spec;
  spec.family = family;
  spec.base = base;
  spec.alpha = alpha;
  spec.rbar = family == MethodFamily::Rmio ? 0.5 : 0.0;
  return spec;
}

ScreeningRule MethodSpec::screening() const {
  if (allow_mixed_screening && screening_override) return {*screening_override, alpha};
  switch (family) {
    case MethodFamily::Rmnc: return {ScreeningKind::Nmcp, alpha};
    case MethodFamily::Awa:
    case MethodFamily::Rmwc:
    case MethodFamily::Rmio:
      return {base.kind == BaseProcedure::Bonferroni ? ScreeningKind::Bonferroni
                                                     : ScreeningKind::Lsu,
              alpha};
  }
  return {ScreeningKind::Bonferroni, alpha};
}

void MethodSpec::validate() const {
  require(alpha > 0.0 && alpha < 1.0, ErrorCode::InvalidArgument, "alpha must lie in (0, 1)");
  require(rbar >= 0.0 && rbar <= 1.0, ErrorCode::InvalidArgument,
          "tightening coefficient rbar must lie in [0, 1]");
  if (family == MethodFamily::Rmnc || family == MethodFamily::Rmwc)
    require(rbar == 0.0, ErrorCode::InvalidArgument,
            to_string(family) + " uses positive subsets only (rbar must be 0)");
  if (base.kind == BaseProcedure::ScaledStepUp)
    require(base.gamma > 0.0, ErrorCode::InvalidArgument, "scaling exponent must be positive");
  require(!screening_override || allow_mixed_screening, ErrorCode::InvalidArgument,
          "a screening override requires allow_mixed_screening");
}

std::string MethodSpec::label() const { return to_string(family) + "/" + to_string(base); }

AnalysisResult run_awa(std::span<const double> p, const MethodSpec& spec) {
  spec.validate();
  require(spec.family == MethodFamily::Awa, ErrorCode::InvalidArgument,
          "run_awa requires the AWA family");
  AnalysisResult out;
  out.spec = spec;
  out.decisions = apply_base(spec.base, p, spec.alpha);
  out.weight_sum = static_cast<double>(p.size());
  return out;
}

AnalysisResult run_two_step(std::span<const double> z, const Decomposition& d,
                            const MethodSpec& spec) {
  spec.validate();
  require(spec.family != MethodFamily::Awa, ErrorCode::InvalidArgument,
          "run_two_step requires a relaxed method family");
  require(z.size() == d.atoms(), ErrorCode::InvalidArgument,
          "score count does not match the decomposition");

  AnalysisResult out;
  out.spec = spec;
  const std::size_t total = d.atoms();
  const std::size_t m = d.subsets();
  const auto p = pvalues_from_scores(z);
  const auto summary = summarize_subsets(z, d);

  double r = 1.0;
  double rbar = spec.rbar;
  if (spec.diagnostic) {
    rbar = spec.diagnostic->rbar;
    r = spec.diagnostic->r;
    out.screening = screen_at(summary, d, spec.diagnostic->threshold);
    out.calibrated_r = r;
  } else {
    const auto rule = spec.screening();
    out.screening = screen(summary, d, rule);
    const std::size_t s = d.max_size();
    require(s >= 2, ErrorCode::InvalidArgument,
            "relaxed methods need subsets with at least two atoms");

    double calibration_threshold = out.screening->threshold;
    if (rule.kind == ScreeningKind::Lsu) {
      calibration_threshold = spec.alpha / static_cast<double>(m);
      out.warnings.push_back(
          "LSU screening threshold is data dependent; calibrated at U = alpha/m");
    }

    DeltaMode delta = DeltaMode::Infinite();
    switch (spec.delta) {
      case DeltaSource::Infinite: break;
      case DeltaSource::Fixed: delta = DeltaMode::Value(spec.delta_value); break;
      case DeltaSource::Estimated: {
        std::size_t count = out.screening->atoms_positive;
        if (count == 0) count = s;
        delta = DeltaMode::Value(estimate_delta_top(z, std::min(count, total)));
        break;
      }
    }
    out.delta_used = delta.mu();

    out.calibration =
        calibrate_relaxation_at(m, s, spec.alpha, calibration_threshold, rbar, delta);
    out.calibrated_r = out.calibration->coefficients.r;
    r = out.calibrated_r;

    // Cap r so that the realized weights satisfy M+ r + M- rbar <= M.
    const auto plus = static_cast<double>(out.screening->atoms_positive);
    const auto minus = static_cast<double>(out.screening->atoms_negative);
    if (plus > 0.0) {
      const double budget = (static_cast<double>(total) - minus * rbar) / plus;
      if (r > budget) {
        r = budget;
        out.r_capped = true;
      }
    }
  }

  auto modified = modify_pvalues(p, d, *out.screening, r, rbar);
  out.weight_sum = modified.weight_sum;
  if (!(out.weight_sum <= static_cast<double>(total) * (1.0 + 1e-12)))
    fail(ErrorCode::Certificate, "weight budget violated: M+ r + M- rbar = " +
                                     std::to_string(out.weight_sum) + " > M = " +
                                     std::to_string(total));
  out.coefficients = coefficients_for(r, rbar, spec.alpha, total);
  out.decisions = apply_base(spec.base, modified.p, spec.alpha);
  out.modified_p = std::move(modified.p);
  return out;
}

AnalysisResult run_method(std::span<const double> z, const Decomposition& d,
                          const MethodSpec& spec) {
  if (spec.family == MethodFamily::Awa) return run_awa(pvalues_from_scores(z), spec);
  return run_two_step(z, d, spec);
}

}  // namespace relaxmt
