#include "relaxmt/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "relaxmt/error.hpp"
#include "relaxmt/stats.hpp"

namespace relaxmt {

namespace {

struct Moments {
  double sum = 0.0;
  double sum_sq = 0.0;
  std::size_t n = 0;

  void add(double x) {
    sum += x;
    sum_sq += x * x;
    ++n;
  }
  double mean() const { return n ? sum / static_cast<double>(n) : 0.0; }
  // Sample SD / sqrt(n).
  double se() const {
    if (n < 2) return 0.0;
    const double nn = static_cast<double>(n);
    const double var = std::max(0.0, (sum_sq - sum * sum / nn) / (nn - 1.0));
    return std::sqrt(var / nn);
  }
};

std::size_t resolve_workers(const EvaluationOptions& options) {
  return options.workers ? options.workers : default_workers();
}

std::optional<std::size_t> awa_companion(std::span<const MethodSpec> specs, std::size_t k) {
  for (std::size_t j = 0; j < specs.size(); ++j) {
    if (specs[j].family == MethodFamily::Awa && specs[j].base == specs[k].base &&
        specs[j].alpha == specs[k].alpha)
      return j;
  }
  return std::nullopt;
}

}  // namespace

std::string to_string(SizeMode mode) { return mode == SizeMode::Random ? "random" : "equal"; }

SizeMode parse_size_mode(const std::string& name) {
  if (name == "random") return SizeMode::Random;
  if (name == "equal") return SizeMode::Equal;
  fail(ErrorCode::InvalidArgument, "unknown size mode '" + name + "' (expected random|equal)");
}

void SubsetScenario::validate() const {
  require(m >= 1 && M >= m, ErrorCode::InvalidArgument, "need 1 <= m <= M");
  require(m1 <= m, ErrorCode::InvalidArgument, "m1 must not exceed m");
  require(pi > 0.0 && pi <= 1.0, ErrorCode::InvalidArgument, "pi must lie in (0, 1]");
  require(delta >= 0.0 && std::isfinite(delta), ErrorCode::InvalidArgument,
          "delta must be finite and >= 0");
  if (size_mode == SizeMode::Equal)
    require(M % m == 0, ErrorCode::InvalidArgument, "equal sizes need m to divide M");
}

void FieldScenario::validate() const {
  require(side >= 2, ErrorCode::InvalidArgument, "field side must be >= 2");
  require(theta > 0.0, ErrorCode::InvalidArgument, "theta must be positive");
  require(effect_fraction > 0.0 && effect_fraction < 1.0, ErrorCode::InvalidArgument,
          "effect_fraction must lie in (0, 1)");
  require(delta >= 0.0 && std::isfinite(delta), ErrorCode::InvalidArgument,
          "delta must be finite and >= 0");
  require(block >= 1 && side % block == 0, ErrorCode::InvalidArgument,
          "block must divide the field side");
}

std::size_t TruthVector::affected() const {
  return static_cast<std::size_t>(std::count(h.begin(), h.end(), true));
}

std::vector<std::size_t> random_composition(std::size_t total, std::size_t parts, Rng& rng) {
  require(parts >= 1 && parts <= total, ErrorCode::InvalidArgument,
          "composition needs 1 <= parts <= total");
  std::vector<std::size_t> positions(total - 1);
  std::iota(positions.begin(), positions.end(), std::size_t{1});
  std::vector<std::size_t> cuts;
  cuts.reserve(parts - 1);
  std::sample(positions.begin(), positions.end(), std::back_inserter(cuts), parts - 1, rng);
  std::vector<std::size_t> sizes;
  sizes.reserve(parts);
  std::size_t prev = 0;
  for (auto c : cuts) {
    sizes.push_back(c - prev);
    prev = c;
  }
  sizes.push_back(total - prev);
  return sizes;
}

GeneratedData gen_subset_scenario(const SubsetScenario& sc, Rng& rng, bool allow_vacuous) {
  sc.validate();
  std::vector<std::size_t> sizes = sc.size_mode == SizeMode::Random
                                       ? random_composition(sc.M, sc.m, rng)
                                       : std::vector<std::size_t>(sc.m, sc.M / sc.m);

  std::vector<std::size_t> assignment;
  assignment.reserve(sc.M);
  for (std::size_t i = 0; i < sc.m; ++i) assignment.insert(assignment.end(), sizes[i], i);

  std::vector<std::size_t> subset_ids(sc.m);
  std::iota(subset_ids.begin(), subset_ids.end(), std::size_t{0});
  std::vector<std::size_t> affected_subsets;
  std::sample(subset_ids.begin(), subset_ids.end(), std::back_inserter(affected_subsets), sc.m1,
              rng);

  GeneratedData out{{}, Decomposition::from_assignment(assignment), {}, false};
  out.truth.h.assign(sc.M, false);
  std::size_t planted = 0;
  for (auto i : affected_subsets) {
    const auto members = out.decomposition.members(i);
    const auto count = static_cast<std::size_t>(std::lround(sc.pi * static_cast<double>(sizes[i])));
    std::vector<std::size_t> chosen;
    std::sample(members.begin(), members.end(), std::back_inserter(chosen), count, rng);
    for (auto a : chosen) out.truth.h[a] = true;
    planted += chosen.size();
  }
  if (sc.m1 > 0 && planted == 0) {
    out.vacuous = true;
    require(allow_vacuous, ErrorCode::Domain,
            "vacuous scenario: round(pi * s_i) = 0 in every affected subset");
  }

  std::normal_distribution<double> normal;
  out.z.resize(sc.M);
  for (std::size_t a = 0; a < sc.M; ++a)
    out.z[a] = normal(rng) + (out.truth.h[a] ? sc.delta : 0.0);
  return out;
}

PlantedField plant_effect(std::span<const double> field, double effect_fraction, double delta,
                          Rng& rng) {
  require(effect_fraction > 0.0 && effect_fraction < 1.0, ErrorCode::InvalidArgument,
          "effect_fraction must lie in (0, 1)");
  const std::size_t total = field.size();
  const auto planted =
      static_cast<std::size_t>(std::lround(effect_fraction * static_cast<double>(total)));

  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(planted),
                    order.end(), [&](std::size_t a, std::size_t b) {
                      return field[a] > field[b] || (field[a] == field[b] && a < b);
                    });

  PlantedField out;
  out.truth.h.assign(total, false);
  for (std::size_t k = 0; k < planted; ++k) out.truth.h[order[k]] = true;
  std::normal_distribution<double> normal;
  out.z.resize(total);
  for (std::size_t a = 0; a < total; ++a)
    out.z[a] = (out.truth.h[a] ? delta : 0.0) + normal(rng);
  return out;
}

ScenarioGenerator::ScenarioGenerator(Scenario scenario) : scenario_(std::move(scenario)) {
  if (auto* f = std::get_if<FieldScenario>(&scenario_)) {
    f->validate();
    sampler_ = std::make_shared<const FieldSampler>(f->side, f->theta);
    blocks_ = square_decomposition(f->side, f->block);
  } else {
    std::get<SubsetScenario>(scenario_).validate();
  }
}

GeneratedData ScenarioGenerator::generate(Rng& rng) const {
  if (const auto* sc = std::get_if<SubsetScenario>(&scenario_))
    return gen_subset_scenario(*sc, rng, true);
  const auto& f = std::get<FieldScenario>(scenario_);
  const auto field = sampler_->sample(rng);
  auto planted = plant_effect(field, f.effect_fraction, f.delta, rng);
  return {std::move(planted.z), *blocks_, std::move(planted.truth), false};
}

std::vector<std::string> ScenarioGenerator::warnings() const {
  return sampler_ ? sampler_->warnings() : std::vector<std::string>{};
}

ReplicateOutcome score_decisions(const Decisions& decisions, const TruthVector& truth) {
  require(decisions.size() == truth.h.size(), ErrorCode::InvalidArgument,
          "decision and truth lengths differ");
  ReplicateOutcome out;
  std::size_t affected = 0, true_positives = 0;
  for (std::size_t a = 0; a < decisions.size(); ++a) {
    if (truth.h[a]) ++affected;
    if (!decisions[a]) continue;
    ++out.rejections;
    if (truth.h[a])
      ++true_positives;
    else
      ++out.false_positives;
  }
  out.has_affected = affected > 0;
  out.power = out.has_affected
                  ? static_cast<double>(true_positives) / static_cast<double>(affected)
                  : 0.0;
  out.fdp = out.rejections ? static_cast<double>(out.false_positives) /
                                 static_cast<double>(out.rejections)
                           : 0.0;
  return out;
}

std::optional<RatioEstimate> paired_power_ratio(std::span<const ReplicateOutcome> method,
                                                std::span<const ReplicateOutcome> awa) {
  require(method.size() == awa.size(), ErrorCode::InvalidArgument,
          "paired ratio needs equal replicate counts");
  Moments pm, am;
  for (std::size_t i = 0; i < method.size(); ++i) {
    if (!awa[i].has_affected) continue;
    pm.add(method[i].power);
    am.add(awa[i].power);
  }
  if (am.n == 0 || am.mean() <= 0.0) return std::nullopt;
  RatioEstimate est;
  est.ratio = pm.mean() / am.mean();
  // Delta method on the paired residuals p_i - R a_i.
  Moments resid;
  for (std::size_t i = 0; i < method.size(); ++i) {
    if (!awa[i].has_affected) continue;
    resid.add(method[i].power - est.ratio * awa[i].power);
  }
  est.se = resid.se() / am.mean();
  return est;
}

std::vector<MetricsRecord> evaluate_methods(std::span<const MethodSpec> specs,
                                            const Scenario& scenario, std::size_t replicates,
                                            std::uint64_t seed, std::uint64_t cell,
                                            const EvaluationOptions& options) {
  require(!specs.empty(), ErrorCode::InvalidArgument, "no methods to evaluate");
  require(replicates >= 1, ErrorCode::InvalidArgument, "replicates must be >= 1");
  for (const auto& s : specs) s.validate();

  const ScenarioGenerator generator(scenario);
  const std::size_t k = specs.size();
  std::vector<std::vector<ReplicateOutcome>> outcomes(k, std::vector<ReplicateOutcome>(replicates));
  std::vector<char> vacuous(replicates, 0);

  parallel_for(replicates, resolve_workers(options), [&](std::size_t rep) {
    Rng rng(stream_seed(seed, cell, rep));
    const auto data = generator.generate(rng);
    vacuous[rep] = data.vacuous;
    for (std::size_t j = 0; j < k; ++j) {
      ReplicateOutcome o;
      try {
        const auto result = run_method(data.z, data.decomposition, specs[j]);
        o = score_decisions(result.decisions, data.truth);
        o.r = result.calibrated_r;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::Certificate) throw;
        o = score_decisions(Decisions(data.z.size(), false), data.truth);
        o.certificate_ok = false;
      }
      outcomes[j][rep] = o;
    }
  });

  std::vector<MetricsRecord> records(k);
  for (std::size_t j = 0; j < k; ++j) {
    Moments power, v, fdp, any, r;
    auto& rec = records[j];
    for (std::size_t rep = 0; rep < replicates; ++rep) {
      const auto& o = outcomes[j][rep];
      if (o.has_affected) power.add(o.power);
      v.add(static_cast<double>(o.false_positives));
      fdp.add(o.fdp);
      any.add(o.false_positives > 0 ? 1.0 : 0.0);
      r.add(o.r);
      if (!o.certificate_ok) ++rec.certificate_violations;
      if (vacuous[rep]) ++rec.vacuous_replicates;
    }
    rec.avg_power = power.mean();
    rec.power_se = power.se();
    rec.e_v = v.mean();
    rec.e_v_se = v.se();
    rec.fdr = fdp.mean();
    rec.fdr_se = fdp.se();
    rec.fwer = any.mean();
    rec.fwer_se = any.se();
    rec.replicates = replicates;
    rec.power_replicates = power.n;
    rec.mean_r = r.mean();
  }
  for (std::size_t j = 0; j < k; ++j) {
    const auto companion = awa_companion(specs, j);
    if (!companion) continue;
    if (const auto ratio = paired_power_ratio(outcomes[j], outcomes[*companion])) {
      records[j].power_ratio_vs_awa = ratio->ratio;
      records[j].ratio_se = ratio->se;
    }
  }
  return records;
}

MetricsRecord estimate_metrics(const MethodSpec& spec, const Scenario& scenario,
                               std::size_t replicates, std::uint64_t seed,
                               const EvaluationOptions& options) {
  auto awa = MethodSpec::make(MethodFamily::Awa, spec.base, spec.alpha);
  const std::vector<MethodSpec> specs{spec, awa};
  return evaluate_methods(specs, scenario, replicates, seed, 0, options).front();
}

MonteCarloEstimate simulate_model_expected_fp(const ModelParams& params,
                                              const RelaxationCoefficients& coefficients,
                                              std::size_t replicates, std::uint64_t seed,
                                              const EvaluationOptions& options) {
  params.validate();
  require(replicates >= 2, ErrorCode::InvalidArgument, "need at least two replicates");
  const std::size_t s = params.s;
  const double sqrt_s = std::sqrt(static_cast<double>(s));
  const auto nonnull = static_cast<std::size_t>(std::lround(params.pi * static_cast<double>(s)));
  const bool infinite = std::isinf(params.mu);
  const double shift = (infinite || nonnull == 0)
                           ? 0.0
                           : params.mu * sqrt_s / static_cast<double>(nonnull);
  const double u = normal_upper_quantile(params.threshold);

  // Chunks keep the per-task overhead small; each chunk owns one stream.
  const std::size_t chunk = 1000;
  const std::size_t chunks = (replicates + chunk - 1) / chunk;
  std::vector<Moments> partial(chunks);
  parallel_for(chunks, resolve_workers(options), [&](std::size_t c) {
    Rng rng(stream_seed(seed, 0x6d63, c));
    std::normal_distribution<double> normal;
    std::vector<double> z(s);
    const std::size_t end = std::min(replicates, (c + 1) * chunk);
    for (std::size_t rep = c * chunk; rep < end; ++rep) {
      std::size_t v = 0;
      for (std::size_t i = 0; i < params.m; ++i) {
        const bool affected = i >= params.m0;
        const std::size_t planted = affected ? nonnull : 0;
        double sum = 0.0;
        for (std::size_t a = 0; a < s; ++a) {
          z[a] = normal(rng) + (a < planted ? shift : 0.0);
          sum += z[a];
        }
        bool positive = sum / sqrt_s > u;
        if (affected && infinite) positive = true;
        const double cut = positive ? coefficients.c : coefficients.cbar;
        for (std::size_t a = planted; a < s; ++a)
          if (z[a] > cut) ++v;
      }
      partial[c].add(static_cast<double>(v));
    }
  });

  Moments total;
  for (const auto& p : partial) {
    total.sum += p.sum;
    total.sum_sq += p.sum_sq;
    total.n += p.n;
  }
  return {total.mean(), total.se(), total.n};
}

}  // namespace relaxmt
