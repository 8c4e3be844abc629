#include "relaxmt/procedures.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "relaxmt/error.hpp"

namespace relaxmt {

namespace {

void check_inputs(std::span<const double> p, double alpha) {
  require(!p.empty(), ErrorCode::InvalidArgument, "p-value set is empty");
  require(alpha > 0.0 && alpha < 1.0, ErrorCode::InvalidArgument,
          "alpha must lie in (0, 1)");
  for (double v : p)
    require(v >= 0.0 && v <= 1.0, ErrorCode::InvalidArgument,
            "p-values must lie in [0, 1]");
}

Decisions threshold(std::span<const double> p, double cutoff) {
  Decisions d(p.size());
  for (std::size_t j = 0; j < p.size(); ++j) d[j] = p[j] <= cutoff;
  return d;
}

Decisions reject_first(std::span<const double> p, const std::vector<std::size_t>& order,
                       std::size_t count) {
  Decisions d(p.size(), false);
  for (std::size_t k = 0; k < count; ++k) d[order[k]] = true;
  return d;
}

}  // namespace

ScalingFunction ScalingFunction::power(double gamma) {
  require(gamma > 0.0 && std::isfinite(gamma), ErrorCode::InvalidArgument,
          "scaling exponent gamma must be positive");
  ScalingFunction g;
  g.gamma_ = gamma;
  return g;
}

ScalingFunction ScalingFunction::tabulated(std::vector<double> values) {
  require(!values.empty(), ErrorCode::InvalidArgument, "scaling table is empty");
  for (std::size_t j = 0; j < values.size(); ++j) {
    require(values[j] > 0.0, ErrorCode::InvalidArgument, "scaling values must be positive");
    require(j == 0 || values[j] >= values[j - 1], ErrorCode::InvalidArgument,
            "scaling function must be nondecreasing");
  }
  ScalingFunction g;
  g.table_ = std::move(values);
  return g;
}

double ScalingFunction::operator()(std::size_t j) const {
  if (table_.empty()) return std::pow(static_cast<double>(j), gamma_);
  return table_.at(j - 1);
}

void ScalingFunction::validate(std::size_t m) const {
  if (!table_.empty())
    require(table_.size() >= m, ErrorCode::InvalidArgument,
            "scaling table shorter than the number of hypotheses");
}

std::vector<std::size_t> rank_order(std::span<const double> p) {
  std::vector<std::size_t> order(p.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return p[a] < p[b]; });
  return order;
}

Decisions nmcp(std::span<const double> p, double alpha) {
  check_inputs(p, alpha);
  return threshold(p, alpha);
}

Decisions bonferroni(std::span<const double> p, double alpha) {
  check_inputs(p, alpha);
  return threshold(p, alpha / static_cast<double>(p.size()));
}

Decisions holm(std::span<const double> p, double alpha) {
  check_inputs(p, alpha);
  const auto order = rank_order(p);
  const std::size_t m = p.size();
  std::size_t passed = 0;
  while (passed < m && p[order[passed]] <= alpha / static_cast<double>(m - passed))
    ++passed;
  return reject_first(p, order, passed);
}

Decisions step_up(std::span<const double> p, std::span<const double> critical) {
  require(critical.size() == p.size(), ErrorCode::InvalidArgument,
          "critical value count must match the p-value count");
  const auto order = rank_order(p);
  std::size_t cutoff = 0;
  for (std::size_t k = p.size(); k > 0; --k) {
    if (p[order[k - 1]] <= critical[k - 1]) {
      cutoff = k;
      break;
    }
  }
  return reject_first(p, order, cutoff);
}

Decisions linear_step_up(std::span<const double> p, double alpha) {
  check_inputs(p, alpha);
  const double m = static_cast<double>(p.size());
  std::vector<double> critical(p.size());
  for (std::size_t j = 0; j < p.size(); ++j)
    critical[j] = alpha * static_cast<double>(j + 1) / m;
  return step_up(p, critical);
}

Decisions scaled_step_up(std::span<const double> p, double alpha, const ScalingFunction& g) {
  check_inputs(p, alpha);
  g.validate(p.size());
  const double m = static_cast<double>(p.size());
  std::vector<double> critical(p.size());
  for (std::size_t j = 0; j < p.size(); ++j) critical[j] = alpha * g(j + 1) / m;
  return step_up(p, critical);
}

WeightedPValues apply_weights(std::span<const double> p, std::span<const double> w) {
  require(p.size() == w.size(), ErrorCode::InvalidArgument,
          "weight vector length does not match the p-value count");
  require(!p.empty(), ErrorCode::InvalidArgument, "p-value set is empty");
  WeightedPValues out;
  out.p.resize(p.size());
  double sum = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    require(w[j] >= 0.0 && std::isfinite(w[j]), ErrorCode::InvalidArgument,
            "weights must be finite and nonnegative");
    out.p[j] = w[j] == 0.0 ? 1.0 : std::min(p[j] / w[j], 1.0);
    sum += w[j];
  }
  out.mean_weight = sum / static_cast<double>(p.size());
  out.control_ok = out.mean_weight <= 1.0 + 1e-12;
  return out;
}

Decisions apply_base(const BaseSpec& base, std::span<const double> p, double alpha) {
  switch (base.kind) {
    case BaseProcedure::Bonferroni: return bonferroni(p, alpha);
    case BaseProcedure::Lsu: return linear_step_up(p, alpha);
    case BaseProcedure::ScaledStepUp:
      return scaled_step_up(p, alpha, ScalingFunction::power(base.gamma));
  }
  fail(ErrorCode::InvalidArgument, "unknown base procedure");
}

std::string to_string(const BaseSpec& base) {
  switch (base.kind) {
    case BaseProcedure::Bonferroni: return "bonf";
    case BaseProcedure::Lsu: return "lsu";
    case BaseProcedure::ScaledStepUp: {
      std::ostringstream out;
      out << "ssu(" << base.gamma << ")";
      return out.str();
    }
  }
  return "?";
}

BaseSpec parse_base(const std::string& name, double gamma) {
  if (name == "bonf" || name == "bonferroni") return BaseSpec::bonferroni();
  if (name == "lsu") return BaseSpec::lsu();
  if (name == "ssu") return BaseSpec::scaled(gamma);
  fail(ErrorCode::InvalidArgument, "unknown base procedure '" + name + "'");
}

std::size_t count_rejections(const Decisions& d) {
  return static_cast<std::size_t>(std::count(d.begin(), d.end(), true));
}

}  // namespace relaxmt
