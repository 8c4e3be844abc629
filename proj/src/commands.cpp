#include "relaxmt/commands.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <set>
#include <sstream>

#include "relaxmt/calibration.hpp"
#include "relaxmt/error.hpp"
#include "relaxmt/experiment.hpp"
#include "relaxmt/io.hpp"
#include "relaxmt/pipeline.hpp"
#include "relaxmt/plot.hpp"
#include "relaxmt/simulation.hpp"

namespace relaxmt {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// JSON has no infinity; non-finite values are written as strings.
json number(double x) {
  if (std::isfinite(x)) return x;
  return format_number(x);
}

template <typename T>
void read_opt(const json& j, const char* key, T& field) {
  if (j.contains(key) && !j.at(key).is_null()) j.at(key).get_to(field);
}

void check_unknown_keys(const json& j, const std::set<std::string>& known, const char* what) {
  require(j.is_object(), ErrorCode::Schema, std::string(what) + " config must be a JSON object");
  for (const auto& [key, _] : j.items())
    require(known.count(key) > 0, ErrorCode::Schema,
            std::string("unknown ") + what + " config key '" + key + "'");
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  require(!ec, ErrorCode::Io, "cannot create output directory '" + dir + "': " + ec.message());
}

std::string join_path(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

struct Clock {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

json report_header(const char* command, const json& config) {
  return json{{"tool", "relaxmt"}, {"version", kToolVersion}, {"command", command},
              {"config", config}};
}

struct DeltaChoice {
  DeltaSource source = DeltaSource::Estimated;
  double value = 0.0;
};

DeltaChoice parse_delta_choice(const std::string& text) {
  if (text == "inf") return {DeltaSource::Infinite, 0.0};
  if (text == "est") return {DeltaSource::Estimated, 0.0};
  double v = 0.0;
  std::size_t used = 0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  require(used == text.size() && used > 0 && std::isfinite(v), ErrorCode::InvalidArgument,
          "delta must be 'inf', 'est' or a finite number, got '" + text + "'");
  return {DeltaSource::Fixed, v};
}

// ---- analyze -------------------------------------------------------------

struct Run {
  std::string label;
  MethodSpec spec;
  std::optional<std::size_t> decomposition;  // index into the loaded list
};

std::vector<Run> plan_runs(const AnalyzeConfig& c, std::size_t decompositions) {
  const auto delta = parse_delta_choice(c.delta);
  const auto base = parse_base(c.base, c.gamma);
  std::vector<Run> runs;
  for (const auto& name : c.methods) {
    auto spec = MethodSpec::make(parse_family(name), base, c.alpha);
    if (c.rbar && spec.family == MethodFamily::Rmio) spec.rbar = *c.rbar;
    spec.delta = delta.source;
    spec.delta_value = delta.value;
    spec.validate();
    if (spec.family == MethodFamily::Awa) {
      runs.push_back({name, spec, std::nullopt});
      continue;
    }
    require(decompositions > 0, ErrorCode::InvalidArgument,
            "method '" + name + "' needs at least one --decomposition");
    for (std::size_t d = 0; d < decompositions; ++d) {
      const std::string label =
          decompositions == 1 ? name : name + "@d" + std::to_string(d + 1);
      runs.push_back({label, spec, d});
    }
  }
  return runs;
}

DataMatrix subsample_rows(const DataMatrix& data, double fraction, Rng& rng) {
  auto pick = [&](const std::vector<std::vector<double>>& rows) {
    const auto n = rows.size();
    auto k = static_cast<std::size_t>(std::lround(fraction * static_cast<double>(n)));
    k = std::clamp<std::size_t>(k, std::min<std::size_t>(2, n), n);
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::vector<std::size_t> chosen;
    std::sample(idx.begin(), idx.end(), std::back_inserter(chosen), k, rng);
    std::vector<std::vector<double>> out;
    for (auto i : chosen) out.push_back(rows[i]);
    return out;
  };
  DataMatrix out;
  out.atom_ids = data.atom_ids;
  out.group_x = pick(data.group_x);
  out.group_y = pick(data.group_y);
  return out;
}

}  // namespace

// ---- config (de)serialization -------------------------------------------

void to_json(json& j, const AnalyzeConfig& c) {
  j = json{{"data", c.data},
           {"decompositions", c.decompositions},
           {"methods", c.methods},
           {"base", c.base},
           {"gamma", c.gamma},
           {"rbar", c.rbar ? json(*c.rbar) : json(nullptr)},
           {"alpha", c.alpha},
           {"delta", c.delta},
           {"score", c.score},
           {"out", c.out},
           {"seed", c.seed},
           {"resample_iterations", c.resample_iterations},
           {"resample_fraction", c.resample_fraction}};
}

void from_json(const json& j, AnalyzeConfig& c) {
  check_unknown_keys(j,
                     {"data", "decompositions", "methods", "base", "gamma", "rbar", "alpha",
                      "delta", "score", "out", "seed", "resample_iterations",
                      "resample_fraction"},
                     "analyze");
  read_opt(j, "data", c.data);
  read_opt(j, "decompositions", c.decompositions);
  read_opt(j, "methods", c.methods);
  read_opt(j, "base", c.base);
  read_opt(j, "gamma", c.gamma);
  if (j.contains("rbar") && !j.at("rbar").is_null()) c.rbar = j.at("rbar").get<double>();
  read_opt(j, "alpha", c.alpha);
  read_opt(j, "delta", c.delta);
  read_opt(j, "score", c.score);
  read_opt(j, "out", c.out);
  read_opt(j, "seed", c.seed);
  read_opt(j, "resample_iterations", c.resample_iterations);
  read_opt(j, "resample_fraction", c.resample_fraction);
}

void to_json(json& j, const SimulateConfig& c) {
  j = json{{"grid", c.grid},   {"replicates", c.replicates}, {"seed", c.seed},
           {"out", c.out},     {"plots", c.plots},           {"workers", c.workers}};
}

void from_json(const json& j, SimulateConfig& c) {
  check_unknown_keys(j, {"grid", "replicates", "seed", "out", "plots", "workers"}, "simulate");
  read_opt(j, "grid", c.grid);
  read_opt(j, "replicates", c.replicates);
  read_opt(j, "seed", c.seed);
  read_opt(j, "out", c.out);
  read_opt(j, "plots", c.plots);
  read_opt(j, "workers", c.workers);
}

void to_json(json& j, const CalibrateConfig& c) {
  j = json{{"m", c.m},
           {"s", c.s},
           {"alpha", c.alpha},
           {"rule", c.rule},
           {"rbar", c.rbar},
           {"delta", c.delta},
           {"delta_value", c.delta_value ? json(*c.delta_value) : json(nullptr)},
           {"validate", c.validate},
           {"validate_replicates", c.validate_replicates},
           {"seed", c.seed},
           {"out", c.out},
           {"workers", c.workers}};
}

void from_json(const json& j, CalibrateConfig& c) {
  check_unknown_keys(j,
                     {"m", "s", "alpha", "rule", "rbar", "delta", "delta_value", "validate",
                      "validate_replicates", "seed", "out", "workers"},
                     "calibrate");
  read_opt(j, "m", c.m);
  read_opt(j, "s", c.s);
  read_opt(j, "alpha", c.alpha);
  read_opt(j, "rule", c.rule);
  read_opt(j, "rbar", c.rbar);
  read_opt(j, "delta", c.delta);
  if (j.contains("delta_value") && !j.at("delta_value").is_null())
    c.delta_value = j.at("delta_value").get<double>();
  read_opt(j, "validate", c.validate);
  read_opt(j, "validate_replicates", c.validate_replicates);
  read_opt(j, "seed", c.seed);
  read_opt(j, "out", c.out);
  read_opt(j, "workers", c.workers);
}

json load_config_json(const std::string& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    fail(ErrorCode::Parse, "config file '" + path + "': " + e.what());
  }
  if (j.is_object() && j.contains("config") && j.contains("command")) return j.at("config");
  return j;
}

json stable_payload(const json& report) {
  json out = report;
  out.erase("wall_clock_seconds");
  return out;
}

// ---- analyze ---------------------------------------------------------------

json cmd_analyze(const AnalyzeConfig& c) {
  Clock clock;
  require(!c.data.empty(), ErrorCode::InvalidArgument, "--data is required");
  require(fs::exists(c.data), ErrorCode::Io, "data file '" + c.data + "' does not exist");
  for (const auto& d : c.decompositions)
    require(fs::exists(d), ErrorCode::Io, "decomposition file '" + d + "' does not exist");
  require(c.alpha > 0.0 && c.alpha < 1.0, ErrorCode::InvalidArgument, "alpha must lie in (0, 1)");
  require(!c.methods.empty(), ErrorCode::InvalidArgument, "no methods requested");
  require(c.score == "z" || c.score == "t", ErrorCode::InvalidArgument,
          "score must be 'z' or 't'");
  require(c.resample_fraction > 0.0 && c.resample_fraction <= 1.0, ErrorCode::InvalidArgument,
          "resample fraction must lie in (0, 1]");

  const auto runs = plan_runs(c, c.decompositions.size());
  const auto data = read_data_csv(c.data);
  std::vector<LabeledDecomposition> decomps;
  for (const auto& path : c.decompositions)
    decomps.push_back(read_decomposition_csv(path, data.atom_ids));

  const auto kind = c.score == "t" ? ScoreKind::TtoZ : ScoreKind::PooledZ;
  const auto scores = two_sample_scores(data, kind);
  const auto p = pvalues_from_scores(scores.z);

  json report = report_header("analyze", c);
  json inputs = {{"data", {{"path", c.data}, {"digest", file_digest(c.data)}}}};
  json dlist = json::array();
  for (const auto& path : c.decompositions)
    dlist.push_back({{"path", path}, {"digest", file_digest(path)}});
  inputs["decompositions"] = dlist;
  report["inputs"] = inputs;

  std::vector<std::string> warnings;
  if (!scores.zero_variance.empty()) {
    std::string ids;
    for (std::size_t k = 0; k < scores.zero_variance.size() && k < 20; ++k)
      ids += (k ? ", " : "") + data.atom_ids[scores.zero_variance[k]];
    warnings.push_back(std::to_string(scores.zero_variance.size()) +
                       " atoms with zero pooled variance scored as 0: " + ids);
  }

  auto run_all = [&](std::span<const double> z) {
    std::vector<AnalysisResult> results;
    for (const auto& run : runs) {
      static const Decomposition kNone;
      const auto& d = run.decomposition ? decomps[*run.decomposition].decomposition : kNone;
      results.push_back(run.spec.family == MethodFamily::Awa
                            ? run_awa(pvalues_from_scores(z), run.spec)
                            : run_two_step(z, d, run.spec));
    }
    return results;
  };
  const auto results = run_all(scores.z);

  json jruns = json::array();
  for (std::size_t k = 0; k < runs.size(); ++k) {
    const auto& r = results[k];
    json jr = {{"label", runs[k].label},
               {"method", to_string(r.spec.family)},
               {"base", to_string(r.spec.base)},
               {"alpha", r.spec.alpha},
               {"rejections", count_rejections(r.decisions)}};
    if (runs[k].decomposition) {
      const auto& ld = decomps[*runs[k].decomposition];
      jr["decomposition"] = c.decompositions[*runs[k].decomposition];
      const auto& sc = *r.screening;
      json positive = json::array();
      for (auto i : sc.positive) positive.push_back(ld.subset_labels[i]);
      jr["screening"] = {{"rule", to_string(r.spec.screening().kind)},
                         {"threshold", sc.threshold},
                         {"positive_subsets", positive},
                         {"atoms_positive", sc.atoms_positive},
                         {"atoms_negative", sc.atoms_negative}};
      jr["calibrated_r"] = r.calibrated_r;
      jr["r"] = r.coefficients->r;
      jr["r_capped"] = r.r_capped;
      jr["rbar"] = r.coefficients->rbar;
      jr["c"] = number(r.coefficients->c);
      jr["cbar"] = number(r.coefficients->cbar);
      jr["delta_mode"] = to_string(r.spec.delta);
      jr["delta_used"] = number(r.delta_used);
      jr["weight_sum"] = r.weight_sum;
      jr["total_atoms"] = data.atoms();
      if (r.calibration)
        jr["worst_case"] = {{"m0", r.calibration->worst.m0},
                            {"pi", r.calibration->worst.pi},
                            {"expected_fp", r.calibration->worst.expected_fp}};
    }
    json rejected = json::array();
    for (std::size_t a = 0; a < r.decisions.size(); ++a)
      if (r.decisions[a]) rejected.push_back(data.atom_ids[a]);
    jr["rejected"] = rejected;
    jr["warnings"] = r.warnings;
    jruns.push_back(jr);
  }

  // Pairwise common rejections.
  json common = json::array();
  std::ostringstream summary;
  summary << "run_a,run_b,common\n";
  for (std::size_t a = 0; a < runs.size(); ++a) {
    for (std::size_t b = a; b < runs.size(); ++b) {
      std::size_t n = 0;
      for (std::size_t j = 0; j < data.atoms(); ++j)
        n += results[a].decisions[j] && results[b].decisions[j];
      summary << runs[a].label << ',' << runs[b].label << ',' << n << '\n';
      common.push_back({{"run_a", runs[a].label}, {"run_b", runs[b].label}, {"common", n}});
    }
  }

  std::ostringstream decisions;
  decisions << "atom_id,z,p";
  for (const auto& run : runs) decisions << ',' << run.label;
  decisions << '\n';
  for (std::size_t j = 0; j < data.atoms(); ++j) {
    decisions << data.atom_ids[j] << ',' << format_number(scores.z[j]) << ','
              << format_number(p[j]);
    for (const auto& r : results) decisions << ',' << (r.decisions[j] ? 1 : 0);
    decisions << '\n';
  }

  ensure_dir(c.out);
  write_file(join_path(c.out, "decisions.csv"), decisions.str());
  write_file(join_path(c.out, "summary.csv"), summary.str());

  json result = {{"atoms", data.atoms()},
                 {"subjects_x", data.group_x.size()},
                 {"subjects_y", data.group_y.size()},
                 {"runs", jruns},
                 {"common_rejections", common},
                 {"warnings", warnings}};

  if (c.resample_iterations > 0) {
    std::ostringstream rs;
    rs << "iteration,run,rejections\n";
    std::vector<double> totals(runs.size(), 0.0);
    for (std::size_t it = 0; it < c.resample_iterations; ++it) {
      Rng rng(stream_seed(c.seed, 0x7273, it));
      const auto sub = subsample_rows(data, c.resample_fraction, rng);
      const auto sub_results = run_all(two_sample_scores(sub, kind).z);
      for (std::size_t k = 0; k < runs.size(); ++k) {
        const auto n = count_rejections(sub_results[k].decisions);
        totals[k] += static_cast<double>(n);
        rs << it + 1 << ',' << runs[k].label << ',' << n << '\n';
      }
    }
    write_file(join_path(c.out, "resample.csv"), rs.str());
    json mean = json::object();
    for (std::size_t k = 0; k < runs.size(); ++k)
      mean[runs[k].label] = totals[k] / static_cast<double>(c.resample_iterations);
    result["resample"] = {{"iterations", c.resample_iterations},
                          {"fraction", c.resample_fraction},
                          {"mean_rejections", mean}};
  }

  report["result"] = result;
  report["outputs"] = {{"decisions", "decisions.csv"}, {"summary", "summary.csv"}};
  report["wall_clock_seconds"] = clock.seconds();
  write_file(join_path(c.out, "report.json"), report.dump(2) + "\n");
  return report;
}

// ---- simulate --------------------------------------------------------------

json cmd_simulate(const SimulateConfig& c) {
  Clock clock;
  require(!c.grid.empty(), ErrorCode::InvalidArgument, "--grid is required");
  require(fs::exists(c.grid), ErrorCode::Io, "grid file '" + c.grid + "' does not exist");
  require(c.replicates >= 1, ErrorCode::InvalidArgument, "replicates must be >= 1");

  const auto grid = load_grid(c.grid);
  EvaluationOptions options;
  options.workers = c.workers;
  const auto rows = run_experiment_grid(grid, c.replicates, c.seed, options);

  std::ostringstream csv;
  write_results_csv(csv, rows);
  ensure_dir(c.out);
  write_file(join_path(c.out, "metrics.csv"), csv.str());

  json outputs = {{"metrics", "metrics.csv"}};
  if (c.plots) {
    json files = json::array();
    for (const auto& panel : render_ratio_panels(rows)) {
      const auto name = panel.file_stem + ".svg";
      write_file(join_path(c.out, name), panel.svg);
      files.push_back({{"file", name}, {"title", panel.title}});
    }
    outputs["plots"] = files;
  }

  std::size_t violations = 0;
  for (const auto& r : rows) violations += r.metrics.certificate_violations;

  json report = report_header("simulate", c);
  report["inputs"] = {{"grid", {{"path", c.grid}, {"digest", file_digest(c.grid)}}}};
  report["result"] = {{"cells", grid.cells.size()},
                      {"rows", rows.size()},
                      {"certificate_violations", violations},
                      {"metrics_digest", "fnv1a64:" + hex64(fnv1a64(csv.str()))}};
  report["outputs"] = outputs;
  report["wall_clock_seconds"] = clock.seconds();
  write_file(join_path(c.out, "report.json"), report.dump(2) + "\n");
  return report;
}

// ---- calibrate -------------------------------------------------------------

json cmd_calibrate(const CalibrateConfig& c) {
  Clock clock;
  const ScreeningRule rule{parse_screening(c.rule), c.alpha};
  require(rule.kind != ScreeningKind::Lsu, ErrorCode::InvalidArgument,
          "calibrate supports --rule nmcp|bonf (LSU screening is data dependent)");

  DeltaMode delta = DeltaMode::Infinite();
  const auto choice = parse_delta_choice(c.delta);
  if (choice.source == DeltaSource::Estimated) {
    require(c.delta_value.has_value(), ErrorCode::InvalidArgument,
            "--delta est needs --delta-value (the estimated subset summary mean)");
    delta = DeltaMode::Value(*c.delta_value);
  } else if (choice.source == DeltaSource::Fixed) {
    delta = DeltaMode::Value(choice.value);
  }

  const auto cal = calibrate_relaxation(c.m, c.s, c.alpha, rule, c.rbar, delta);
  const auto& k = cal.coefficients;
  json result = {{"r", k.r},
                 {"rbar", k.rbar},
                 {"c", number(k.c)},
                 {"cbar", number(k.cbar)},
                 {"threshold", cal.threshold},
                 {"total_atoms", c.m * c.s},
                 {"delta_mode", to_string(cal.delta)},
                 {"worst_case",
                  {{"m0", cal.worst.m0}, {"pi", cal.worst.pi}, {"expected_fp", cal.worst.expected_fp}}},
                 {"bracket", {cal.bracket_low, cal.bracket_high}},
                 {"evaluations", cal.evaluations}};

  if (c.validate) {
    const auto params = ModelParams::least_favorable(c.m, cal.worst.m0, c.s, cal.worst.pi,
                                                     delta.mu(), cal.threshold, c.alpha);
    EvaluationOptions options;
    options.workers = c.workers;
    const auto mc =
        simulate_model_expected_fp(params, k, c.validate_replicates, c.seed, options);
    const double zscore = mc.se > 0.0 ? (mc.mean - c.alpha) / mc.se : 0.0;
    result["validation"] = {{"replicates", mc.replicates},
                            {"expected_fp", mc.mean},
                            {"se", mc.se},
                            {"z", zscore},
                            {"within_3se", std::abs(zscore) <= 3.0}};
  }

  json report = report_header("calibrate", c);
  report["inputs"] = json::object();
  report["result"] = result;
  report["wall_clock_seconds"] = clock.seconds();
  if (!c.out.empty()) {
    ensure_dir(c.out);
    write_file(join_path(c.out, "report.json"), report.dump(2) + "\n");
  }
  return report;
}

}  // namespace relaxmt
