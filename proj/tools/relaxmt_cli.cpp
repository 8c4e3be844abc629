// relaxmt: analyze data, run simulation grids, calibrate relaxation coefficients.

#include <CLI11.hpp>
#include <cstdio>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "relaxmt/commands.hpp"
#include "relaxmt/error.hpp"

using nlohmann::json;
using namespace relaxmt;

namespace {

// Flags given explicitly override the config file, which overrides defaults.
struct Overrides {
  std::vector<std::function<void()>> apply;

  template <typename T, typename Field>
  void bind(CLI::App* app, const std::string& flag, T& storage, Field& field,
            const std::string& help) {
    auto* opt = app->add_option(flag, storage, help);
    apply.push_back([opt, &storage, &field] {
      if (opt->count() > 0) field = storage;
    });
  }

  template <typename Field>
  void flag(CLI::App* app, const std::string& name, bool& storage, Field& field,
            const std::string& help) {
    auto* opt = app->add_flag(name, storage, help);
    apply.push_back([opt, &storage, &field] {
      if (opt->count() > 0) field = storage;
    });
  }

  void run() const {
    for (const auto& f : apply) f();
  }
};

template <typename Config>
Config resolve(const std::string& config_path, const Overrides& overrides, Config& target) {
  if (!config_path.empty()) target = load_config_json(config_path).get<Config>();
  overrides.run();
  return target;
}

int report_error(const std::string& code, const std::string& detail) {
  std::string line = detail;
  for (auto& ch : line)
    if (ch == '\n' || ch == '\r') ch = ' ';
  std::fprintf(stderr, "error: %s: %s\n", code.c_str(), line.c_str());
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Relaxed two-step multiple testing with subset screening"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);

  // analyze
  AnalyzeConfig analyze_cfg, analyze_flags;
  Overrides analyze_ov;
  std::string analyze_config;
  bool analyze_print = false;
  double analyze_rbar = 0.0;
  auto* analyze = app.add_subcommand("analyze", "Test every atom of a two-group dataset");
  analyze->add_option("--config", analyze_config, "JSON config or earlier report")
      ->check(CLI::ExistingFile);
  analyze->add_flag("--print-config", analyze_print, "Print the resolved config and exit");
  analyze_ov.bind(analyze, "--data", analyze_flags.data, analyze_cfg.data,
                  "Data CSV (group,atom_1,...)");
  analyze_ov.bind(analyze, "--decomposition", analyze_flags.decompositions,
                  analyze_cfg.decompositions, "Decomposition CSV (atom_id,subset_id), repeatable");
  analyze_ov.bind(analyze, "--method", analyze_flags.methods, analyze_cfg.methods,
                  "awa|rmnc|rmwc|rmio (comma list allowed)");
  analyze->get_option("--method")->delimiter(',');
  analyze_ov.bind(analyze, "--base", analyze_flags.base, analyze_cfg.base, "bonf|lsu|ssu");
  analyze_ov.bind(analyze, "--gamma", analyze_flags.gamma, analyze_cfg.gamma,
                  "Scaling exponent for ssu");
  auto* rbar_opt = analyze->add_option("--rbar", analyze_rbar, "Tightening coefficient (rmio)");
  analyze_ov.apply.push_back([&] {
    if (rbar_opt->count() > 0) analyze_cfg.rbar = analyze_rbar;
  });
  analyze_ov.bind(analyze, "--alpha", analyze_flags.alpha, analyze_cfg.alpha, "Error level");
  analyze_ov.bind(analyze, "--delta", analyze_flags.delta, analyze_cfg.delta,
                  "Calibration delta: est|inf|<value>");
  analyze_ov.bind(analyze, "--score", analyze_flags.score, analyze_cfg.score,
                  "z (normal reference) or t (Student t mapped to z)");
  analyze_ov.bind(analyze, "--out", analyze_flags.out, analyze_cfg.out, "Output directory");
  analyze_ov.bind(analyze, "--seed", analyze_flags.seed, analyze_cfg.seed, "Seed for resampling");
  analyze_ov.bind(analyze, "--resample", analyze_flags.resample_iterations,
                  analyze_cfg.resample_iterations, "Subsample-and-rerun iterations");
  analyze_ov.bind(analyze, "--resample-fraction", analyze_flags.resample_fraction,
                  analyze_cfg.resample_fraction, "Fraction of rows kept per group");

  // simulate
  SimulateConfig simulate_cfg, simulate_flags;
  Overrides simulate_ov;
  std::string simulate_config;
  bool simulate_print = false;
  auto* simulate = app.add_subcommand("simulate", "Run a Monte Carlo experiment grid");
  simulate->add_option("--config", simulate_config, "JSON config or earlier report")
      ->check(CLI::ExistingFile);
  simulate->add_flag("--print-config", simulate_print, "Print the resolved config and exit");
  simulate_ov.bind(simulate, "--grid", simulate_flags.grid, simulate_cfg.grid, "Grid file");
  simulate_ov.bind(simulate, "--replicates", simulate_flags.replicates, simulate_cfg.replicates,
                   "Replicates per cell");
  simulate_ov.bind(simulate, "--seed", simulate_flags.seed, simulate_cfg.seed, "Master seed");
  simulate_ov.bind(simulate, "--out", simulate_flags.out, simulate_cfg.out, "Output directory");
  simulate_ov.flag(simulate, "--plots", simulate_flags.plots, simulate_cfg.plots,
                   "Write SVG power-ratio panels");
  simulate_ov.bind(simulate, "--workers", simulate_flags.workers, simulate_cfg.workers,
                   "Worker threads (0 = RELAXMT_THREADS or all cores)");

  // calibrate
  CalibrateConfig calibrate_cfg, calibrate_flags;
  Overrides calibrate_ov;
  std::string calibrate_config;
  bool calibrate_print = false;
  double calibrate_delta_value = 0.0;
  auto* calibrate = app.add_subcommand("calibrate", "Compute the relaxation coefficient r");
  calibrate->add_option("--config", calibrate_config, "JSON config or earlier report")
      ->check(CLI::ExistingFile);
  calibrate->add_flag("--print-config", calibrate_print, "Print the resolved config and exit");
  calibrate_ov.bind(calibrate, "--m", calibrate_flags.m, calibrate_cfg.m, "Number of subsets");
  calibrate_ov.bind(calibrate, "--s", calibrate_flags.s, calibrate_cfg.s, "Subset size");
  calibrate_ov.bind(calibrate, "--alpha", calibrate_flags.alpha, calibrate_cfg.alpha,
                    "Error level");
  calibrate_ov.bind(calibrate, "--rule", calibrate_flags.rule, calibrate_cfg.rule,
                    "Screening rule nmcp|bonf");
  calibrate_ov.bind(calibrate, "--rbar", calibrate_flags.rbar, calibrate_cfg.rbar,
                    "Tightening coefficient in [0, 1]");
  calibrate_ov.bind(calibrate, "--delta", calibrate_flags.delta, calibrate_cfg.delta,
                    "inf|est|<value>");
  auto* dv_opt = calibrate->add_option("--delta-value", calibrate_delta_value,
                                       "Subset summary mean used with --delta est");
  calibrate_ov.apply.push_back([&] {
    if (dv_opt->count() > 0) calibrate_cfg.delta_value = calibrate_delta_value;
  });
  calibrate_ov.flag(calibrate, "--validate", calibrate_flags.validate, calibrate_cfg.validate,
                    "Monte Carlo check of E(V) at the returned r");
  calibrate_ov.bind(calibrate, "--validate-replicates", calibrate_flags.validate_replicates,
                    calibrate_cfg.validate_replicates, "Monte Carlo replicates");
  calibrate_ov.bind(calibrate, "--seed", calibrate_flags.seed, calibrate_cfg.seed,
                    "Seed for validation");
  calibrate_ov.bind(calibrate, "--out", calibrate_flags.out, calibrate_cfg.out,
                    "Optional output directory for report.json");
  calibrate_ov.bind(calibrate, "--workers", calibrate_flags.workers, calibrate_cfg.workers,
                    "Worker threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    report_error("E_USAGE", e.what());
    return 2;
  }

  try {
    if (*analyze) {
      const auto cfg = resolve(analyze_config, analyze_ov, analyze_cfg);
      if (analyze_print) {
        std::cout << json(cfg).dump(2) << '\n';
        return 0;
      }
      const auto report = cmd_analyze(cfg);
      for (const auto& run : report["result"]["runs"])
        std::cout << run["label"].get<std::string>() << ": " << run["rejections"]
                  << " rejections\n";
      std::cout << "report: " << cfg.out << "/report.json\n";
    } else if (*simulate) {
      const auto cfg = resolve(simulate_config, simulate_ov, simulate_cfg);
      if (simulate_print) {
        std::cout << json(cfg).dump(2) << '\n';
        return 0;
      }
      const auto report = cmd_simulate(cfg);
      std::cout << report["result"]["rows"] << " rows written to " << cfg.out
                << "/metrics.csv\n";
    } else if (*calibrate) {
      const auto cfg = resolve(calibrate_config, calibrate_ov, calibrate_cfg);
      if (calibrate_print) {
        std::cout << json(cfg).dump(2) << '\n';
        return 0;
      }
      auto report = cmd_calibrate(cfg);
      std::cout << stable_payload(report)["result"].dump(2) << '\n';
    }
  } catch (const Error& e) {
    return report_error(std::string(to_string(e.code())), e.what());
  } catch (const nlohmann::json::exception& e) {
    return report_error("E_SCHEMA", e.what());
  } catch (const std::exception& e) {
    return report_error("E_INTERNAL", e.what());
  }
  return 0;
}
