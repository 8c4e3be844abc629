#pragma once

// The three user workflows behind the command-line tool. Each returns a
// self-contained JSON report whose "config" member can be fed back in.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace relaxmt {

inline constexpr const char* kToolVersion = "0.1.0";

struct AnalyzeConfig {
  std::string data;
  std::vector<std::string> decompositions;
  std::vector<std::string> methods{"awa"};
  std::string base = "bonf";
  double gamma = 0.5;
  std::optional<double> rbar;   // family default when absent
  double alpha = 0.05;
  std::string delta = "est";    // inf | est | <number>
  std::string score = "z";      // z | t
  std::string out = "out";
  std::uint64_t seed = 1;
  std::size_t resample_iterations = 0;
  double resample_fraction = 0.8;
};

struct SimulateConfig {
  std::string grid;
  std::size_t replicates = 1000;
  std::uint64_t seed = 1;
  std::string out = "out";
  bool plots = false;
  std::size_t workers = 0;
};

struct CalibrateConfig {
  std::size_t m = 20;
  std::size_t s = 10;
  double alpha = 0.05;
  std::string rule = "bonf";    // nmcp | bonf
  double rbar = 0.0;
  std::string delta = "inf";    // inf | est | <number>
  std::optional<double> delta_value;
  bool validate = false;
  std::size_t validate_replicates = 100000;
  std::uint64_t seed = 1;
  std::string out;              // optional report directory
  std::size_t workers = 0;
};

void to_json(nlohmann::json& j, const AnalyzeConfig& c);
void from_json(const nlohmann::json& j, AnalyzeConfig& c);
void to_json(nlohmann::json& j, const SimulateConfig& c);
void from_json(const nlohmann::json& j, SimulateConfig& c);
void to_json(nlohmann::json& j, const CalibrateConfig& c);
void from_json(const nlohmann::json& j, CalibrateConfig& c);

/// Reads a config file: either a bare config object or a report with a
/// "config" member.
nlohmann::json load_config_json(const std::string& path);

/// Writes report.json, decisions.csv and summary.csv (plus resample.csv) to
/// config.out.
nlohmann::json cmd_analyze(const AnalyzeConfig& config);

/// Writes metrics.csv, report.json and, with plots, panel_*.svg.
nlohmann::json cmd_simulate(const SimulateConfig& config);

/// Writes report.json to config.out when set.
nlohmann::json cmd_calibrate(const CalibrateConfig& config);

/// The report minus volatile members (wall clock), for equality checks.
nlohmann::json stable_payload(const nlohmann::json& report);

}  // namespace relaxmt
