#pragma once

// Experiment grids: a text file of records, each a block of key=value lines
// (blank line between records, '#' starts a comment). Comma-separated values
// expand to the Cartesian product. Methods sharing a scenario run on the
// same simulated data.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "relaxmt/simulation.hpp"

namespace relaxmt {

struct GridCell {
  Scenario scenario;
  std::string scenario_key;        // canonical text form, also the seed source
  std::vector<MethodSpec> methods;
  std::vector<std::size_t> lines;  // record start lines that contributed
};

struct ExperimentGrid {
  std::vector<GridCell> cells;

  std::size_t rows() const;
};

/// Throws Error(Parse) with "<source>:<line>: field '<key>': ..." details.
ExperimentGrid parse_grid(std::istream& in, const std::string& source = "<grid>");
ExperimentGrid load_grid(const std::string& path);

std::string scenario_key(const Scenario& scenario);

struct ResultRow {
  MethodSpec spec;
  Scenario scenario;
  MetricsRecord metrics;
  std::uint64_t seed = 0;
  std::string note;
};

std::vector<ResultRow> run_experiment_grid(const ExperimentGrid& grid, std::size_t replicates,
                                           std::uint64_t seed,
                                           const EvaluationOptions& options = {});

/// Comma-separated, header first, %.10g numbers, LF line endings.
void write_results_csv(std::ostream& out, const std::vector<ResultRow>& rows);
std::vector<std::string> results_csv_header();

}  // namespace relaxmt
