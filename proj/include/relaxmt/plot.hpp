#pragma once

// Static SVG line charts of power ratio vs AWA against the raw effect.

#include <string>
#include <vector>

#include "relaxmt/experiment.hpp"

namespace relaxmt {

struct SvgPanel {
  std::string title;
  std::string file_stem;  // panel_<n>
  std::string svg;
};

/// One panel per scenario (all parameters but delta) and base/alpha; one
/// line per relaxed method. Rows without a ratio are skipped; panels need at
/// least one point.
std::vector<SvgPanel> render_ratio_panels(const std::vector<ResultRow>& rows);

}  // namespace relaxmt
