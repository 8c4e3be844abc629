#include "relaxmt/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "relaxmt/io.hpp"

namespace relaxmt {

namespace {

constexpr double kWidth = 480, kHeight = 320;
constexpr double kLeft = 60, kRight = 110, kTop = 40, kBottom = 50;

const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

double scenario_delta(const Scenario& s) {
  if (const auto* sub = std::get_if<SubsetScenario>(&s)) return sub->delta;
  return std::get<FieldScenario>(s).delta;
}

std::string panel_key(const ResultRow& row) {
  std::string key;
  std::istringstream words(scenario_key(row.scenario));
  std::string w;
  while (words >> w)
    if (w.rfind("delta=", 0) != 0) key += (key.empty() ? "" : " ") + w;
  return key + " base=" + to_string(row.spec.base) + " alpha=" + format_number(row.spec.alpha);
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else out += c;
  }
  return out;
}

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", x);
  return buf;
}

std::string tick(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", x);
  return buf;
}

struct Series {
  std::string label;
  std::vector<std::pair<double, double>> points;
};

std::string render(const std::string& title, const std::vector<Series>& series) {
  double xmin = INFINITY, xmax = -INFINITY, ymax = 1.0;
  for (const auto& s : series)
    for (auto [x, y] : s.points) {
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      if (std::isfinite(y)) ymax = std::max(ymax, y);
    }
  if (xmax <= xmin) {
    xmin -= 0.5;
    xmax += 0.5;
  }
  ymax = std::ceil(ymax * 1.1 * 2.0) / 2.0;
  const double ymin = 0.0;
  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - xmin) / (xmax - xmin) * pw; };
  auto py = [&](double y) { return kTop + ph - (y - ymin) / (ymax - ymin) * ph; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << kWidth / 2 << "\" y=\"18\" text-anchor=\"middle\" font-size=\"10\">"
      << escape(title) << "</text>\n";
  svg << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\""
      << ph << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double y = ymin + (ymax - ymin) * i / 4.0;
    svg << "<line x1=\"" << kLeft - 4 << "\" y1=\"" << num(py(y)) << "\" x2=\"" << kLeft
        << "\" y2=\"" << num(py(y)) << "\" stroke=\"black\"/>";
    svg << "<text x=\"" << kLeft - 7 << "\" y=\"" << num(py(y) + 4)
        << "\" text-anchor=\"end\">" << tick(y) << "</text>\n";
    const double x = xmin + (xmax - xmin) * i / 4.0;
    svg << "<line x1=\"" << num(px(x)) << "\" y1=\"" << kTop + ph << "\" x2=\"" << num(px(x))
        << "\" y2=\"" << kTop + ph + 4 << "\" stroke=\"black\"/>";
    svg << "<text x=\"" << num(px(x)) << "\" y=\"" << kTop + ph + 16
        << "\" text-anchor=\"middle\">" << tick(x) << "</text>\n";
  }
  svg << "<line x1=\"" << kLeft << "\" y1=\"" << num(py(1.0)) << "\" x2=\"" << kLeft + pw
      << "\" y2=\"" << num(py(1.0)) << "\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n";
  svg << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kHeight - 12
      << "\" text-anchor=\"middle\">raw effect delta</text>\n";
  svg << "<text transform=\"translate(16," << kTop + ph / 2
      << ") rotate(-90)\" text-anchor=\"middle\">power ratio vs AWA</text>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const char* color = kColors[k % std::size(kColors)];
    std::string path;
    for (auto [x, y] : series[k].points) {
      if (!std::isfinite(y)) continue;
      path += (path.empty() ? "" : " ") + num(px(x)) + "," + num(py(std::min(y, ymax)));
    }
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\""
        << path << "\"/>\n";
    for (auto [x, y] : series[k].points) {
      if (!std::isfinite(y)) continue;
      svg << "<circle cx=\"" << num(px(x)) << "\" cy=\"" << num(py(std::min(y, ymax)))
          << "\" r=\"2.5\" fill=\"" << color << "\"/>\n";
    }
    const double ly = kTop + 12 + 16.0 * static_cast<double>(k);
    svg << "<line x1=\"" << kLeft + pw + 10 << "\" y1=\"" << ly << "\" x2=\"" << kLeft + pw + 30
        << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"1.5\"/>";
    svg << "<text x=\"" << kLeft + pw + 35 << "\" y=\"" << ly + 4 << "\">"
        << escape(series[k].label) << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace

std::vector<SvgPanel> render_ratio_panels(const std::vector<ResultRow>& rows) {
  std::vector<std::string> order;
  std::map<std::string, std::map<std::string, Series>> panels;
  std::map<std::string, std::vector<std::string>> series_order;
  for (const auto& row : rows) {
    if (!row.metrics.power_ratio_vs_awa) continue;
    const auto key = panel_key(row);
    if (!panels.count(key)) order.push_back(key);
    const std::string label = to_string(row.spec.family) +
                              (row.spec.family == MethodFamily::Rmio
                                   ? " rbar=" + format_number(row.spec.rbar)
                                   : std::string{}) +
                              " " + to_string(row.spec.delta);
    auto& panel = panels[key];
    if (!panel.count(label)) series_order[key].push_back(label);
    auto& s = panel[label];
    s.label = label;
    s.points.emplace_back(scenario_delta(row.scenario), *row.metrics.power_ratio_vs_awa);
  }
  std::vector<SvgPanel> out;
  for (std::size_t i = 0; i < order.size(); ++i) {
    std::vector<Series> series;
    for (const auto& label : series_order[order[i]]) {
      auto s = panels[order[i]][label];
      std::sort(s.points.begin(), s.points.end());
      series.push_back(std::move(s));
    }
    char stem[32];
    std::snprintf(stem, sizeof stem, "panel_%03zu", i + 1);
    out.push_back({order[i], stem, render(order[i], series)});
  }
  return out;
}

}  // namespace relaxmt
