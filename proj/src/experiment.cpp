#include "relaxmt/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "relaxmt/error.hpp"
#include "relaxmt/io.hpp"

namespace relaxmt {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

struct Record {
  std::size_t line = 0;
  std::map<std::string, std::vector<std::string>> values;
  std::map<std::string, std::size_t> key_lines;
};

class RecordReader {
 public:
  RecordReader(const Record& rec, const std::string& source) : rec_(rec), source_(source) {}

  [[noreturn]] void error(const std::string& key, const std::string& what) const {
    auto it = rec_.key_lines.find(key);
    const std::size_t line = it == rec_.key_lines.end() ? rec_.line : it->second;
    fail(ErrorCode::Parse,
         source_ + ":" + std::to_string(line) + ": field '" + key + "': " + what);
  }

  std::vector<std::string> strings(const std::string& key,
                                   std::vector<std::string> fallback) const {
    auto it = rec_.values.find(key);
    return it == rec_.values.end() ? fallback : it->second;
  }

  std::vector<double> reals(const std::string& key, std::vector<double> fallback) const {
    auto it = rec_.values.find(key);
    if (it == rec_.values.end()) return fallback;
    std::vector<double> out;
    for (const auto& v : it->second) {
      double x = 0.0;
      const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
      if (ec != std::errc() || ptr != v.data() + v.size())
        error(key, "'" + v + "' is not a number");
      out.push_back(x);
    }
    return out;
  }

  std::vector<std::size_t> counts(const std::string& key,
                                  std::vector<std::size_t> fallback) const {
    auto it = rec_.values.find(key);
    if (it == rec_.values.end()) return fallback;
    std::vector<std::size_t> out;
    for (const auto& v : it->second) {
      std::size_t x = 0;
      const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
      if (ec != std::errc() || ptr != v.data() + v.size())
        error(key, "'" + v + "' is not a nonnegative integer");
      out.push_back(x);
    }
    return out;
  }

  bool has(const std::string& key) const { return rec_.values.count(key) > 0; }

 private:
  const Record& rec_;
  const std::string& source_;
};

const std::vector<std::string> kCommonKeys = {"kind",  "method",     "base",  "gamma",
                                              "alpha", "rbar",       "delta", "delta_mode"};
const std::vector<std::string> kSubsetKeys = {"M", "m", "m1", "pi", "sizes"};
const std::vector<std::string> kFieldKeys = {"side", "theta", "block", "effect_fraction"};

bool contains(const std::vector<std::string>& keys, const std::string& k) {
  return std::find(keys.begin(), keys.end(), k) != keys.end();
}

std::vector<Record> read_records(std::istream& in, const std::string& source) {
  std::vector<Record> records;
  Record current;
  bool open = false;
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) {
      // A blank line ends a record; comment-only lines do not.
      if (trim(raw).empty() && open) {
        records.push_back(std::move(current));
        current = Record{};
        open = false;
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      fail(ErrorCode::Parse, source + ":" + std::to_string(lineno) + ": expected key=value, got '" +
                                 line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      fail(ErrorCode::Parse, source + ":" + std::to_string(lineno) + ": empty key");
    if (!open) {
      current.line = lineno;
      open = true;
    }
    if (current.values.count(key))
      fail(ErrorCode::Parse,
           source + ":" + std::to_string(lineno) + ": field '" + key + "': duplicate key");
    if (!value.empty() && value.back() == ',')
      fail(ErrorCode::Parse,
           source + ":" + std::to_string(lineno) + ": field '" + key + "': empty list item");
    std::vector<std::string> items;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (item.empty())
        fail(ErrorCode::Parse,
             source + ":" + std::to_string(lineno) + ": field '" + key + "': empty list item");
      items.push_back(item);
    }
    if (items.empty())
      fail(ErrorCode::Parse,
           source + ":" + std::to_string(lineno) + ": field '" + key + "': missing value");
    current.values[key] = std::move(items);
    current.key_lines[key] = lineno;
  }
  if (open) records.push_back(std::move(current));
  return records;
}

std::string method_key(const MethodSpec& s) {
  return s.label() + "|" + format_number(s.alpha) + "|" + format_number(s.rbar) + "|" +
         to_string(s.delta);
}

std::vector<MethodSpec> expand_methods(const RecordReader& r) {
  std::vector<MethodSpec> out;
  const auto families = r.strings("method", {"awa", "rmnc", "rmwc", "rmio"});
  const auto bases = r.strings("base", {"bonf"});
  const auto gammas = r.reals("gamma", {0.5});
  const auto alphas = r.reals("alpha", {0.05});
  const auto rbars = r.reals("rbar", {0.5});
  const auto deltas = r.strings("delta_mode", {"est"});
  std::vector<std::string> seen;
  for (const auto& fname : families) {
    MethodFamily family;
    try {
      family = parse_family(fname);
    } catch (const Error& e) {
      r.error("method", e.what());
    }
    for (const auto& bname : bases) {
      for (double gamma : gammas) {
        BaseSpec base;
        try {
          base = parse_base(bname, gamma);
        } catch (const Error& e) {
          r.error(bname == "ssu" ? "gamma" : "base", e.what());
        }
        for (double alpha : alphas) {
          if (!(alpha > 0.0 && alpha < 1.0)) r.error("alpha", "must lie in (0, 1)");
          for (double rbar : rbars) {
            for (const auto& dname : deltas) {
              auto spec = MethodSpec::make(family, base, alpha);
              if (family == MethodFamily::Rmio) spec.rbar = rbar;
              try {
                spec.delta = parse_delta_source(dname);
              } catch (const Error& e) {
                r.error("delta_mode", e.what());
              }
              if (spec.delta == DeltaSource::Fixed)
                r.error("delta_mode", "fixed calibration delta is not supported in grids");
              try {
                spec.validate();
              } catch (const Error& e) {
                r.error(family == MethodFamily::Rmio ? "rbar" : "method", e.what());
              }
              const auto key = method_key(spec);
              if (contains(seen, key)) continue;
              seen.push_back(key);
              out.push_back(spec);
            }
          }
        }
      }
    }
  }
  return out;
}

std::vector<Scenario> expand_scenarios(const RecordReader& r, const std::string& kind) {
  std::vector<Scenario> out;
  const auto deltas = r.reals("delta", {1.5});
  if (kind == "subset") {
    for (auto M : r.counts("M", {1000}))
      for (auto m : r.counts("m", {20}))
        for (auto m1 : r.counts("m1", {5}))
          for (double pi : r.reals("pi", {0.5}))
            for (double delta : deltas)
              for (const auto& sz : r.strings("sizes", {"random"})) {
                SubsetScenario sc{M, m, m1, pi, delta, SizeMode::Random};
                try {
                  sc.size_mode = parse_size_mode(sz);
                } catch (const Error& e) {
                  r.error("sizes", e.what());
                }
                try {
                  sc.validate();
                } catch (const Error& e) {
                  r.error("M", e.what());
                }
                out.emplace_back(sc);
              }
  } else {
    for (auto side : r.counts("side", {64}))
      for (double theta : r.reals("theta", {2.0}))
        for (auto block : r.counts("block", {4}))
          for (double frac : r.reals("effect_fraction", {0.05}))
            for (double delta : deltas) {
              FieldScenario sc{side, theta, frac, delta, block};
              try {
                sc.validate();
              } catch (const Error& e) {
                r.error("side", e.what());
              }
              out.emplace_back(sc);
            }
  }
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::size_t ExperimentGrid::rows() const {
  std::size_t n = 0;
  for (const auto& c : cells) n += c.methods.size();
  return n;
}

std::string scenario_key(const Scenario& scenario) {
  if (const auto* s = std::get_if<SubsetScenario>(&scenario)) {
    return "subset M=" + std::to_string(s->M) + " m=" + std::to_string(s->m) +
           " m1=" + std::to_string(s->m1) + " pi=" + format_number(s->pi) +
           " delta=" + format_number(s->delta) + " sizes=" + to_string(s->size_mode);
  }
  const auto& f = std::get<FieldScenario>(scenario);
  return "field side=" + std::to_string(f.side) + " theta=" + format_number(f.theta) +
         " block=" + std::to_string(f.block) +
         " effect_fraction=" + format_number(f.effect_fraction) +
         " delta=" + format_number(f.delta);
}

ExperimentGrid parse_grid(std::istream& in, const std::string& source) {
  ExperimentGrid grid;
  std::map<std::string, std::size_t> index;
  for (const auto& rec : read_records(in, source)) {
    RecordReader reader(rec, source);
    const auto kinds = reader.strings("kind", {"subset"});
    if (kinds.size() != 1) reader.error("kind", "exactly one kind per record");
    const std::string kind = kinds.front();
    if (kind != "subset" && kind != "field")
      reader.error("kind", "unknown kind '" + kind + "' (expected subset|field)");
    const auto& own = kind == "subset" ? kSubsetKeys : kFieldKeys;
    for (const auto& [key, _] : rec.values) {
      if (contains(kCommonKeys, key) || contains(own, key)) continue;
      if (contains(kSubsetKeys, key) || contains(kFieldKeys, key))
        reader.error(key, "does not apply to kind=" + kind);
      reader.error(key, "unknown field");
    }
    const auto methods = expand_methods(reader);
    for (auto& scenario : expand_scenarios(reader, kind)) {
      const auto key = scenario_key(scenario);
      auto [it, inserted] = index.try_emplace(key, grid.cells.size());
      if (inserted) grid.cells.push_back({scenario, key, {}, {}});
      auto& cell = grid.cells[it->second];
      cell.lines.push_back(rec.line);
      for (const auto& m : methods) {
        bool dup = false;
        for (const auto& existing : cell.methods) dup = dup || method_key(existing) == method_key(m);
        if (!dup) cell.methods.push_back(m);
      }
    }
  }
  require(!grid.cells.empty(), ErrorCode::Parse, source + ": grid has no records");
  return grid;
}

ExperimentGrid load_grid(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::Io, "cannot open grid file '" + path + "'");
  return parse_grid(in, path);
}

std::vector<ResultRow> run_experiment_grid(const ExperimentGrid& grid, std::size_t replicates,
                                           std::uint64_t seed,
                                           const EvaluationOptions& options) {
  require(!grid.cells.empty(), ErrorCode::InvalidArgument, "empty experiment grid");
  std::vector<ResultRow> rows;
  for (const auto& cell : grid.cells) {
    const auto records = evaluate_methods(cell.methods, cell.scenario, replicates, seed,
                                          fnv1a64(cell.scenario_key), options);
    for (std::size_t j = 0; j < cell.methods.size(); ++j) {
      ResultRow row{cell.methods[j], cell.scenario, records[j], seed, {}};
      std::vector<std::string> notes;
      if (row.spec.family != MethodFamily::Awa && !row.metrics.power_ratio_vs_awa) {
        bool has_awa = false;
        for (const auto& m : cell.methods)
          has_awa = has_awa || (m.family == MethodFamily::Awa && m.base == row.spec.base &&
                                m.alpha == row.spec.alpha);
        notes.push_back(has_awa ? "AWA power is zero; ratio undefined"
                                : "no AWA companion cell; ratio omitted");
      }
      if (row.metrics.vacuous_replicates)
        notes.push_back(std::to_string(row.metrics.vacuous_replicates) + " vacuous replicates");
      for (std::size_t k = 0; k < notes.size(); ++k) row.note += (k ? "; " : "") + notes[k];
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

std::vector<std::string> results_csv_header() {
  return {"method", "base",  "alpha", "rbar",      "kind",  "M",     "m",
          "m1",     "pi",    "delta", "sizes",     "side",  "theta", "block",
          "effect_fraction", "avg_power", "power_se", "e_v", "e_v_se", "fdr", "fdr_se",
          "power_ratio_vs_awa", "replicates", "seed", "fwer", "fwer_se", "power_ratio_se",
          "power_replicates", "mean_r", "certificate_violations", "delta_mode", "note"};
}

void write_results_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
  const auto header = results_csv_header();
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << '\n';
  for (const auto& row : rows) {
    std::vector<std::string> f;
    f.push_back(to_string(row.spec.family));
    f.push_back(to_string(row.spec.base));
    f.push_back(format_number(row.spec.alpha));
    f.push_back(format_number(row.spec.rbar));
    if (const auto* s = std::get_if<SubsetScenario>(&row.scenario)) {
      f.insert(f.end(), {"subset", std::to_string(s->M), std::to_string(s->m),
                         std::to_string(s->m1), format_number(s->pi), format_number(s->delta),
                         to_string(s->size_mode), "", "", "", ""});
    } else {
      const auto& fs = std::get<FieldScenario>(row.scenario);
      const std::size_t per_side = fs.side / fs.block;
      f.insert(f.end(), {"field", std::to_string(fs.atoms()), std::to_string(per_side * per_side),
                         "", "", format_number(fs.delta), "", std::to_string(fs.side),
                         format_number(fs.theta), std::to_string(fs.block),
                         format_number(fs.effect_fraction)});
    }
    const auto& mr = row.metrics;
    f.push_back(format_number(mr.avg_power));
    f.push_back(format_number(mr.power_se));
    f.push_back(format_number(mr.e_v));
    f.push_back(format_number(mr.e_v_se));
    f.push_back(format_number(mr.fdr));
    f.push_back(format_number(mr.fdr_se));
    f.push_back(mr.power_ratio_vs_awa ? format_number(*mr.power_ratio_vs_awa) : "");
    f.push_back(std::to_string(mr.replicates));
    f.push_back(std::to_string(row.seed));
    f.push_back(format_number(mr.fwer));
    f.push_back(format_number(mr.fwer_se));
    f.push_back(mr.ratio_se ? format_number(*mr.ratio_se) : "");
    f.push_back(std::to_string(mr.power_replicates));
    f.push_back(format_number(mr.mean_r));
    f.push_back(std::to_string(mr.certificate_violations));
    f.push_back(row.spec.family == MethodFamily::Awa ? "" : to_string(row.spec.delta));
    f.push_back(row.note);
    for (std::size_t i = 0; i < f.size(); ++i) out << (i ? "," : "") << csv_field(f[i]);
    out << '\n';
  }
}

}  // namespace relaxmt
