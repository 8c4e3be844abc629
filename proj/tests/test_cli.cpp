#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "relaxmt/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using relaxmt::read_file;
using relaxmt::split_csv_line;

namespace {

const std::string kSource = RELAXMT_SOURCE_DIR;
const std::string kCli = RELAXMT_CLI;

struct RunResult {
  int status = -1;
  std::string out;
  std::string err;
};

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("relaxmt_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

RunResult run(const std::string& args) {
  const auto dir = fs::temp_directory_path();
  const auto out = (dir / "relaxmt_cli_stdout.txt").string();
  const auto err = (dir / "relaxmt_cli_stderr.txt").string();
  const int raw = std::system((kCli + " " + args + " >" + out + " 2>" + err).c_str());
  RunResult r;
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  r.out = read_file(out);
  r.err = read_file(err);
  return r;
}

json load_json(const fs::path& p) { return json::parse(read_file(p.string())); }

std::string synth(const std::string& name) { return kSource + "/data/synthetic/" + name; }

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(read_file(p.string()));
  for (std::string line; std::getline(in, line);) rows.push_back(split_csv_line(line));
  return rows;
}

std::string joined(const json& ids) {
  std::string s;
  for (const auto& id : ids) s += (s.empty() ? "" : ";") + id.get<std::string>();
  return s;
}

}  // namespace

TEST_CASE("identical groups yield no rejections") {
  const auto dir = scratch("identical");
  std::ofstream data(dir / "data.csv");
  data << "group";
  for (int j = 0; j < 40; ++j) data << ",a" << j;
  data << '\n';
  for (const char* g : {"X", "Y"})
    for (int i = 0; i < 6; ++i) {
      data << g;
      for (int j = 0; j < 40; ++j) data << ',' << (i * 7 + j * 3) % 11;
      data << '\n';
    }
  data.close();
  std::ofstream dec(dir / "dec.csv");
  dec << "atom_id,subset_id\n";
  for (int j = 0; j < 40; ++j) dec << 'a' << j << ",s" << j / 10 << '\n';
  dec.close();
  for (const char* base : {"bonf", "lsu"}) {
    const auto r = run("analyze --data " + (dir / "data.csv").string() + " --decomposition " +
                       (dir / "dec.csv").string() + " --method awa,rmnc,rmwc,rmio --alpha 0.5 --base " +
                       base + " --out " + (dir / base).string());
    REQUIRE(r.status == 0);
    for (const auto& run : load_json(dir / base / "report.json")["result"]["runs"])
      CHECK(run["rejected"].empty());
  }
}

TEST_CASE("synthetic dataset matches the frozen rejection lists") {
  std::map<std::pair<std::string, std::string>, std::string> expected;
  const auto rows = read_csv(synth("expected_rejections.csv"));
  REQUIRE(rows.at(0) == std::vector<std::string>{"base", "run", "rejected"});
  for (std::size_t i = 1; i < rows.size(); ++i) expected[{rows[i][0], rows[i][1]}] = rows[i][2];

  const auto dir = scratch("synthetic");
  const std::string data = " --data " + synth("connectome_data.csv");
  const auto bonf = run("analyze" + data + " --decomposition " + synth("decomposition_network_pairs.csv") +
                        " --decomposition " + synth("decomposition_networks.csv") +
                        " --method awa,rmnc,rmwc,rmio --base bonf --alpha 0.05 --out " + (dir / "bonf").string());
  REQUIRE(bonf.status == 0);
  const auto lsu = run("analyze" + data + " --decomposition " + synth("decomposition_network_pairs.csv") +
                       " --method awa,rmnc,rmwc,rmio --base lsu --alpha 0.05 --out " + (dir / "lsu").string());
  REQUIRE(lsu.status == 0);

  std::size_t seen = 0;
  for (const char* base : {"bonf", "lsu"}) {
    const auto report = load_json(dir / base / "report.json");
    for (const auto& r : report["result"]["runs"]) {
      const auto label = r["label"].get<std::string>();
      INFO(base << " " << label);
      REQUIRE(expected.count({base, label}) == 1);
      CHECK(joined(r["rejected"]) == expected[{base, label}]);
      ++seen;
    }
  }
  CHECK(seen == expected.size());
}

TEST_CASE("pairwise intersections never exceed either count") {
  const auto dir = scratch("intersections");
  const auto r = run("analyze --data " + synth("connectome_data.csv") + " --decomposition " +
                     synth("decomposition_network_pairs.csv") +
                     " --method awa,rmnc,rmwc,rmio --base lsu --out " + dir.string());
  REQUIRE(r.status == 0);
  const auto rows = read_csv(dir / "summary.csv");
  REQUIRE(rows.at(0) == std::vector<std::string>{"run_a", "run_b", "common"});
  std::map<std::string, long> own;
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (rows[i][0] == rows[i][1]) own[rows[i][0]] = std::stol(rows[i][2]);
  CHECK(own.size() == 4);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const long c = std::stol(rows[i][2]);
    CHECK(c <= own.at(rows[i][0]));
    CHECK(c <= own.at(rows[i][1]));
  }
  const auto dec = read_csv(dir / "decisions.csv");
  CHECK(dec.at(0) == std::vector<std::string>{"atom_id", "z", "p", "awa", "rmnc", "rmwc", "rmio"});
  CHECK(dec.size() == 277);
}

TEST_CASE("calibrate is deterministic and validated") {
  const auto a = run("calibrate --m 20 --s 10 --alpha 0.05 --rule bonf --rbar 0 --delta inf");
  const auto b = run("calibrate --m 20 --s 10 --alpha 0.05 --rule bonf --rbar 0 --delta inf");
  REQUIRE(a.status == 0);
  CHECK(a.out == b.out);
  const auto res = json::parse(a.out);
  CHECK(std::fabs(res["r"].get<double>() - 10.0 / 9.0) < 1e-8);

  const auto one = json::parse(run("calibrate --m 20 --s 10 --rule bonf --rbar 1 --delta inf").out);
  CHECK(one["r"].get<double>() >= 1.0);

  const auto v = run("calibrate --m 20 --s 10 --validate --validate-replicates 100000 --seed 4");
  REQUIRE(v.status == 0);
  const auto val = json::parse(v.out)["validation"];
  CHECK(std::fabs(val["expected_fp"].get<double>() - 0.05) <= 3.0 * val["se"].get<double>());
  CHECK(val["within_3se"].get<bool>());

  const auto est = run("calibrate --m 20 --s 10 --delta est");
  CHECK(est.status != 0);
  CHECK(est.err.rfind("error: E_", 0) == 0);
  const auto ok = run("calibrate --m 20 --s 10 --delta est --delta-value 2");
  CHECK(ok.status == 0);
  CHECK(run("calibrate --m 20 --s 10 --rule lsu").status != 0);
}

TEST_CASE("reports are re-runnable from their echoed config") {
  const auto dir = scratch("rerun");
  const std::string base_args = "analyze --data " + synth("connectome_data.csv") + " --decomposition " +
                                synth("decomposition_network_pairs.csv") + " --method awa,rmwc --base lsu";
  REQUIRE(run(base_args + " --out " + (dir / "a").string()).status == 0);
  REQUIRE(run("analyze --config " + (dir / "a" / "report.json").string() + " --out " + (dir / "b").string()).status == 0);
  const auto ra = load_json(dir / "a" / "report.json");
  const auto rb = load_json(dir / "b" / "report.json");
  CHECK(ra["result"] == rb["result"]);
  CHECK(ra["inputs"] == rb["inputs"]);
  CHECK(read_file((dir / "a" / "decisions.csv").string()) == read_file((dir / "b" / "decisions.csv").string()));

  const std::string grid = kSource + "/data/grids/smoke.grid";
  REQUIRE(run("simulate --grid " + grid + " --replicates 2 --seed 5 --out " + (dir / "s1").string()).status == 0);
  REQUIRE(run("simulate --config " + (dir / "s1" / "report.json").string() + " --out " + (dir / "s2").string()).status == 0);
  CHECK(load_json(dir / "s1" / "report.json")["result"] == load_json(dir / "s2" / "report.json")["result"]);
  CHECK(read_file((dir / "s1" / "metrics.csv").string()) == read_file((dir / "s2" / "metrics.csv").string()));

  REQUIRE(run("calibrate --m 12 --s 6 --rule nmcp --rbar 0.5 --delta 1.5 --out " + (dir / "c1").string()).status == 0);
  REQUIRE(run("calibrate --config " + (dir / "c1" / "report.json").string() + " --out " + (dir / "c2").string()).status == 0);
  CHECK(load_json(dir / "c1" / "report.json")["result"] == load_json(dir / "c2" / "report.json")["result"]);
}

TEST_CASE("flags override config values") {
  const auto dir = scratch("precedence");
  std::ofstream(dir / "cfg.json") << R"({"m": 30, "s": 5, "alpha": 0.1})";
  const auto r = run("calibrate --config " + (dir / "cfg.json").string() + " --s 8 --print-config");
  REQUIRE(r.status == 0);
  const auto cfg = json::parse(r.out);
  CHECK(cfg["m"] == 30);
  CHECK(cfg["s"] == 8);
  CHECK(cfg["alpha"] == 0.1);
  CHECK(cfg["rule"] == "bonf");
  std::ofstream(dir / "bad.json") << R"({"m": 30, "colour": 1})";
  CHECK(run("calibrate --config " + (dir / "bad.json").string()).status != 0);
}

TEST_CASE("simulate smoke run writes well-formed output") {
  const auto dir = scratch("smoke");
  const std::string grid = " --grid " + kSource + "/data/grids/smoke.grid";
  const auto r = run("simulate" + grid + " --replicates 1 --seed 1 --out " + dir.string());
  REQUIRE(r.status == 0);
  const auto rows = read_csv(dir / "metrics.csv");
  REQUIRE(rows.size() == 7);
  for (const auto& row : rows) CHECK(row.size() == rows[0].size());

  const auto p = run("simulate" + grid + " --replicates 10 --seed 1 --plots --out " + (dir / "plots").string());
  REQUIRE(p.status == 0);
  CHECK(fs::exists(dir / "plots" / "panel_001.svg"));
  CHECK(read_file((dir / "plots" / "panel_001.svg").string()).rfind("<svg", 0) == 0);
}

TEST_CASE("errors print a single machine-readable line") {
  const auto dir = scratch("errors");
  std::ofstream(dir / "data.csv") << "group,a,b\nX,1,2\nX,2,1\nY,0,1\nY,1,1\n";
  std::ofstream(dir / "dec.csv") << "atom_id,subset_id\na,1\nc,1\n";
  const std::vector<std::string> cases{
      "analyze --data /nonexistent.csv --decomposition /nonexistent.csv --out " + dir.string(),
      "analyze --data " + (dir / "data.csv").string() + " --decomposition " + (dir / "dec.csv").string() +
          " --out " + (dir / "o").string(),
      "analyze --data " + (dir / "data.csv").string() + " --decomposition " + (dir / "dec.csv").string() +
          " --method nbs --out " + (dir / "o").string(),
      "simulate --grid /nonexistent.grid --out " + dir.string(),
      "calibrate --m 20 --s 10 --alpha 2",
      "calibrate --m 0 --s 10",
      "frobnicate",
  };
  for (const auto& args : cases) {
    INFO(args);
    const auto r = run(args);
    CHECK(r.status != 0);
    CHECK(r.err.rfind("error: E_", 0) == 0);
    CHECK(std::count(r.err.begin(), r.err.end(), '\n') == 1);
  }
  const auto mismatch = run(cases[1]);
  CHECK(mismatch.err.find("E_SCHEMA") != std::string::npos);
  CHECK(mismatch.err.find("b") != std::string::npos);
  CHECK(mismatch.err.find("c") != std::string::npos);
}
