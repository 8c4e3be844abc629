// Writes the synthetic connectome-like dataset shipped in data/synthetic.
//
// 24 regions in 4 networks of 6; atoms are the 276 region pairs. Subsets are
// network pairs (10) or, in the coarse decomposition, the network of the
// lower-numbered region (4). Each subject adds a shared N(0, 0.6^2) term
// per network pair, so edges in the same subset are positively correlated.
// Group X is shifted on part of N1-N1 and N2-N3.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <sstream>
#include <cmath>
#include <map>
#include <random>
#include <string>

#include "relaxmt/io.hpp"
#include "relaxmt/parallel.hpp"

using namespace relaxmt;

int main(int argc, char** argv) try {
  CLI::App app{"Generate the synthetic connectome-like dataset"};
  std::string out = "data/synthetic";
  std::uint64_t seed = 2024;
  std::size_t subjects = 20;
  app.add_option("--out", out, "Output directory");
  app.add_option("--seed", seed, "Seed");
  app.add_option("--subjects", subjects, "Subjects per group");
  CLI11_PARSE(app, argc, argv);

  constexpr int kRegions = 24, kNetworks = 4;
  auto network = [](int region) { return region / (kRegions / kNetworks); };
  auto region_name = [](int r) {
    char buf[8];
    std::snprintf(buf, sizeof buf, "R%02d", r + 1);
    return std::string(buf);
  };

  std::vector<std::string> atom_ids;
  std::vector<std::string> pair_subset, coarse_subset;
  std::vector<double> shift;
  Rng design(stream_seed(seed, 1, 0));
  std::bernoulli_distribution pick_a(0.6), pick_b(0.4);
  for (int a = 0; a < kRegions; ++a) {
    for (int b = a + 1; b < kRegions; ++b) {
      atom_ids.push_back("e_" + region_name(a) + "_" + region_name(b));
      const int na = network(a), nb = network(b);
      pair_subset.push_back("N" + std::to_string(na + 1) + "-N" + std::to_string(nb + 1));
      coarse_subset.push_back("N" + std::to_string(na + 1));
      double d = 0.0;
      if (na == 0 && nb == 0 && pick_a(design)) d = 1.2;
      if (na == 1 && nb == 2 && pick_b(design)) d = 0.9;
      shift.push_back(d);
    }
  }

  DataMatrix data;
  data.atom_ids = atom_ids;
  Rng rng(stream_seed(seed, 2, 0));
  std::normal_distribution<double> normal;
  for (int group = 0; group < 2; ++group) {
    for (std::size_t subject = 0; subject < subjects; ++subject) {
      std::map<std::string, double> shared;
      std::vector<double> row(atom_ids.size());
      for (std::size_t j = 0; j < atom_ids.size(); ++j) {
        auto [it, inserted] = shared.try_emplace(pair_subset[j], 0.0);
        if (inserted) it->second = 0.6 * normal(rng);
        row[j] = it->second + normal(rng) + (group == 0 ? shift[j] : 0.0);
        row[j] = std::round(row[j] * 1e6) / 1e6;
      }
      (group == 0 ? data.group_x : data.group_y).push_back(std::move(row));
    }
  }

  std::filesystem::create_directories(out);
  std::ostringstream d;
  write_data_csv(d, data);
  write_file(out + "/connectome_data.csv", d.str());
  auto write_decomp = [&](const std::string& name, const std::vector<std::string>& labels) {
    std::ostringstream f;
    f << "atom_id,subset_id\n";
    for (std::size_t j = 0; j < atom_ids.size(); ++j) f << atom_ids[j] << ',' << labels[j] << '\n';
    write_file(out + "/" + name, f.str());
  };
  write_decomp("decomposition_network_pairs.csv", pair_subset);
  write_decomp("decomposition_networks.csv", coarse_subset);
  std::ostringstream t;
  t << "atom_id,affected\n";
  for (std::size_t j = 0; j < atom_ids.size(); ++j)
    t << atom_ids[j] << ',' << (shift[j] > 0.0 ? 1 : 0) << '\n';
  write_file(out + "/truth.csv", t.str());
  return 0;
} catch (const std::exception& e) {
  std::fprintf(stderr, "error: %s\n", e.what());
  return 1;
}
