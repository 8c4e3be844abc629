#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <vector>

#include "relaxmt/error.hpp"
#include "relaxmt/procedures.hpp"

using namespace relaxmt;

namespace {

using Admissible = std::function<bool(const std::vector<double>& sorted, std::size_t k)>;

// Tries every "reject the k smallest" cutoff and keeps the largest admissible k.
Decisions brute_force(const std::vector<double>& p, const Admissible& ok) {
  std::vector<std::size_t> idx(p.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return p[a] < p[b]; });
  std::vector<double> sorted;
  for (auto i : idx) sorted.push_back(p[i]);
  std::size_t best = 0;
  for (std::size_t k = 0; k <= p.size(); ++k)
    if (ok(sorted, k)) best = k;
  Decisions d(p.size(), false);
  for (std::size_t i = 0; i < best; ++i) d[idx[i]] = true;
  return d;
}

Admissible step_up_rule(double alpha, std::function<double(std::size_t)> g) {
  return [=](const std::vector<double>& s, std::size_t k) {
    return k == 0 || s[k - 1] <= alpha * g(k) / static_cast<double>(s.size());
  };
}

Admissible step_down_holm(double alpha) {
  return [=](const std::vector<double>& s, std::size_t k) {
    for (std::size_t i = 1; i <= k; ++i)
      if (s[i - 1] > alpha / static_cast<double>(s.size() - i + 1)) return false;
    return true;
  };
}

Admissible single_step(double cut) {
  return [=](const std::vector<double>& s, std::size_t k) { return k == 0 || s[k - 1] <= cut; };
}

std::vector<double> random_p(std::mt19937_64& rng, std::size_t m) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> p(m);
  const bool coarse = rng() % 3 == 0;  // ties
  for (auto& v : p) {
    v = std::pow(u(rng), 3.0) * 0.2;
    if (coarse) v = std::round(v * 200.0) / 2000.0;
  }
  return p;
}

bool subset_of(const Decisions& a, const Decisions& b) {
  for (std::size_t j = 0; j < a.size(); ++j)
    if (a[j] && !b[j]) return false;
  return true;
}

std::vector<std::function<Decisions(const std::vector<double>&)>> all_procedures(double alpha) {
  return {
      [=](const std::vector<double>& p) { return nmcp(p, alpha); },
      [=](const std::vector<double>& p) { return bonferroni(p, alpha); },
      [=](const std::vector<double>& p) { return holm(p, alpha); },
      [=](const std::vector<double>& p) { return linear_step_up(p, alpha); },
      [=](const std::vector<double>& p) { return scaled_step_up(p, alpha, ScalingFunction::power(0.5)); },
  };
}

}  // namespace

TEST_CASE("single-step examples") {
  CHECK(nmcp(std::vector<double>{0.04, 0.06}, 0.05) == Decisions{true, false});
  CHECK(nmcp(std::vector<double>{1.0, 1.0, 1.0}, 0.05) == Decisions{false, false, false});
  CHECK(bonferroni(std::vector<double>{0.004, 0.2}, 0.05) == Decisions{true, false});
  CHECK(bonferroni(std::vector<double>{0.025, 0.0250001}, 0.05) == Decisions{true, false});
}

TEST_CASE("step procedure examples") {
  CHECK(holm(std::vector<double>{0.01, 0.02, 0.9}, 0.05) == Decisions{true, true, false});
  const std::vector<double> p{0.001, 0.011, 0.02, 0.9};
  CHECK(linear_step_up(p, 0.05) == Decisions{true, true, true, false});
  CHECK(linear_step_up(std::vector<double>{0.2, 0.06, 0.5}, 0.05) == Decisions{false, false, false});
  CHECK(scaled_step_up(p, 0.05, ScalingFunction::power(1.0)) == linear_step_up(p, 0.05));
  CHECK(scaled_step_up(p, 0.05, ScalingFunction::tabulated({1, 1, 1, 1})) == bonferroni(p, 0.05));
  CHECK(scaled_step_up(p, 0.05, ScalingFunction::power(0.5)) == Decisions{true, true, true, false});
  // Step-up passes over a failing middle rank.
  CHECK(linear_step_up(std::vector<double>{0.03, 0.0374, 0.001, 0.9}, 0.05) == Decisions{true, true, true, false});
}

TEST_CASE("scaling function") {
  const auto g = ScalingFunction::power(0.5);
  CHECK(g(4) == doctest::Approx(2.0));
  CHECK_THROWS_AS(ScalingFunction::power(0.0), Error);
  CHECK_THROWS_AS(ScalingFunction::tabulated({1.0, 0.5}), Error);
  CHECK_THROWS_AS(ScalingFunction::tabulated({0.0, 1.0}), Error);
  const auto t = ScalingFunction::tabulated({1.0, 2.0});
  CHECK_THROWS_AS(t.validate(3), Error);
  CHECK_THROWS_AS(scaled_step_up(std::vector<double>{0.1, 0.2, 0.3}, 0.05, t), Error);
}

TEST_CASE("input validation") {
  CHECK_THROWS_AS(bonferroni(std::vector<double>{}, 0.05), Error);
  CHECK_THROWS_AS(bonferroni(std::vector<double>{1.2}, 0.05), Error);
  CHECK_THROWS_AS(linear_step_up(std::vector<double>{0.1}, 0.0), Error);
  CHECK_THROWS_AS(holm(std::vector<double>{std::nan("")}, 0.05), Error);
}

TEST_CASE("brute-force oracle equivalence") {
  std::mt19937_64 rng(2024);
  const double alpha = 0.05;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto m = 1 + rng() % 8;
    const auto p = random_p(rng, m);
    const auto md = static_cast<double>(m);
    REQUIRE(bonferroni(p, alpha) == brute_force(p, single_step(alpha / md)));
    REQUIRE(nmcp(p, alpha) == brute_force(p, single_step(alpha)));
    REQUIRE(holm(p, alpha) == brute_force(p, step_down_holm(alpha)));
    REQUIRE(linear_step_up(p, alpha) ==
            brute_force(p, step_up_rule(alpha, [](std::size_t k) { return static_cast<double>(k); })));
    REQUIRE(scaled_step_up(p, alpha, ScalingFunction::power(0.5)) ==
            brute_force(p, step_up_rule(alpha, [](std::size_t k) { return std::sqrt(static_cast<double>(k)); })));
  }
}

TEST_CASE("monotonicity under a decreased p-value") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    const auto m = 1 + rng() % 12;
    auto p = random_p(rng, m);
    auto q = p;
    q[rng() % m] *= u(rng);
    for (const auto& proc : all_procedures(0.05)) REQUIRE(subset_of(proc(p), proc(q)));
  }
}

TEST_CASE("nesting") {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto p = random_p(rng, 1 + rng() % 15);
    const auto b = bonferroni(p, 0.05);
    const auto h = holm(p, 0.05);
    REQUIRE(subset_of(b, h));
    REQUIRE(subset_of(b, linear_step_up(p, 0.05)));
    REQUIRE(subset_of(b, scaled_step_up(p, 0.05, ScalingFunction::power(0.5))));
    REQUIRE(subset_of(h, linear_step_up(p, 0.05)));
    REQUIRE(subset_of(b, nmcp(p, 0.05)));
  }
}

TEST_CASE("permutation equivariance") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 300; ++trial) {
    const auto m = 1 + rng() % 10;
    const auto p = random_p(rng, m);
    std::vector<std::size_t> perm(m);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<double> q(m);
    for (std::size_t j = 0; j < m; ++j) q[j] = p[perm[j]];
    for (const auto& proc : all_procedures(0.05)) {
      const auto dp = proc(p);
      const auto dq = proc(q);
      for (std::size_t j = 0; j < m; ++j) REQUIRE(dq[j] == dp[perm[j]]);
    }
  }
}

TEST_CASE("rank order breaks ties by index") {
  const auto order = rank_order(std::vector<double>{0.3, 0.1, 0.3, 0.1});
  CHECK(order == std::vector<std::size_t>{1, 3, 0, 2});
}

TEST_CASE("apply_weights") {
  const std::vector<double> p{0.02, 0.5, 0.9};
  CHECK(apply_weights(p, std::vector<double>{1, 1, 1}).p == p);
  CHECK(apply_weights(std::vector<double>{0.02}, std::vector<double>{2}).p[0] == doctest::Approx(0.01));
  CHECK(apply_weights(std::vector<double>{0.0}, std::vector<double>{0}).p[0] == 1.0);
  CHECK(apply_weights(std::vector<double>{0.6}, std::vector<double>{0.5}).p[0] == 1.0);
  const auto w = apply_weights(p, std::vector<double>{3, 0, 0});
  CHECK(w.mean_weight == doctest::Approx(1.0));
  CHECK(w.control_ok);
  CHECK_FALSE(apply_weights(p, std::vector<double>{3, 1, 0}).control_ok);
  CHECK_THROWS_AS(apply_weights(p, std::vector<double>{1, 1}), Error);
  CHECK_THROWS_AS(apply_weights(p, std::vector<double>{1, -1, 1}), Error);
}

TEST_CASE("base procedure dispatch") {
  const std::vector<double> p{0.001, 0.011, 0.02, 0.9};
  CHECK(apply_base(BaseSpec::bonferroni(), p, 0.05) == bonferroni(p, 0.05));
  CHECK(apply_base(BaseSpec::lsu(), p, 0.05) == linear_step_up(p, 0.05));
  CHECK(apply_base(BaseSpec::scaled(0.5), p, 0.05) == scaled_step_up(p, 0.05, ScalingFunction::power(0.5)));
  CHECK(parse_base("lsu") == BaseSpec::lsu());
  CHECK(parse_base("ssu", 0.7) == BaseSpec::scaled(0.7));
  CHECK(to_string(parse_base("bonf")) == "bonf");
  CHECK_THROWS_AS(parse_base("hochberg"), Error);
  CHECK(count_rejections(Decisions{true, false, true}) == 2);
}

TEST_CASE("NMCP expected rejections under the complete null") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int reps = 400;
  double sum = 0.0, sum2 = 0.0;
  std::vector<double> p(1000);
  for (int r = 0; r < reps; ++r) {
    for (auto& v : p) v = u(rng);
    const double k = static_cast<double>(count_rejections(nmcp(p, 0.05)));
    sum += k;
    sum2 += k * k;
  }
  const double mean = sum / reps;
  const double se = std::sqrt((sum2 / reps - mean * mean) / reps);
  CHECK(std::fabs(mean - 50.0) < 3.0 * se);
}

TEST_CASE("Bonferroni FWER under the complete null") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int reps = 10000;
  int hits = 0;
  std::vector<double> p(100);
  for (int r = 0; r < reps; ++r) {
    for (auto& v : p) v = u(rng);
    if (count_rejections(bonferroni(p, 0.05)) > 0) ++hits;
  }
  const double fwer = static_cast<double>(hits) / reps;
  CHECK(fwer <= 0.05 + 3.0 * std::sqrt(0.05 * 0.95 / reps));
}

TEST_CASE("weighted Bonferroni PFER under the complete null") {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::size_t m = 40;
  std::vector<double> w(m);
  for (std::size_t j = 0; j < m; ++j) w[j] = j < 10 ? 3.4 : (j < 20 ? 0.6 : 0.0);
  REQUIRE(apply_weights(std::vector<double>(m, 0.5), w).control_ok);
  const int reps = 10000;
  double sum = 0.0, sum2 = 0.0;
  std::vector<double> p(m);
  for (int r = 0; r < reps; ++r) {
    for (auto& v : p) v = u(rng);
    const double v = static_cast<double>(count_rejections(bonferroni(apply_weights(p, w).p, 0.05)));
    sum += v;
    sum2 += v * v;
  }
  const double mean = sum / reps;
  const double se = std::sqrt((sum2 / reps - mean * mean) / reps);
  CHECK(mean <= 0.05 + 3.0 * se);
}
