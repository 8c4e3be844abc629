#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "relaxmt/error.hpp"
#include "relaxmt/field.hpp"
#include "relaxmt/simulation.hpp"

using namespace relaxmt;

namespace {

struct FieldMoments {
  std::vector<double> variance;  // per pixel
  double lag_corr[3] = {0, 0, 0};
};

FieldMoments field_moments(const FieldSampler& sampler, std::size_t fields, std::uint64_t seed) {
  const std::size_t n = sampler.side();
  const std::size_t lags[3] = {1, 2, 5};
  std::vector<double> sum(n * n, 0.0), sum2(n * n, 0.0);
  double cross[3] = {0, 0, 0};
  double pairs[3] = {0, 0, 0};
  Rng rng(seed);
  for (std::size_t f = 0; f < fields; ++f) {
    const auto x = sampler.sample(rng);
    for (std::size_t i = 0; i < n * n; ++i) {
      sum[i] += x[i];
      sum2[i] += x[i] * x[i];
    }
    for (int l = 0; l < 3; ++l)
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c + lags[l] < n; ++c) {
          cross[l] += x[r * n + c] * x[r * n + c + lags[l]] + x[c * n + r] * x[(c + lags[l]) * n + r];
          pairs[l] += 2;
        }
  }
  FieldMoments out;
  const double k = static_cast<double>(fields);
  for (std::size_t i = 0; i < n * n; ++i) out.variance.push_back((sum2[i] - sum[i] * sum[i] / k) / (k - 1));
  // The field has known zero mean and unit variance, so E[x x'] is the correlation.
  for (int l = 0; l < 3; ++l) out.lag_corr[l] = cross[l] / pairs[l];
  return out;
}

double two_sample_ks(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= v) ++i;
    while (j < b.size() && b[j] <= v) ++j;
    d = std::max(d, std::fabs(double(i) / a.size() - double(j) / b.size()));
  }
  return d;
}

std::vector<double> pooled(const FieldSampler& s, std::size_t fields, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> out;
  for (std::size_t f = 0; f < fields; ++f) {
    const auto x = s.sample(rng);
    out.insert(out.end(), x.begin(), x.end());
  }
  return out;
}

}  // namespace

TEST_CASE("exponential covariance") {
  CHECK(exponential_covariance(0.0, 2.0) == 1.0);
  CHECK(exponential_covariance(2.0, 2.0) == doctest::Approx(std::exp(-1.0)));
}

TEST_CASE("sampler setup") {
  const FieldSampler fft(32, 2.0);
  CHECK(fft.method() == FieldMethod::CirculantFft);
  CHECK(fft.embedding_side() >= 64);
  CHECK(fft.side() == 32);
  const FieldSampler dense(8, 2.0, FieldMethod::DenseCholesky);
  CHECK(dense.method() == FieldMethod::DenseCholesky);
  CHECK(dense.embedding_side() == 0);
  CHECK_THROWS_AS(FieldSampler(0, 2.0), Error);
  CHECK_THROWS_AS(FieldSampler(8, 0.0), Error);
  // Long-range correlation on a small grid may need a larger torus or the dense path.
  const FieldSampler wide(8, 40.0);
  if (wide.method() == FieldMethod::DenseCholesky) CHECK_FALSE(wide.warnings().empty());
  Rng rng(1);
  CHECK(wide.sample(rng).size() == 64);
}

TEST_CASE("sampling is deterministic per seed") {
  const FieldSampler s(16, 3.0);
  Rng a(9), b(9);
  CHECK(s.sample(a) == s.sample(b));
  Rng c(9);
  CHECK(gen_correlated_field(16, 3.0, c) == s.sample(b = Rng(9)));
}

TEST_CASE("FFT field covariance matches exp(-D/theta)") {
  for (double theta : {2.0, 5.0}) {
    const FieldSampler s(32, theta);
    const auto mom = field_moments(s, 500, 100 + static_cast<std::uint64_t>(theta));
    double mean_var = 0.0;
    for (double v : mom.variance) mean_var += v;
    mean_var /= static_cast<double>(mom.variance.size());
    INFO("theta " << theta);
    CHECK(std::fabs(mean_var - 1.0) < 0.15);
    // Sample variances over 500 fields have SD ~0.063, so about 2% of pixels fall outside 0.15.
    const auto inside = std::count_if(mom.variance.begin(), mom.variance.end(),
                                      [](double v) { return std::fabs(v - 1.0) < 0.15; });
    CHECK(static_cast<double>(inside) / static_cast<double>(mom.variance.size()) > 0.95);
    const double lags[3] = {1, 2, 5};
    for (int l = 0; l < 3; ++l) CHECK(std::fabs(mom.lag_corr[l] - std::exp(-lags[l] / theta)) < 0.05);
  }
}

TEST_CASE("dense factorization matches the same covariance") {
  const FieldSampler s(12, 2.0, FieldMethod::DenseCholesky);
  const auto mom = field_moments(s, 1500, 7);
  const double lags[3] = {1, 2, 5};
  for (int l = 0; l < 3; ++l) CHECK(std::fabs(mom.lag_corr[l] - std::exp(-lags[l] / 2.0)) < 0.05);
}

TEST_CASE("FFT and dense paths agree in distribution") {
  const FieldSampler fft(16, 2.0);
  const FieldSampler dense(16, 2.0, FieldMethod::DenseCholesky);
  CHECK(two_sample_ks(pooled(fft, 1500, 3), pooled(dense, 1500, 4)) < 0.02);
}

TEST_CASE("plant_effect") {
  Rng rng(5);
  const auto field = gen_correlated_field(16, 2.0, rng);
  SUBCASE("top pixels are marked") {
    const auto p = plant_effect(field, 0.1, 2.0, rng);
    CHECK(p.truth.affected() == 26);
    double min_in = 1e300, max_out = -1e300;
    for (std::size_t i = 0; i < field.size(); ++i)
      (p.truth.h[i] ? min_in : max_out) = p.truth.h[i] ? std::min(min_in, field[i]) : std::max(max_out, field[i]);
    CHECK(min_in >= max_out);
  }
  SUBCASE("nothing planted after rounding") {
    const auto p = plant_effect(field, 0.001, 2.0, rng);
    CHECK(p.truth.affected() == 0);
  }
  SUBCASE("planted mean shift") {
    Rng a(6), b(6);
    const auto with = plant_effect(field, 0.1, 2.0, a);
    const auto none = plant_effect(field, 0.1, 0.0, b);
    for (std::size_t i = 0; i < field.size(); ++i)
      REQUIRE(with.z[i] - none.z[i] == doctest::Approx(with.truth.h[i] ? 2.0 : 0.0));
  }
  CHECK_THROWS_AS(plant_effect(field, 0.0, 1.0, rng), Error);
  CHECK_THROWS_AS(plant_effect(field, 1.0, 1.0, rng), Error);
}

TEST_CASE("zero effect leaves white noise") {
  Rng rng(8);
  const FieldSampler s(32, 5.0);
  double sxy = 0, sxx = 0, syy = 0;
  for (int rep = 0; rep < 50; ++rep) {
    const auto f = s.sample(rng);
    const auto p = plant_effect(f, 0.05, 0.0, rng);
    for (std::size_t i = 0; i < f.size(); ++i) {
      sxy += f[i] * p.z[i];
      sxx += f[i] * f[i];
      syy += p.z[i] * p.z[i];
    }
  }
  CHECK(std::fabs(sxy / std::sqrt(sxx * syy)) < 0.02);
}

TEST_CASE("planted atoms cluster spatially") {
  Rng rng(10);
  const std::size_t n = 64;
  auto dist = [&](std::size_t a, std::size_t b) {
    return std::hypot(double(a / n) - double(b / n), double(a % n) - double(b % n));
  };
  // Mean distance over all pixel pairs of the grid.
  double total = 0.0, count = 0.0;
  for (long dr = -63; dr <= 63; ++dr)
    for (long dc = -63; dc <= 63; ++dc) {
      const double w = double(64 - std::labs(dr)) * double(64 - std::labs(dc));
      total += w * std::hypot(double(dr), double(dc));
      count += w;
    }
  const FieldSampler s(n, 5.0);
  const int reps = 40;
  double sum = 0.0, sum2 = 0.0;
  for (int rep = 0; rep < reps; ++rep) {
    const auto p = plant_effect(s.sample(rng), 0.05, 2.0, rng);
    std::vector<std::size_t> in;
    for (std::size_t i = 0; i < p.truth.h.size(); ++i)
      if (p.truth.h[i]) in.push_back(i);
    double d = 0.0, k = 0.0;
    for (std::size_t a = 0; a < in.size(); ++a)
      for (std::size_t b = a + 1; b < in.size(); ++b, k += 1) d += dist(in[a], in[b]);
    sum += d / k;
    sum2 += (d / k) * (d / k);
  }
  const double mean = sum / reps;
  const double se = std::sqrt((sum2 / reps - mean * mean) / (reps - 1));
  CHECK(mean + 3.0 * se < total / count);
}
