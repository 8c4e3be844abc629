#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "relaxmt/error.hpp"
#include "relaxmt/stats.hpp"

using namespace relaxmt;

namespace {

// Phi(z) = 1/2 + phi(z) * sum z^(2n+1) / (1*3*...*(2n+1)), in long double.
long double series_cdf(long double z) {
  long double term = z, sum = z;
  for (int n = 1; n < 400; ++n) {
    term *= z * z / (2.0L * n + 1.0L);
    sum += term;
    if (std::fabs(term) < 1e-30L * std::fabs(sum)) break;
  }
  const long double pdf = std::exp(-0.5L * z * z) / std::sqrt(2.0L * 3.14159265358979323846264338327950288L);
  return 0.5L + pdf * sum;
}

// Asymptotic lower tail for z << 0.
double asymptotic_tail(double z) {
  const double x2 = z * z;
  return normal_pdf(z) / std::fabs(z) *
         (1.0 - 1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2) + 105.0 / (x2 * x2 * x2 * x2));
}

double bisect_quantile(double p) {
  long double lo = -10.0L, hi = 10.0L;
  for (int i = 0; i < 200; ++i) {
    const long double mid = 0.5L * (lo + hi);
    (series_cdf(mid) < p ? lo : hi) = mid;
  }
  return static_cast<double>(0.5L * (lo + hi));
}

}  // namespace

TEST_CASE("normal cdf against the series oracle") {
  CHECK(normal_cdf(0.0) == 0.5);
  CHECK(std::fabs(normal_cdf(1.6448536269514722) - 0.95) < 1e-12);
  for (double z = -6.0; z <= 6.0; z += 0.37)
    CHECK(std::fabs(normal_cdf(z) - static_cast<double>(series_cdf(z))) < 1e-12);
}

TEST_CASE("normal cdf deep lower tail") {
  const double v = normal_cdf(-8.0);
  CHECK(v > 0.0);
  CHECK(std::fabs(v / asymptotic_tail(-8.0) - 1.0) < 1e-5);
  CHECK(v == doctest::Approx(6.22e-16).epsilon(0.001));
}

TEST_CASE("cdf is monotone on random pairs") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-9.0, 9.0);
  for (int i = 0; i < 10000; ++i) {
    double a = u(rng), b = u(rng);
    if (a > b) std::swap(a, b);
    CHECK(normal_cdf(a) <= normal_cdf(b));
  }
}

TEST_CASE("complement identity") {
  for (double z = -8.0; z <= 8.0; z += 0.01) CHECK(std::fabs(normal_cdf(z) + normal_sf(z) - 1.0) <= 1e-15);
  CHECK(one_sided_pvalue(0.0) == 0.5);
  CHECK(std::fabs(one_sided_pvalue(1.6448536269514722) - 0.05) < 1e-12);
  CHECK(one_sided_pvalue(1.0) > one_sided_pvalue(1.0000001));
}

TEST_CASE("pdf") {
  CHECK(normal_pdf(0.0) == doctest::Approx(0.3989422804014327).epsilon(1e-15));
  CHECK(normal_pdf(1.0) == normal_pdf(-1.0));
}

TEST_CASE("quantile") {
  CHECK(normal_quantile(0.5) == 0.0);
  const double oracle = bisect_quantile(0.975);
  CHECK(std::fabs(oracle - 1.959963984540054) < 1e-12);
  CHECK(std::fabs(normal_quantile(0.975) - oracle) < 1e-12);
  for (int z = -5; z <= 5; ++z) CHECK(std::fabs(normal_quantile(normal_cdf(z)) - z) < 1e-9);
  for (double e = -10.0; e < 0.0; e += 0.25) {
    const double p = std::pow(10.0, e);
    CHECK(std::fabs(normal_cdf(normal_quantile(p)) - p) <= 1e-10 * std::max(p, 1e-10));
    CHECK(std::fabs(normal_cdf(normal_quantile(1.0 - p)) - (1.0 - p)) <= 1e-10);
  }
}

TEST_CASE("quantile domain errors") {
  for (double p : {0.0, 1.0, -0.1, 1.1, std::nan("")}) {
    try {
      normal_quantile(p);
      FAIL("expected a domain error for p = " << p);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::Domain);
    }
  }
}

TEST_CASE("upper quantile in the far tail") {
  CHECK(normal_upper_quantile(0.0) == std::numeric_limits<double>::infinity());
  CHECK(normal_upper_quantile(1.0) == -std::numeric_limits<double>::infinity());
  for (double q : {1e-20, 1e-12, 5e-8, 2.5e-5}) {
    const double c = normal_upper_quantile(q);
    CHECK(std::fabs(normal_sf(c) / q - 1.0) < 1e-10);
  }
}

TEST_CASE("gauss-legendre quadrature") {
  CHECK(gauss_legendre_integrate([](double) { return 1.0; }, 0.0, 1.0, 1) == doctest::Approx(1.0).epsilon(1e-15));
  // Degree 39 is integrated exactly by a 20-node rule.
  const double poly = gauss_legendre_integrate([](double x) { return 40.0 * std::pow(x, 39); }, 0.0, 1.0, 1);
  CHECK(std::fabs(poly - 1.0) < 1e-13);

  const double inf = std::numeric_limits<double>::infinity();
  CHECK(std::fabs(gauss_legendre_integrate(normal_pdf, -inf, inf) - 1.0) < 1e-9);
  CHECK(std::fabs(gauss_legendre_integrate([](double z) { return z * z * normal_pdf(z); }, -inf, inf) - 1.0) < 1e-8);
  CHECK(std::fabs(gauss_legendre_integrate(normal_pdf, -10.0, 10.0) - 1.0) < 1e-9);
  CHECK(std::fabs(gaussian_tail_integral(normal_pdf, 3.0) - normal_sf(3.0)) < 1e-15);
  CHECK(gaussian_tail_integral(normal_pdf, 9.0) == 0.0);
}

TEST_CASE("quadrature bounds") {
  CHECK_THROWS_AS(gauss_legendre_integrate(normal_pdf, 9.0, std::numeric_limits<double>::infinity()), Error);
  CHECK_THROWS_AS(gauss_legendre_integrate(normal_pdf, 1.0, 1.0), Error);
}

TEST_CASE("panel doubling leaves the screening integrals unchanged") {
  const double rho = 1.0 / std::sqrt(10.0);
  const double u = normal_upper_quantile(0.0025);
  const double scale = std::sqrt(1.0 - rho * rho);
  for (double mu : {0.0, 1.5, 4.0}) {
    auto f = [&](double z) { return normal_sf((u - mu - rho * z) / scale) * normal_pdf(z); };
    auto g = [&](double z) { return normal_cdf((u - mu - rho * z) / scale) * normal_pdf(z); };
    for (double c : {-8.5, 0.0, 3.4, 4.2}) {
      CHECK(std::fabs(gaussian_tail_integral(f, c, kDefaultPanels) - gaussian_tail_integral(f, c, 2 * kDefaultPanels)) < 1e-10);
      CHECK(std::fabs(gaussian_tail_integral(g, c, kDefaultPanels) - gaussian_tail_integral(g, c, 2 * kDefaultPanels)) < 1e-10);
    }
  }
}
