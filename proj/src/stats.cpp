#include "relaxmt/stats.hpp"

#include <numbers>

namespace relaxmt {

namespace {

template <std::size_t N>
double poly(const double (&c)[N], double x) {
  double acc = c[N - 1];
  for (std::size_t i = N - 1; i-- > 0;) acc = acc * x + c[i];
  return acc;
}

// AS241 (PPND16) coefficients, lowest order first.
constexpr double kA[] = {3.387132872796366608,   133.14166789178437745,
                         1971.5909503065514427,  13731.693765509461125,
                         45921.953931549871457,  67265.770927008700853,
                         33430.575583588128105,  2509.0809287301226727};
constexpr double kB[] = {1.0,                    42.313330701600911252,
                         687.1870074920579083,   5394.1960214247511077,
                         21213.794301586595867,  39307.89580009271061,
                         28729.085735721942674,  5226.495278852545925};
constexpr double kC[] = {1.42343711074968357734,  4.6303378461565452959,
                         5.7694972214606914055,   3.64784832476320460504,
                         1.27045825245236838258,  0.24178072517745061177,
                         0.0227238449892691845833, 7.7454501427834140764e-4};
constexpr double kD[] = {1.0,                     2.05319162663775882187,
                         1.6763848301838038494,   0.68976733498510000455,
                         0.14810397642748007459,  0.0151986665636164571966,
                         5.475938084995344946e-4, 1.05075007164441684324e-9};
constexpr double kE[] = {6.6579046435011037772,   5.4637849111641143699,
                         1.7848265399172913358,   0.29656057182850489123,
                         0.026532189526576123093, 0.0012426609473880784386,
                         2.71155556874348757815e-5, 2.01033439929228813265e-7};
constexpr double kF[] = {1.0,                      0.59983220655588793769,
                         0.13692988092273580531,   0.0148753612908506148525,
                         7.868691311456132591e-4,  1.8463183175100546818e-5,
                         1.4215117583164458887e-7, 2.04426310338993978564e-15};

GaussLegendreRule build_rule() {
  GaussLegendreRule rule{};
  constexpr std::size_t n = kGaussLegendreNodes;
  const double dn = static_cast<double>(n);
  for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (dn + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p1 = 1.0, p2 = 0.0;
      for (std::size_t j = 1; j <= n; ++j) {
        const double dj = static_cast<double>(j);
        const double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * dj - 1.0) * z * p2 - (dj - 1.0) * p3) / dj;
      }
      dp = dn * (z * p1 - p2) / (z * z - 1.0);
      const double step = p1 / dp;
      z -= step;
      if (std::fabs(step) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - z * z) * dp * dp);
    rule.nodes[i] = -z;
    rule.nodes[n - 1 - i] = z;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  return rule;
}

}  // namespace

double normal_quantile(double p) {
  require(p > 0.0 && p < 1.0, ErrorCode::Domain,
          "normal_quantile requires 0 < p < 1");
  const double q = p - 0.5;
  if (std::fabs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q * poly(kA, r) / poly(kB, r);
  }
  double r = q < 0.0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double value;
  if (r <= 5.0) {
    r -= 1.6;
    value = poly(kC, r) / poly(kD, r);
  } else {
    r -= 5.0;
    value = poly(kE, r) / poly(kF, r);
  }
  return q < 0.0 ? -value : value;
}

double normal_upper_quantile(double q) {
  require(q >= 0.0 && q <= 1.0, ErrorCode::Domain,
          "normal_upper_quantile requires 0 <= q <= 1");
  if (q == 0.0) return std::numeric_limits<double>::infinity();
  if (q == 1.0) return -std::numeric_limits<double>::infinity();
  return -normal_quantile(q);
}

const GaussLegendreRule& gauss_legendre_rule() {
  static const GaussLegendreRule rule = build_rule();
  return rule;
}

}  // namespace relaxmt
