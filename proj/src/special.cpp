#include "uqr/special.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "uqr/errors.hpp"

namespace uqr {

namespace {

constexpr double kHalfLog2Pi = 0.9189385332046727;  // log(2*pi)/2
constexpr double kInvSqrt2 = 0.7071067811865476;

// log(1 - exp(x)) for x < 0, accurate near both ends
double log1mexp(double x) {
  if (x >= 0.0) return -std::numeric_limits<double>::infinity();
  return x > -std::numbers::ln2 ? std::log(-std::expm1(x))
                                : std::log1p(-std::exp(x));
}

}  // namespace

double std_normal_pdf(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

double std_normal_log_pdf(double z) { return -0.5 * z * z - kHalfLog2Pi; }

double std_normal_cdf(double z) {
  z = std::clamp(z, -kCdfClamp, kCdfClamp);
  return 0.5 * std::erfc(-z * kInvSqrt2);
}

double std_normal_log_tail(double z) {
  z = std::min(z, kCdfClamp);
  if (z <= 36.0) {
    // erfc stays above the subnormal range here (Q(36) ~ 2e-284)
    return std::log(0.5 * std::erfc(z * kInvSqrt2));
  }
  // asymptotic tail: Q(z) = phi(z)/z * (1 - 1/z^2 + 3/z^4 - 15/z^6 + 105/z^8 - ...)
  const double zi2 = 1.0 / (z * z);
  const double series = zi2 * (-1.0 + zi2 * (3.0 + zi2 * (-15.0 + zi2 * 105.0)));
  return std_normal_log_pdf(z) - std::log(z) + std::log1p(series);
}

double log_cdf_diff(double a, double b) {
  if (!(a > b)) throw NumericError("log_cdf_diff: invalid interval, a <= b");
  a = std::clamp(a, -kCdfClamp, kCdfClamp);
  b = std::clamp(b, -kCdfClamp, kCdfClamp);
  if (a == b) return -std::numeric_limits<double>::infinity();

  if (a + b < 0.0) {  // reflect so the midpoint is nonnegative
    const double t = a;
    a = -b;
    b = -t;
  }
  const double m = 0.5 * (a + b);
  const double d = 0.5 * (a - b);

  if (d * std::max(1.0, m) <= 0.01) {
    // narrow interval: integrate phi around the midpoint;
    // Phi(a)-Phi(b) = 2d*phi(m)*(1 + d^2(m^2-1)/6 + d^4(m^4-6m^2+3)/120 + O((dm)^6))
    const double m2 = m * m;
    const double corr = d * d * (m2 - 1.0) / 6.0 +
                        d * d * d * d * (m2 * m2 - 6.0 * m2 + 3.0) / 120.0;
    return std::log(2.0 * d) + std_normal_log_pdf(m) + std::log1p(corr);
  }
  // wide interval: Phi(a)-Phi(b) = Q(b)-Q(a) via upper tails in the log
  // domain; m >= 0 guarantees Q(b) dominates
  const double lqb = std_normal_log_tail(b);
  const double lqa = std_normal_log_tail(a);
  return lqb + log1mexp(lqa - lqb);
}

double std_normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw NumericError("std_normal_quantile: p must be in (0,1)");
  }
  double lo = -kCdfClamp, hi = kCdfClamp;
  while (hi - lo > 1e-10) {
    const double mid = 0.5 * (lo + hi);
    (std_normal_cdf(mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

std::vector<double> finite_diff_grad(
    const std::function<double(const std::vector<double>&)>& f,
    const std::vector<double>& x, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("finite_diff_grad: h must be positive");
  std::vector<double> g(x.size());
  std::vector<double> xp = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    xp[i] = xi + h;
    const double fp = f(xp);
    xp[i] = xi - h;
    const double fm = f(xp);
    xp[i] = xi;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

}  // namespace uqr
