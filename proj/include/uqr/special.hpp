#pragma once

#include <functional>
#include <vector>

namespace uqr {

// Arguments of the cdf utilities are clamped to this range; beyond it the
// double-precision answer is constant.
inline constexpr double kCdfClamp = 40.0;

double std_normal_pdf(double z);
double std_normal_log_pdf(double z);

// Phi(z), absolute error well under 1e-12 on |z| <= 8.
double std_normal_cdf(double z);

// log of the upper tail Q(z) = 1 - Phi(z); finite for z <= kCdfClamp.
double std_normal_log_tail(double z);

// log(Phi(a) - Phi(b)) without cancellation. Requires a > b. Finite for all
// |a|, |b| <= kCdfClamp; arguments beyond the clamp are pinned to it (a
// degenerate clamped interval yields -inf).
double log_cdf_diff(double a, double b);

// Inverse of std_normal_cdf by bisection on [-kCdfClamp, kCdfClamp] to an
// interval width of 1e-10. Requires 0 < p < 1.
double std_normal_quantile(double p);

// Central differences (f(x+h e_i) - f(x-h e_i)) / (2h) per coordinate.
// Independent oracle for every analytic gradient in the library.
std::vector<double> finite_diff_grad(
    const std::function<double(const std::vector<double>&)>& f,
    const std::vector<double>& x, double h);

}  // namespace uqr
