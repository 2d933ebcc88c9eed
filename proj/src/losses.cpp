#include "uqr/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "uqr/errors.hpp"
#include "uqr/special.hpp"

namespace uqr {

std::string loss_kind_name(LossKind kind) {
  switch (kind) {
    case LossKind::kMse: return "mse";
    case LossKind::kNll: return "nll";
    case LossKind::kBvm: return "bvm";
  }
  return "unknown";
}

LossKind loss_kind_from_name(const std::string& name) {
  if (name == "mse") return LossKind::kMse;
  if (name == "nll") return LossKind::kNll;
  if (name == "bvm") return LossKind::kBvm;
  throw DataError("unknown loss kind: " + name);
}

namespace {

void check_variance(double sigma2) {
  if (!(sigma2 >= kVarianceFloor)) {
    throw NumericError("variance below floor: sigma2 = " + std::to_string(sigma2));
  }
}

}  // namespace

PerSampleEval mse_loss(double t, double mu) {
  const double r = t - mu;
  return {r * r, -2.0 * r, 0.0};
}

PerSampleEval nll_loss(double t, double mu, double sigma2) {
  check_variance(sigma2);
  const double r = t - mu;
  const double sigma = std::sqrt(sigma2);
  const double value =
      0.5 * std::log(2.0 * std::numbers::pi * sigma2) + r * r / (2.0 * sigma2);
  return {value, -r / sigma2, 1.0 / sigma - r * r / (sigma2 * sigma)};
}

PerSampleEval bvm_loss(double t, double mu, double sigma2, double eps,
                       double prob_floor) {
  check_variance(sigma2);
  if (!(eps > 0.0)) throw NumericError("bvm_loss: epsilon must be positive");
  const double sigma = std::sqrt(sigma2);
  const double a = std::clamp((t - mu + eps) / sigma, -kCdfClamp, kCdfClamp);
  const double b = std::clamp((t - mu - eps) / sigma, -kCdfClamp, kCdfClamp);

  const double log_floor = std::log(prob_floor);
  double lp = a > b ? log_cdf_diff(a, b)
                    : -std::numeric_limits<double>::infinity();
  if (!(lp > log_floor)) {
    // clamp active: the loss saturates, so its gradients vanish
    return {-log_floor, 0.0, 0.0};
  }
  // ratios phi/p computed as exp(log phi - log p); both factors may underflow
  // individually but the ratio is well conditioned
  const double ra = std::exp(std_normal_log_pdf(a) - lp);
  const double rb = std::exp(std_normal_log_pdf(b) - lp);
  return {-lp, (ra - rb) / sigma, (a * ra - b * rb) / sigma};
}

double taylor_bvm_loss(double t, double mu, double sigma2, double eps) {
  check_variance(sigma2);
  const double r = t - mu;
  const double nll =
      0.5 * std::log(2.0 * std::numbers::pi * sigma2) + r * r / (2.0 * sigma2);
  return nll - (eps * eps / 6.0) * (r * r / (sigma2 * sigma2) - 1.0 / sigma2);
}

BatchEval batch_loss(const LossSpec& spec, std::span<const double> targets,
                     std::span<const double> mus,
                     std::span<const double> sigma2s) {
  const std::size_t n = targets.size();
  if (n == 0) throw NumericError("batch_loss: empty batch");
  if (mus.size() != n) throw NumericError("batch_loss: size mismatch");
  if (spec.kind != LossKind::kMse && sigma2s.size() != n) {
    throw NumericError("batch_loss: size mismatch");
  }
  BatchEval out;
  out.d_mu.resize(n);
  out.d_sigma.resize(n);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    PerSampleEval e;
    switch (spec.kind) {
      case LossKind::kMse: e = mse_loss(targets[i], mus[i]); break;
      case LossKind::kNll: e = nll_loss(targets[i], mus[i], sigma2s[i]); break;
      case LossKind::kBvm:
        e = bvm_loss(targets[i], mus[i], sigma2s[i], spec.epsilon, spec.prob_floor);
        break;
    }
    out.mean_loss += e.value * inv_n;
    out.d_mu[i] = e.d_mu * inv_n;
    out.d_sigma[i] = e.d_sigma * inv_n;
  }
  return out;
}

}  // namespace uqr
