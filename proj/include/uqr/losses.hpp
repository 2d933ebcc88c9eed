#pragma once

#include <span>
#include <string>
#include <vector>

namespace uqr {

// Variance predictions below this are invalid; the network heads floor their
// variance output here so the losses never see smaller values.
inline constexpr double kVarianceFloor = 1e-6;

enum class LossKind { kMse, kNll, kBvm };

std::string loss_kind_name(LossKind kind);
LossKind loss_kind_from_name(const std::string& name);

struct LossSpec {
  LossKind kind = LossKind::kBvm;
  double epsilon = 0.01;      // agreement half-width, normalized target units
  double prob_floor = 1e-300; // lower clamp on the probability of agreement
};

struct PerSampleEval {
  double value = 0;
  double d_mu = 0;
  double d_sigma = 0;  // derivative w.r.t. sigma (not sigma^2)
};

// value (t-mu)^2; d/dmu = -2(t-mu); no variance dependence
PerSampleEval mse_loss(double t, double mu);

// value 0.5*log(2*pi*sigma2) + (t-mu)^2 / (2*sigma2)
PerSampleEval nll_loss(double t, double mu, double sigma2);

// value -log[Phi((t+eps-mu)/sigma) - Phi((t-eps-mu)/sigma)], probability of
// agreement clamped below at prob_floor before the log. Gradients go through
// the same log-domain path as the value, so deep-tail samples stay finite.
PerSampleEval bvm_loss(double t, double mu, double sigma2, double eps,
                       double prob_floor = 1e-300);

// second-order expansion of the BVM loss around eps = 0 (plus log(2*eps)):
// 0.5*log(2*pi*sigma2) + r^2/(2*sigma2) - (eps^2/6)*(r^2/sigma2^2 - 1/sigma2).
// Verification oracle only; its minimum over (mu, sigma) sits at
// mu = t, sigma = eps/sqrt(3).
double taylor_bvm_loss(double t, double mu, double sigma2, double eps);

struct BatchEval {
  double mean_loss = 0;
  // gradients of the *mean* loss, i.e. per-sample gradients scaled by 1/N
  std::vector<double> d_mu;
  std::vector<double> d_sigma;
};

// sigma2s is ignored for MSE and may be empty in that case
BatchEval batch_loss(const LossSpec& spec, std::span<const double> targets,
                     std::span<const double> mus,
                     std::span<const double> sigma2s);

}  // namespace uqr
