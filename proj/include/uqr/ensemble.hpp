#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "uqr/data.hpp"
#include "uqr/losses.hpp"
#include "uqr/nn.hpp"
#include "uqr/rng.hpp"

namespace uqr {

struct GaussianPrediction {
  double mu = 0.0;
  double sigma2 = 0.0;
};

struct TrainSchedule {
  int epochs = 40;
  int batch_size = 32;
  OptimizerConfig opt;
};

struct EnsembleModel {
  std::vector<MlpModel> members;  // shared architecture and LossSpec
  LossSpec spec;
  std::vector<std::uint64_t> member_seeds;
  std::uint64_t master_seed = 0;
  NormalizationMeta norm;
};

// Epoch loop with per-epoch reshuffling; the final short batch is kept. No
// early stopping. A non-finite batch loss aborts with the batch index and
// parameter norms in the diagnostic.
MlpModel train_member(MlpModel model, const Dataset& train, const LossSpec& spec,
                      const TrainSchedule& schedule, Rng& rng);

// K members with independent child streams for init and shuffling
EnsembleModel train_ensemble(int k, const Architecture& arch, const Dataset& train,
                             const LossSpec& spec, const TrainSchedule& schedule,
                             Rng& rng);

// uniform Gaussian mixture moments:
// mu* = mean(mu_k); sigma2* = mean(sigma2_k + mu_k^2) - mu*^2
GaussianPrediction aggregate(std::span<const GaussianPrediction> preds);

// point-prediction ensembles (MSE members): predictive Gaussian from the
// member means, variance = population variance floored at 1e-12
GaussianPrediction aggregate_point(std::span<const double> mus);

// forward x (already standardized) through all members, aggregate, then
// map back to original units: mu by the target offset/range, sigma2 by range^2
GaussianPrediction predict(const EnsembleModel& ensemble, std::span<const double> x);

// member predictions in normalized target space (two-output models)
std::vector<GaussianPrediction> member_predictions(const EnsembleModel& ensemble,
                                                   std::span<const double> x);

void save_checkpoint(const std::string& path, const EnsembleModel& ensemble);
EnsembleModel load_checkpoint(const std::string& path);

}  // namespace uqr
