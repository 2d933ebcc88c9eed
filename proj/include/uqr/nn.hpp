#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "uqr/rng.hpp"

namespace uqr {

// Output-head activation. kSigmoidBoth squashes both outputs into (0,1) for
// training against [0,1]-normalized targets; kSoftplusVar keeps the mean
// unbounded and maps the second output through softplus, for unnormalized
// two-output training; kIdentity passes raw outputs through (MSE nets).
enum class HeadKind { kIdentity, kSigmoidBoth, kSoftplusVar };

std::string head_kind_name(HeadKind kind);
HeadKind head_kind_from_name(const std::string& name);

struct Architecture {
  int input_dim = 1;
  std::vector<int> hidden;  // ReLU layers
  int output_dim = 2;
  HeadKind head = HeadKind::kSigmoidBoth;
};

// weights are row-major out x in; the same shape carrier doubles as gradient
// and optimizer-moment storage
struct Layer {
  int in = 0, out = 0;
  std::vector<double> w;
  std::vector<double> b;
};

struct MlpModel {
  Architecture arch;
  std::vector<Layer> layers;
  std::size_t param_count() const;
};

struct ForwardCache {
  std::vector<std::vector<double>> acts;  // acts[l] = input to layer l
  std::vector<double> raw_out;            // pre-head outputs
};

struct Gradients {
  std::vector<Layer> layers;  // w/b hold d(loss)/d(param)
};

// weights and biases uniform on [-1/sqrt(fan_in), +1/sqrt(fan_in)]
MlpModel init_model(const Architecture& arch, Rng& rng);

// returns head-applied outputs; for two-headed models (mu, sigma2) with the
// variance floored at kVarianceFloor. Fills *cache when given.
std::vector<double> forward(const MlpModel& model, std::span<const double> x,
                            ForwardCache* cache = nullptr);

// exact reverse-mode gradient of the scalar loss whose gradient w.r.t. the
// head-applied outputs is d_outputs
Gradients backward(const MlpModel& model, const ForwardCache& cache,
                   std::span<const double> d_outputs);

Gradients zero_gradients(const MlpModel& model);
void accumulate(Gradients& acc, const Gradients& g, double scale);

struct OptimizerConfig {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
  bool decoupled_decay = true;  // true: AdamW; false: plain Adam (decay ignored)
};

struct OptimizerState {
  OptimizerConfig cfg;
  long step = 0;
  std::vector<Layer> m, v;  // first/second moment accumulators
};

OptimizerState init_optimizer(const MlpModel& model, const OptimizerConfig& cfg);

// one bias-corrected adaptive update; returns false (and leaves model and
// state untouched) if any gradient entry is non-finite
bool adamw_step(MlpModel& model, OptimizerState& state, const Gradients& grads);

}  // namespace uqr
