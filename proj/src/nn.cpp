#include "uqr/nn.hpp"

#include <cmath>
#include <stdexcept>

#include "uqr/errors.hpp"
#include "uqr/losses.hpp"

namespace uqr {

std::string head_kind_name(HeadKind kind) {
  switch (kind) {
    case HeadKind::kIdentity: return "identity";
    case HeadKind::kSigmoidBoth: return "sigmoid-both";
    case HeadKind::kSoftplusVar: return "softplus-var";
  }
  return "unknown";
}

HeadKind head_kind_from_name(const std::string& name) {
  if (name == "identity") return HeadKind::kIdentity;
  if (name == "sigmoid-both") return HeadKind::kSigmoidBoth;
  if (name == "softplus-var") return HeadKind::kSoftplusVar;
  throw DataError("unknown head kind: " + name);
}

namespace {

double sigmoid(double x) {
  return x >= 0 ? 1.0 / (1.0 + std::exp(-x))
                : std::exp(x) / (1.0 + std::exp(x));
}

double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }

std::vector<Layer> shaped_like(const MlpModel& model) {
  std::vector<Layer> out;
  out.reserve(model.layers.size());
  for (const auto& l : model.layers) {
    out.push_back({l.in, l.out, std::vector<double>(l.w.size(), 0.0),
                   std::vector<double>(l.b.size(), 0.0)});
  }
  return out;
}

}  // namespace

std::size_t MlpModel::param_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.w.size() + l.b.size();
  return n;
}

MlpModel init_model(const Architecture& arch, Rng& rng) {
  if (arch.input_dim < 1 || arch.output_dim < 1) {
    throw std::invalid_argument("init_model: layer sizes must be >= 1");
  }
  for (int h : arch.hidden) {
    if (h < 1) throw std::invalid_argument("init_model: layer sizes must be >= 1");
  }
  MlpModel model;
  model.arch = arch;
  int in = arch.input_dim;
  std::vector<int> sizes = arch.hidden;
  sizes.push_back(arch.output_dim);
  for (int out : sizes) {
    Layer l{in, out, {}, {}};
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    l.w.resize(static_cast<std::size_t>(in) * out);
    l.b.resize(static_cast<std::size_t>(out));
    for (auto& w : l.w) w = rng.uniform(-bound, bound);
    for (auto& b : l.b) b = rng.uniform(-bound, bound);
    model.layers.push_back(std::move(l));
    in = out;
  }
  return model;
}

std::vector<double> forward(const MlpModel& model, std::span<const double> x,
                            ForwardCache* cache) {
  if (static_cast<int>(x.size()) != model.arch.input_dim) {
    throw NumericError("forward: input dimension mismatch");
  }
  if (cache) {
    cache->acts.clear();
    cache->acts.reserve(model.layers.size());
  }
  std::vector<double> cur(x.begin(), x.end());
  const std::size_t n_layers = model.layers.size();
  for (std::size_t li = 0; li < n_layers; ++li) {
    const Layer& l = model.layers[li];
    if (cache) cache->acts.push_back(cur);
    std::vector<double> next(static_cast<std::size_t>(l.out));
    for (int o = 0; o < l.out; ++o) {
      double acc = l.b[static_cast<std::size_t>(o)];
      const double* wrow = l.w.data() + static_cast<std::size_t>(o) * l.in;
      for (int i = 0; i < l.in; ++i) acc += wrow[i] * cur[static_cast<std::size_t>(i)];
      next[static_cast<std::size_t>(o)] = acc;
    }
    if (li + 1 < n_layers) {
      for (auto& v : next) v = v > 0 ? v : 0.0;  // ReLU on hidden layers
    }
    cur = std::move(next);
  }
  if (cache) cache->raw_out = cur;

  switch (model.arch.head) {
    case HeadKind::kIdentity:
      break;
    case HeadKind::kSigmoidBoth:
      for (auto& v : cur) v = sigmoid(v);
      if (cur.size() >= 2) cur[1] = std::max(cur[1], kVarianceFloor);
      break;
    case HeadKind::kSoftplusVar:
      if (cur.size() >= 2) cur[1] = std::max(softplus(cur[1]), kVarianceFloor);
      break;
  }
  return cur;
}

Gradients backward(const MlpModel& model, const ForwardCache& cache,
                   std::span<const double> d_outputs) {
  const std::size_t n_layers = model.layers.size();
  if (cache.acts.size() != n_layers ||
      d_outputs.size() != cache.raw_out.size()) {
    throw NumericError("backward: cache/gradient shape mismatch");
  }
  // chain the head first: delta = dL/d(raw output)
  std::vector<double> delta(d_outputs.begin(), d_outputs.end());
  switch (model.arch.head) {
    case HeadKind::kIdentity:
      break;
    case HeadKind::kSigmoidBoth:
      for (std::size_t i = 0; i < delta.size(); ++i) {
        const double s = sigmoid(cache.raw_out[i]);
        double ds = s * (1.0 - s);
        if (i == 1 && s < kVarianceFloor) ds = 0.0;  // floor active
        delta[i] *= ds;
      }
      break;
    case HeadKind::kSoftplusVar:
      if (delta.size() >= 2) {
        const double sp = softplus(cache.raw_out[1]);
        delta[1] *= sp < kVarianceFloor ? 0.0 : sigmoid(cache.raw_out[1]);
      }
      break;
  }

  Gradients grads{shaped_like(model)};
  for (std::size_t li = n_layers; li-- > 0;) {
    const Layer& l = model.layers[li];
    Layer& g = grads.layers[li];
    const std::vector<double>& input = cache.acts[li];
    for (int o = 0; o < l.out; ++o) {
      const double d = delta[static_cast<std::size_t>(o)];
      g.b[static_cast<std::size_t>(o)] = d;
      double* grow = g.w.data() + static_cast<std::size_t>(o) * l.in;
      for (int i = 0; i < l.in; ++i) grow[i] = d * input[static_cast<std::size_t>(i)];
    }
    if (li == 0) break;
    // propagate through the affine map, then the ReLU of the layer below;
    // input[i] > 0 iff that ReLU was active
    std::vector<double> prev(static_cast<std::size_t>(l.in), 0.0);
    for (int i = 0; i < l.in; ++i) {
      if (input[static_cast<std::size_t>(i)] <= 0.0) continue;
      double acc = 0;
      for (int o = 0; o < l.out; ++o) {
        acc += l.w[static_cast<std::size_t>(o) * l.in + i] *
               delta[static_cast<std::size_t>(o)];
      }
      prev[static_cast<std::size_t>(i)] = acc;
    }
    delta = std::move(prev);
  }
  return grads;
}

Gradients zero_gradients(const MlpModel& model) { return {shaped_like(model)}; }

void accumulate(Gradients& acc, const Gradients& g, double scale) {
  for (std::size_t li = 0; li < acc.layers.size(); ++li) {
    auto& a = acc.layers[li];
    const auto& s = g.layers[li];
    for (std::size_t i = 0; i < a.w.size(); ++i) a.w[i] += scale * s.w[i];
    for (std::size_t i = 0; i < a.b.size(); ++i) a.b[i] += scale * s.b[i];
  }
}

OptimizerState init_optimizer(const MlpModel& model, const OptimizerConfig& cfg) {
  OptimizerState st;
  st.cfg = cfg;
  st.m = shaped_like(model);
  st.v = shaped_like(model);
  return st;
}

bool adamw_step(MlpModel& model, OptimizerState& state, const Gradients& grads) {
  for (const auto& l : grads.layers) {
    for (double g : l.w) {
      if (!std::isfinite(g)) return false;
    }
    for (double g : l.b) {
      if (!std::isfinite(g)) return false;
    }
  }
  const OptimizerConfig& c = state.cfg;
  state.step += 1;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));

  auto update = [&](std::vector<double>& params, std::vector<double>& m,
                    std::vector<double>& v, const std::vector<double>& g) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
      v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      double step = mhat / (std::sqrt(vhat) + c.eps);
      if (c.decoupled_decay) step += c.weight_decay * params[i];
      params[i] -= c.lr * step;
    }
  };
  for (std::size_t li = 0; li < model.layers.size(); ++li) {
    update(model.layers[li].w, state.m[li].w, state.v[li].w, grads.layers[li].w);
    update(model.layers[li].b, state.m[li].b, state.v[li].b, grads.layers[li].b);
  }
  return true;
}

}  // namespace uqr
