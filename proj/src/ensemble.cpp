#include "uqr/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "json.hpp"
#include "uqr/errors.hpp"

namespace uqr {

namespace {

double param_norm(const MlpModel& model) {
  double acc = 0.0;
  for (const auto& l : model.layers) {
    for (double w : l.w) acc += w * w;
    for (double b : l.b) acc += b * b;
  }
  return std::sqrt(acc);
}

}  // namespace

MlpModel train_member(MlpModel model, const Dataset& train, const LossSpec& spec,
                      const TrainSchedule& schedule, Rng& rng) {
  if (train.n == 0) throw DataError("train_member: empty training set");
  const bool two_headed = model.arch.output_dim >= 2;
  if (spec.kind != LossKind::kMse && !two_headed) {
    throw NumericError("train_member: NLL/BVM need a two-output model");
  }
  OptimizerState opt = init_optimizer(model, schedule.opt);
  std::vector<std::size_t> order(train.n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  const std::size_t batch_size =
      std::max<std::size_t>(1, static_cast<std::size_t>(schedule.batch_size));
  std::vector<double> ts, mus, s2s;
  std::vector<ForwardCache> caches;

  for (int epoch = 0; epoch < schedule.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < train.n; start += batch_size) {
      const std::size_t end = std::min(train.n, start + batch_size);
      const std::size_t bs = end - start;
      ts.resize(bs);
      mus.resize(bs);
      s2s.resize(bs);
      caches.resize(bs);
      for (std::size_t i = 0; i < bs; ++i) {
        const std::size_t row = order[start + i];
        auto out = forward(model, train.row(row), &caches[i]);
        ts[i] = train.y[row];
        mus[i] = out[0];
        s2s[i] = two_headed ? out[1] : 0.0;
      }
      BatchEval eval;
      try {
        eval = batch_loss(spec, ts, mus,
                          two_headed ? std::span<const double>(s2s)
                                     : std::span<const double>());
      } catch (const NumericError& err) {
        throw NumericError("train_member: batch " + std::to_string(start / batch_size) +
                           " of epoch " + std::to_string(epoch) + ": " + err.what() +
                           " (parameter norm " + std::to_string(param_norm(model)) + ")");
      }
      if (!std::isfinite(eval.mean_loss)) {
        throw NumericError("train_member: non-finite loss in batch " +
                           std::to_string(start / batch_size) + " of epoch " +
                           std::to_string(epoch) + " (parameter norm " +
                           std::to_string(param_norm(model)) + ")");
      }
      Gradients batch_grads = zero_gradients(model);
      std::vector<double> d_out(two_headed ? 2 : 1);
      for (std::size_t i = 0; i < bs; ++i) {
        d_out[0] = eval.d_mu[i];
        if (two_headed) d_out[1] = eval.d_sigma[i] / (2.0 * std::sqrt(s2s[i]));
        accumulate(batch_grads, backward(model, caches[i], d_out), 1.0);
      }
      adamw_step(model, opt, batch_grads);
    }
  }
  return model;
}

EnsembleModel train_ensemble(int k, const Architecture& arch, const Dataset& train,
                             const LossSpec& spec, const TrainSchedule& schedule,
                             Rng& rng) {
  if (k < 1) throw DataError("train_ensemble: K must be >= 1");
  EnsembleModel ensemble;
  ensemble.spec = spec;
  ensemble.master_seed = rng.key();
  ensemble.norm.identity = true;
  for (int member = 0; member < k; ++member) {
    Rng member_rng = rng.child(static_cast<std::uint64_t>(member));
    Rng init_rng = member_rng.child(0);
    Rng shuffle_rng = member_rng.child(1);
    ensemble.member_seeds.push_back(member_rng.key());
    MlpModel model = init_model(arch, init_rng);
    try {
      ensemble.members.push_back(
          train_member(std::move(model), train, spec, schedule, shuffle_rng));
    } catch (const NumericError& err) {
      throw NumericError("member " + std::to_string(member) + ": " + err.what());
    }
  }
  return ensemble;
}

GaussianPrediction aggregate(std::span<const GaussianPrediction> preds) {
  if (preds.empty()) throw NumericError("aggregate: empty prediction list");
  double mu = 0.0, second = 0.0;
  for (const auto& p : preds) {
    if (!(p.sigma2 > 0.0)) throw NumericError("aggregate: nonpositive member variance");
    mu += p.mu;
    second += p.sigma2 + p.mu * p.mu;
  }
  const double k = static_cast<double>(preds.size());
  mu /= k;
  return {mu, second / k - mu * mu};
}

GaussianPrediction aggregate_point(std::span<const double> mus) {
  if (mus.empty()) throw NumericError("aggregate_point: empty prediction list");
  const double k = static_cast<double>(mus.size());
  double mu = 0.0;
  for (double m : mus) mu += m;
  mu /= k;
  double var = 0.0;
  for (double m : mus) var += (m - mu) * (m - mu);
  return {mu, std::max(var / k, 1e-12)};
}

std::vector<GaussianPrediction> member_predictions(const EnsembleModel& ensemble,
                                                   std::span<const double> x) {
  std::vector<GaussianPrediction> preds;
  preds.reserve(ensemble.members.size());
  for (const auto& m : ensemble.members) {
    auto out = forward(m, x);
    preds.push_back({out[0], out[1]});
  }
  return preds;
}

GaussianPrediction predict(const EnsembleModel& ensemble, std::span<const double> x) {
  if (ensemble.members.empty()) throw NumericError("predict: empty ensemble");
  GaussianPrediction agg;
  if (ensemble.members[0].arch.output_dim >= 2) {
    agg = aggregate(member_predictions(ensemble, x));
  } else {
    std::vector<double> mus;
    mus.reserve(ensemble.members.size());
    for (const auto& m : ensemble.members) mus.push_back(forward(m, x)[0]);
    agg = aggregate_point(mus);
  }
  if (ensemble.norm.identity) return agg;
  const double range = ensemble.norm.y_range();
  return {ensemble.norm.y_min + agg.mu * range, agg.sigma2 * range * range};
}

namespace {

using nlohmann::json;

json model_to_json(const MlpModel& model) {
  json layers = json::array();
  for (const auto& l : model.layers) {
    layers.push_back({{"in", l.in}, {"out", l.out}, {"w", l.w}, {"b", l.b}});
  }
  return {{"input_dim", model.arch.input_dim},
          {"hidden", model.arch.hidden},
          {"output_dim", model.arch.output_dim},
          {"head", head_kind_name(model.arch.head)},
          {"layers", layers}};
}

MlpModel model_from_json(const json& j) {
  MlpModel model;
  model.arch.input_dim = j.at("input_dim").get<int>();
  model.arch.hidden = j.at("hidden").get<std::vector<int>>();
  model.arch.output_dim = j.at("output_dim").get<int>();
  model.arch.head = head_kind_from_name(j.at("head").get<std::string>());
  for (const auto& lj : j.at("layers")) {
    Layer l;
    l.in = lj.at("in").get<int>();
    l.out = lj.at("out").get<int>();
    l.w = lj.at("w").get<std::vector<double>>();
    l.b = lj.at("b").get<std::vector<double>>();
    if (l.w.size() != static_cast<std::size_t>(l.in) * static_cast<std::size_t>(l.out) ||
        l.b.size() != static_cast<std::size_t>(l.out)) {
      throw DataError("checkpoint: layer shape mismatch");
    }
    model.layers.push_back(std::move(l));
  }
  return model;
}

}  // namespace

void save_checkpoint(const std::string& path, const EnsembleModel& ensemble) {
  json members = json::array();
  for (const auto& m : ensemble.members) members.push_back(model_to_json(m));
  const json j = {
      {"schema_version", 1},
      {"master_seed", ensemble.master_seed},
      {"member_seeds", ensemble.member_seeds},
      {"loss",
       {{"kind", loss_kind_name(ensemble.spec.kind)},
        {"epsilon", ensemble.spec.epsilon},
        {"prob_floor", ensemble.spec.prob_floor}}},
      {"normalization",
       {{"identity", ensemble.norm.identity},
        {"mean", ensemble.norm.mean},
        {"std", ensemble.norm.std},
        {"y_min", ensemble.norm.y_min},
        {"y_max", ensemble.norm.y_max},
        {"constant_columns", ensemble.norm.constant_columns}}},
      {"members", members}};
  std::ofstream fh(path);
  if (!fh) throw DataError("cannot write " + path);
  fh << j.dump(2) << "\n";
  if (!fh) throw DataError("write failed: " + path);
}

EnsembleModel load_checkpoint(const std::string& path) {
  std::ifstream fh(path);
  if (!fh) throw DataError("cannot open " + path);
  json j;
  try {
    fh >> j;
  } catch (const json::exception& err) {
    throw DataError("checkpoint parse error in " + path + ": " + err.what());
  }
  if (j.value("schema_version", 0) != 1) {
    throw DataError("checkpoint: unsupported schema version in " + path);
  }
  EnsembleModel ensemble;
  ensemble.master_seed = j.at("master_seed").get<std::uint64_t>();
  ensemble.member_seeds = j.at("member_seeds").get<std::vector<std::uint64_t>>();
  const auto& loss = j.at("loss");
  ensemble.spec.kind = loss_kind_from_name(loss.at("kind").get<std::string>());
  ensemble.spec.epsilon = loss.at("epsilon").get<double>();
  ensemble.spec.prob_floor = loss.at("prob_floor").get<double>();
  const auto& norm = j.at("normalization");
  ensemble.norm.identity = norm.at("identity").get<bool>();
  ensemble.norm.mean = norm.at("mean").get<std::vector<double>>();
  ensemble.norm.std = norm.at("std").get<std::vector<double>>();
  ensemble.norm.y_min = norm.at("y_min").get<double>();
  ensemble.norm.y_max = norm.at("y_max").get<double>();
  ensemble.norm.constant_columns = norm.at("constant_columns").get<std::size_t>();
  for (const auto& mj : j.at("members")) {
    ensemble.members.push_back(model_from_json(mj));
  }
  if (ensemble.members.empty()) throw DataError("checkpoint: no members in " + path);
  return ensemble;
}

}  // namespace uqr
