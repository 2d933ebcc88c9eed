#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "uqr/ensemble.hpp"
#include "uqr/errors.hpp"

using namespace uqr;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

double train_loss(const EnsembleModel& ensemble, const Dataset& data) {
  std::vector<double> ts(data.n), mus(data.n), s2s(data.n);
  double total = 0.0;
  for (const auto& member : ensemble.members) {
    for (std::size_t i = 0; i < data.n; ++i) {
      const auto out = forward(member, data.row(i));
      ts[i] = data.y[i];
      mus[i] = out[0];
      s2s[i] = out[1];
    }
    total += batch_loss(ensemble.spec, ts, mus, s2s).mean_loss;
  }
  return total / static_cast<double>(ensemble.members.size());
}

}  // namespace

TEST_CASE("aggregate of one member is the identity") {
  const GaussianPrediction p{0.7, 0.3};
  const std::vector<GaussianPrediction> preds{p};
  const auto agg = aggregate(preds);
  CHECK(agg.mu == p.mu);
  CHECK(agg.sigma2 == doctest::Approx(p.sigma2).epsilon(1e-15));
}

TEST_CASE("aggregate of a symmetric pair") {
  const std::vector<GaussianPrediction> preds{{0, 1}, {2, 1}};
  const auto agg = aggregate(preds);
  CHECK(agg.mu == doctest::Approx(1.0));
  // (1+0 + 1+4)/2 - 1 = 2
  CHECK(agg.sigma2 == doctest::Approx(2.0));
}

TEST_CASE("aggregate is permutation-invariant and validates input") {
  std::vector<GaussianPrediction> preds{{0.1, 0.2}, {-0.4, 1.1}, {2.0, 0.5}};
  const auto a = aggregate(preds);
  std::swap(preds[0], preds[2]);
  const auto b = aggregate(preds);
  CHECK(a.mu == doctest::Approx(b.mu).epsilon(1e-15));
  CHECK(a.sigma2 == doctest::Approx(b.sigma2).epsilon(1e-15));
  CHECK_THROWS_AS((void)aggregate(std::vector<GaussianPrediction>{}), NumericError);
  CHECK_THROWS_AS((void)aggregate(std::vector<GaussianPrediction>{{0.0, 0.0}}),
                  NumericError);
}

TEST_CASE("disagreement adds variance") {
  Rng rng(50);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<GaussianPrediction> preds;
    double mean_var = 0;
    for (int k = 0; k < 5; ++k) {
      preds.push_back({rng.uniform(-2, 2), rng.uniform(0.1, 2)});
      mean_var += preds.back().sigma2 / 5;
    }
    CHECK(aggregate(preds).sigma2 >= mean_var - 1e-15);
  }
  // equality iff all means agree
  const std::vector<GaussianPrediction> equal{{0.5, 0.3}, {0.5, 0.9}, {0.5, 0.1}};
  const double mean_var = (0.3 + 0.9 + 0.1) / 3;
  CHECK(aggregate(equal).sigma2 == doctest::Approx(mean_var).epsilon(1e-15));
}

TEST_CASE("aggregate matches Monte-Carlo mixture moments") {
  Rng rng(51);
  std::vector<GaussianPrediction> preds;
  for (int k = 0; k < 5; ++k) preds.push_back({rng.uniform(-2, 2), rng.uniform(0.1, 2)});
  const auto agg = aggregate(preds);

  const std::size_t draws = 200000;
  Rng mc(52);
  double sum = 0, sum2 = 0;
  for (std::size_t i = 0; i < draws; ++i) {
    const auto& p = preds[mc.below(preds.size())];
    const double v = p.mu + std::sqrt(p.sigma2) * mc.normal();
    sum += v;
    sum2 += v * v;
  }
  const double m = static_cast<double>(draws);
  const double mc_mean = sum / m;
  const double mc_var = (sum2 - m * mc_mean * mc_mean) / (m - 1);
  const double se_mean = std::sqrt(agg.sigma2 / m);
  CHECK(std::abs(mc_mean - agg.mu) < 4 * se_mean);
  // crude fourth-moment bound is enough at this draw count
  CHECK(std::abs(mc_var - agg.sigma2) / agg.sigma2 < 0.03);
}

TEST_CASE("aggregate_point uses population variance with a floor") {
  const std::vector<double> mus{1.0, 2.0, 3.0};
  const auto agg = aggregate_point(mus);
  CHECK(agg.mu == doctest::Approx(2.0));
  CHECK(agg.sigma2 == doctest::Approx(2.0 / 3.0));
  const std::vector<double> same{0.4, 0.4};
  CHECK(aggregate_point(same).sigma2 == 1e-12);
  CHECK_THROWS_AS((void)aggregate_point(std::vector<double>{}), NumericError);
}

TEST_CASE("training reduces the loss on a linear task") {
  Rng data_rng(53);
  Dataset data;
  data.n = 64;
  data.d = 1;
  for (std::size_t i = 0; i < data.n; ++i) {
    const double x = data_rng.uniform(0, 1);
    data.x.push_back(x);
    data.y.push_back(0.4 * x + 0.2);
  }
  const Architecture arch{1, {8}, 1, HeadKind::kIdentity};
  const LossSpec spec{LossKind::kMse, 0.01, 1e-300};
  TrainSchedule schedule;
  schedule.epochs = 100;
  schedule.batch_size = 16;
  schedule.opt.lr = 1e-2;
  schedule.opt.weight_decay = 0.0;

  Rng init_rng(54);
  MlpModel model = init_model(arch, init_rng);
  double before = 0, after = 0;
  for (std::size_t i = 0; i < data.n; ++i) {
    const double r = data.y[i] - forward(model, data.row(i))[0];
    before += r * r / static_cast<double>(data.n);
  }
  Rng train_rng(55);
  const MlpModel trained = train_member(model, data, spec, schedule, train_rng);
  for (std::size_t i = 0; i < data.n; ++i) {
    const double r = data.y[i] - forward(trained, data.row(i))[0];
    after += r * r / static_cast<double>(data.n);
  }
  CHECK(after < before);
  CHECK(after < 1e-3);
}

TEST_CASE("train_member is deterministic in the seed") {
  Rng data_rng(56);
  const Dataset data = toy_cubic(20, -4, 4, 3, data_rng);
  const Architecture arch{1, {6}, 2, HeadKind::kSoftplusVar};
  const LossSpec spec{LossKind::kBvm, 1.0, 1e-300};
  TrainSchedule schedule;
  schedule.epochs = 20;
  schedule.batch_size = 20;
  schedule.opt.lr = 1e-2;
  schedule.opt.weight_decay = 0.0;

  Rng init_rng(57);
  const MlpModel model = init_model(arch, init_rng);
  Rng ta(58), tb(58);
  const MlpModel a = train_member(model, data, spec, schedule, ta);
  const MlpModel b = train_member(model, data, spec, schedule, tb);
  for (std::size_t l = 0; l < a.layers.size(); ++l) {
    CHECK(a.layers[l].w == b.layers[l].w);
    CHECK(a.layers[l].b == b.layers[l].b);
  }
}

TEST_CASE("train_member rejects a one-output model for NLL") {
  Rng data_rng(59);
  const Dataset data = toy_cubic(8, -4, 4, 3, data_rng);
  const Architecture arch{1, {4}, 1, HeadKind::kIdentity};
  Rng init_rng(60), train_rng(61);
  MlpModel model = init_model(arch, init_rng);
  CHECK_THROWS_AS((void)train_member(model, data, {LossKind::kNll, 0.01, 1e-300},
                                     TrainSchedule{}, train_rng),
                  NumericError);
}

TEST_CASE("non-finite loss aborts with a diagnostic") {
  Dataset data;
  data.n = 4;
  data.d = 1;
  data.x = {0.1, 0.2, 0.3, 0.4};
  data.y = {1e308, 1e308, 1e308, 1e308};  // residual squares overflow
  const Architecture arch{1, {4}, 1, HeadKind::kIdentity};
  Rng init_rng(62), train_rng(63);
  MlpModel model = init_model(arch, init_rng);
  TrainSchedule schedule;
  schedule.epochs = 1;
  schedule.batch_size = 4;
  try {
    (void)train_member(model, data, {LossKind::kMse, 0.01, 1e-300}, schedule, train_rng);
    FAIL("expected NumericError");
  } catch (const NumericError& err) {
    CHECK(std::string(err.what()).find("batch") != std::string::npos);
  }
}

TEST_CASE("cubic toy BVM training beats the untrained net") {
  const LossSpec spec{LossKind::kBvm, 1.0, 1e-300};
  TrainSchedule schedule;
  schedule.epochs = 200;
  schedule.batch_size = 20;
  schedule.opt.lr = 1e-2;
  schedule.opt.weight_decay = 0.0;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    Rng data_rng(300 + seed);
    const Dataset data = toy_cubic(20, -4, 4, 3, data_rng);
    Rng rng(400 + seed);
    EnsembleModel fresh;
    fresh.spec = spec;
    Rng init_rng = rng.child(0);
    fresh.members.push_back(init_model({1, {16}, 2, HeadKind::kSoftplusVar}, init_rng));
    const double before = train_loss(fresh, data);
    Rng train_rng = rng.child(1);
    EnsembleModel trained = fresh;
    trained.members[0] =
        train_member(fresh.members[0], data, spec, schedule, train_rng);
    CHECK(train_loss(trained, data) < before);
  }
}

TEST_CASE("ensemble members share the seed layout and differ pairwise") {
  Rng data_rng(64);
  const Dataset data = toy_cubic(20, -4, 4, 3, data_rng);
  const Architecture arch{1, {6}, 2, HeadKind::kSoftplusVar};
  const LossSpec spec{LossKind::kBvm, 1.0, 1e-300};
  TrainSchedule schedule;
  schedule.epochs = 5;
  schedule.batch_size = 20;
  schedule.opt.lr = 1e-2;

  Rng ra(65), rb(65);
  const EnsembleModel a = train_ensemble(3, arch, data, spec, schedule, ra);
  const EnsembleModel b = train_ensemble(3, arch, data, spec, schedule, rb);
  CHECK(a.members.size() == 3);
  CHECK(a.member_seeds.size() == 3);
  for (std::size_t m = 0; m < 3; ++m) {
    CHECK(a.members[m].layers[0].w == b.members[m].layers[0].w);
  }
  CHECK(a.members[0].layers[0].w != a.members[1].layers[0].w);
  CHECK(a.members[1].layers[0].w != a.members[2].layers[0].w);
  CHECK_THROWS_AS((void)train_ensemble(0, arch, data, spec, schedule, ra), DataError);
}

TEST_CASE("predict with identity normalization equals raw aggregation") {
  Rng data_rng(66);
  const Dataset data = toy_cubic(20, -4, 4, 3, data_rng);
  Rng rng(67);
  TrainSchedule schedule;
  schedule.epochs = 3;
  schedule.batch_size = 20;
  const EnsembleModel ensemble = train_ensemble(
      2, {1, {6}, 2, HeadKind::kSoftplusVar}, data, {LossKind::kBvm, 1.0, 1e-300},
      schedule, rng);
  const std::vector<double> x{0.5};
  const auto direct = aggregate(member_predictions(ensemble, x));
  const auto via = predict(ensemble, x);
  CHECK(via.mu == direct.mu);
  CHECK(via.sigma2 == direct.sigma2);
}

TEST_CASE("predict de-normalizes mean and variance") {
  // hand-built member: zero weights, head biases chosen so the sigmoid
  // outputs are exactly (0.5, 0.01) in normalized units
  EnsembleModel ensemble;
  ensemble.spec = LossSpec{LossKind::kNll, 0.01, 1e-300};
  MlpModel model;
  model.arch = {1, {1}, 2, HeadKind::kSigmoidBoth};
  model.layers.push_back({1, 1, {0.0}, {0.0}});
  model.layers.push_back({1, 2, {0.0, 0.0}, {0.0, -std::log(99.0)}});
  ensemble.members.push_back(model);
  ensemble.norm.identity = false;
  ensemble.norm.mean = {0.0};
  ensemble.norm.std = {1.0};
  ensemble.norm.y_min = 0.0;
  ensemble.norm.y_max = 10.0;

  const auto p = predict(ensemble, std::vector<double>{0.3});
  CHECK(p.mu == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(p.sigma2 == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("checkpoints round-trip the full ensemble") {
  Rng data_rng(68);
  const Dataset data = toy_cubic(24, -4, 4, 3, data_rng);
  const NormalizationMeta norm = fit_normalization(data);
  const Dataset scaled = apply_normalization(data, norm);
  Rng rng(69);
  TrainSchedule schedule;
  schedule.epochs = 4;
  schedule.batch_size = 8;
  EnsembleModel ensemble =
      train_ensemble(2, {1, {5}, 2, HeadKind::kSigmoidBoth}, scaled,
                     {LossKind::kBvm, 0.05, 1e-300}, schedule, rng);
  ensemble.norm = norm;

  const auto path = temp_path("uqr_ckpt.json");
  save_checkpoint(path, ensemble);
  const EnsembleModel back = load_checkpoint(path);
  CHECK(back.members.size() == ensemble.members.size());
  CHECK(back.member_seeds == ensemble.member_seeds);
  CHECK(back.spec.kind == ensemble.spec.kind);
  CHECK(back.spec.epsilon == ensemble.spec.epsilon);
  CHECK(back.norm.identity == ensemble.norm.identity);
  CHECK(back.norm.y_min == ensemble.norm.y_min);
  for (double xv : {-3.0, 0.0, 2.5}) {
    const std::vector<double> x{xv};
    const auto a = predict(ensemble, x);
    const auto b = predict(back, x);
    CHECK(a.mu == b.mu);
    CHECK(a.sigma2 == b.sigma2);
  }
}

TEST_CASE("corrupt checkpoints are data errors") {
  const auto path = temp_path("uqr_ckpt_bad.json");
  {
    std::ofstream fh(path);
    fh << "{ not json";
  }
  CHECK_THROWS_AS((void)load_checkpoint(path), DataError);
  {
    std::ofstream fh(path);
    fh << "{\"schema_version\": 99}";
  }
  CHECK_THROWS_AS((void)load_checkpoint(path), DataError);
  CHECK_THROWS_AS((void)load_checkpoint(temp_path("uqr_ckpt_missing.json")), DataError);
}
