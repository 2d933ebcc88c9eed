#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"
#include "uqr/errors.hpp"
#include "uqr/eval.hpp"
#include "uqr/rng.hpp"

using namespace uqr;

TEST_CASE("rmse basics") {
  const std::vector<GaussianPrediction> perfect{{1, 1}, {2, 1}, {3, 1}};
  const std::vector<double> targets{1, 2, 3};
  CHECK(rmse(perfect, targets) == 0.0);

  const std::vector<GaussianPrediction> off{{4, 1}, {6, 1}};
  const std::vector<double> t2{7, 2};  // residuals 3 and -4
  CHECK(rmse(off, t2) == doctest::Approx(std::sqrt(12.5)).epsilon(1e-15));

  const std::vector<GaussianPrediction> swapped{{6, 1}, {4, 1}};
  const std::vector<double> t2s{2, 7};
  CHECK(rmse(swapped, t2s) == rmse(off, t2));

  CHECK_THROWS_AS((void)rmse(off, targets), NumericError);
  CHECK_THROWS_AS((void)rmse(std::vector<GaussianPrediction>{}, std::vector<double>{}),
                  NumericError);
}

TEST_CASE("predictive_nll closed-form values") {
  const std::vector<GaussianPrediction> exact{{5, 1}, {7, 1}};
  const std::vector<double> t{5, 7};
  CHECK(predictive_nll(exact, t) == doctest::Approx(0.9189385332046727).epsilon(1e-15));

  const std::vector<GaussianPrediction> narrow{{0, 1}};
  const std::vector<GaussianPrediction> wide{{0, 100}};
  const std::vector<double> far{10};
  CHECK(predictive_nll(narrow, far) ==
        doctest::Approx(50.918938533204673).epsilon(1e-14));
  CHECK(predictive_nll(wide, far) ==
        doctest::Approx(3.7215236261987183).epsilon(1e-14));

  const std::vector<GaussianPrediction> bad{{0, 0}};
  CHECK_THROWS_AS((void)predictive_nll(bad, far), NumericError);
}

TEST_CASE("predictive_nll agrees with the batch NLL loss") {
  Rng rng(70);
  std::vector<GaussianPrediction> preds;
  std::vector<double> targets, mus, s2s;
  for (int i = 0; i < 50; ++i) {
    preds.push_back({rng.uniform(-3, 3), rng.uniform(0.05, 4)});
    targets.push_back(rng.uniform(-3, 3));
    mus.push_back(preds.back().mu);
    s2s.push_back(preds.back().sigma2);
  }
  const double from_eval = predictive_nll(preds, targets);
  const double from_loss =
      batch_loss({LossKind::kNll, 0.01, 1e-300}, targets, mus, s2s).mean_loss;
  CHECK(std::abs(from_eval - from_loss) < 1e-12);
}

TEST_CASE("predictive_nll is minimized at the mean squared residual") {
  Rng rng(71);
  std::vector<double> targets;
  std::vector<GaussianPrediction> preds;
  double msr = 0;
  for (int i = 0; i < 40; ++i) {
    const double mu = rng.uniform(-1, 1);
    const double t = mu + 0.7 * rng.normal();
    preds.push_back({mu, 1.0});
    targets.push_back(t);
    msr += (t - mu) * (t - mu) / 40.0;
  }
  auto nll_at = [&](double s2) {
    auto scaled = preds;
    for (auto& p : scaled) p.sigma2 = s2;
    return predictive_nll(scaled, targets);
  };
  const double best = nll_at(msr);
  for (double s2 = 0.1 * msr; s2 <= 3.0 * msr; s2 += 0.05 * msr) {
    CHECK(nll_at(s2) >= best - 1e-12);
  }
}

TEST_CASE("calibration grid is fixed and observed fractions behave") {
  const std::vector<GaussianPrediction> preds{{0, 1e-12}, {0, 1e-12}};
  const std::vector<double> away{5, -5};
  const CalibrationCurve zero = calibration_curve(preds, away);
  for (std::size_t i = 0; i < 9; ++i) {
    CHECK(zero.expected[i] == doctest::Approx(0.1 * (1 + static_cast<double>(i))));
    CHECK(zero.observed[i] == 0.0);
  }
  const std::vector<GaussianPrediction> huge{{0, 1e12}, {0, 1e12}};
  const CalibrationCurve one = calibration_curve(huge, away);
  for (double o : one.observed) CHECK(o == 1.0);
}

TEST_CASE("calibration observed fraction is nondecreasing in z") {
  Rng rng(72);
  std::vector<GaussianPrediction> preds;
  std::vector<double> targets;
  for (int i = 0; i < 200; ++i) {
    preds.push_back({rng.uniform(-1, 1), rng.uniform(0.1, 2)});
    targets.push_back(rng.uniform(-2, 2));
  }
  const CalibrationCurve curve = calibration_curve(preds, targets);
  for (std::size_t i = 1; i < 9; ++i) CHECK(curve.observed[i] >= curve.observed[i - 1]);
}

TEST_CASE("calibration matches sampled Gaussians") {
  Rng rng(73);
  const std::size_t n = 100000;
  std::vector<GaussianPrediction> preds;
  std::vector<double> targets;
  preds.reserve(n);
  targets.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double mu = rng.uniform(-5, 5);
    const double sigma = rng.uniform(0.2, 3);
    preds.push_back({mu, sigma * sigma});
    targets.push_back(mu + sigma * rng.normal());
  }
  const CalibrationCurve curve = calibration_curve(preds, targets);
  for (std::size_t i = 0; i < 9; ++i) {
    CHECK(std::abs(curve.observed[i] - curve.expected[i]) <= 0.01);
  }
}

TEST_CASE("eval reports round-trip through the JSON schema") {
  EvalReport report;
  report.rmse = 3.0625;
  report.nll = 2.5123;
  report.calibration.observed = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.95};
  report.stat_diff = StatDiff{0.26, 0.10};
  report.meta.seed = 17;
  report.meta.spec = {LossKind::kBvm, 0.01, 1e-300};
  report.meta.k = 5;
  report.meta.epochs = 40;
  report.meta.batch_size = 32;
  report.meta.lr = 3e-4;
  report.meta.weight_decay = 0.01;
  report.meta.decoupled_decay = false;
  report.meta.dataset = "data/uci/boston.csv";

  const std::string text = report_to_json(report);
  CHECK(text.find("schema_version") != std::string::npos);
  const EvalReport back = report_from_json(text);
  CHECK(back.rmse == report.rmse);
  CHECK(back.nll == report.nll);
  CHECK(back.calibration.observed == report.calibration.observed);
  REQUIRE(back.stat_diff.has_value());
  CHECK(back.stat_diff->mean_diff == 0.26);
  CHECK(back.stat_diff->var_diff == 0.10);
  CHECK(back.meta.seed == 17);
  CHECK(back.meta.spec.kind == LossKind::kBvm);
  CHECK(back.meta.decoupled_decay == false);
  CHECK(back.meta.dataset == report.meta.dataset);

  EvalReport plain;
  plain.meta.spec = {LossKind::kMse, 0.01, 1e-300};
  const EvalReport plain_back = report_from_json(report_to_json(plain));
  CHECK_FALSE(plain_back.stat_diff.has_value());

  CHECK_THROWS_AS((void)report_from_json("{\"schema_version\": 2}"), DataError);
  CHECK_THROWS_AS((void)report_from_json("not json"), DataError);
}
