#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>

#include "uqr/ensemble.hpp"
#include "uqr/isolation_forest.hpp"

namespace uqr {

double rmse(std::span<const GaussianPrediction> preds,
            std::span<const double> targets);

// mean of 0.5*log(2*pi*sigma2) + (t-mu)^2/(2*sigma2), original target units
double predictive_nll(std::span<const GaussianPrediction> preds,
                      std::span<const double> targets);

struct CalibrationCurve {
  std::array<double, 9> expected{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  std::array<double, 9> observed{};
};

// observed coverage of central intervals mu +/- q((1+z)/2) * sigma
CalibrationCurve calibration_curve(std::span<const GaussianPrediction> preds,
                                   std::span<const double> targets);

struct RunMeta {
  std::uint64_t seed = 0;
  LossSpec spec;
  int k = 5;
  int epochs = 40;
  int batch_size = 32;
  double lr = 3e-4;
  double weight_decay = 0.01;
  bool decoupled_decay = true;
  std::string dataset;
};

struct EvalReport {
  double rmse = 0.0;
  double nll = 0.0;
  CalibrationCurve calibration;
  std::optional<StatDiff> stat_diff;
  RunMeta meta;
};

std::string report_to_json(const EvalReport& report);
EvalReport report_from_json(const std::string& text);
void write_report(const std::string& path, const EvalReport& report);

}  // namespace uqr
