#include "uqr/eval.hpp"

#include <cmath>
#include <fstream>
#include <numbers>

#include "json.hpp"
#include "uqr/errors.hpp"
#include "uqr/special.hpp"

namespace uqr {

namespace {

void check_lengths(std::span<const GaussianPrediction> preds,
                   std::span<const double> targets) {
  if (preds.size() != targets.size() || preds.empty()) {
    throw NumericError("eval: prediction/target length mismatch");
  }
}

}  // namespace

double rmse(std::span<const GaussianPrediction> preds,
            std::span<const double> targets) {
  check_lengths(preds, targets);
  double acc = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const double r = targets[i] - preds[i].mu;
    acc += r * r;
  }
  return std::sqrt(acc / static_cast<double>(preds.size()));
}

double predictive_nll(std::span<const GaussianPrediction> preds,
                      std::span<const double> targets) {
  check_lengths(preds, targets);
  double acc = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (!(preds[i].sigma2 > 0.0)) {
      throw NumericError("predictive_nll: nonpositive variance");
    }
    const double r = targets[i] - preds[i].mu;
    acc += 0.5 * std::log(2.0 * std::numbers::pi * preds[i].sigma2) +
           r * r / (2.0 * preds[i].sigma2);
  }
  return acc / static_cast<double>(preds.size());
}

CalibrationCurve calibration_curve(std::span<const GaussianPrediction> preds,
                                   std::span<const double> targets) {
  check_lengths(preds, targets);
  CalibrationCurve curve;
  std::array<double, 9> half_width_mult{};
  for (std::size_t zi = 0; zi < 9; ++zi) {
    half_width_mult[zi] = std_normal_quantile(0.5 * (1.0 + curve.expected[zi]));
  }
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (!(preds[i].sigma2 > 0.0)) {
      throw NumericError("calibration_curve: nonpositive variance");
    }
    const double sigma = std::sqrt(preds[i].sigma2);
    const double dev = std::abs(targets[i] - preds[i].mu);
    for (std::size_t zi = 0; zi < 9; ++zi) {
      if (dev <= half_width_mult[zi] * sigma) curve.observed[zi] += 1.0;
    }
  }
  for (auto& o : curve.observed) o /= static_cast<double>(preds.size());
  return curve;
}

namespace {

using nlohmann::json;

json meta_to_json(const RunMeta& meta) {
  return {{"seed", meta.seed},
          {"loss", loss_kind_name(meta.spec.kind)},
          {"epsilon", meta.spec.epsilon},
          {"k", meta.k},
          {"epochs", meta.epochs},
          {"batch_size", meta.batch_size},
          {"lr", meta.lr},
          {"weight_decay", meta.weight_decay},
          {"optimizer", meta.decoupled_decay ? "adamw" : "adam"},
          {"dataset", meta.dataset}};
}

RunMeta meta_from_json(const json& j) {
  RunMeta meta;
  meta.seed = j.at("seed").get<std::uint64_t>();
  meta.spec.kind = loss_kind_from_name(j.at("loss").get<std::string>());
  meta.spec.epsilon = j.at("epsilon").get<double>();
  meta.k = j.at("k").get<int>();
  meta.epochs = j.at("epochs").get<int>();
  meta.batch_size = j.at("batch_size").get<int>();
  meta.lr = j.at("lr").get<double>();
  meta.weight_decay = j.at("weight_decay").get<double>();
  meta.decoupled_decay = j.at("optimizer").get<std::string>() == "adamw";
  meta.dataset = j.at("dataset").get<std::string>();
  return meta;
}

}  // namespace

std::string report_to_json(const EvalReport& report) {
  json j = {{"schema_version", 1},
            {"rmse", report.rmse},
            {"nll", report.nll},
            {"calibration",
             {{"expected", report.calibration.expected},
              {"observed", report.calibration.observed}}},
            {"meta", meta_to_json(report.meta)}};
  if (report.stat_diff) {
    j["stat_diff"] = {{"mean_diff", report.stat_diff->mean_diff},
                      {"var_diff", report.stat_diff->var_diff}};
  }
  return j.dump(2) + "\n";
}

EvalReport report_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& err) {
    throw DataError(std::string("report parse error: ") + err.what());
  }
  if (j.value("schema_version", 0) != 1) {
    throw DataError("report: unsupported schema version");
  }
  EvalReport report;
  report.rmse = j.at("rmse").get<double>();
  report.nll = j.at("nll").get<double>();
  const auto& cal = j.at("calibration");
  report.calibration.expected = cal.at("expected").get<std::array<double, 9>>();
  report.calibration.observed = cal.at("observed").get<std::array<double, 9>>();
  if (j.contains("stat_diff")) {
    report.stat_diff = StatDiff{j["stat_diff"].at("mean_diff").get<double>(),
                                j["stat_diff"].at("var_diff").get<double>()};
  }
  report.meta = meta_from_json(j.at("meta"));
  return report;
}

void write_report(const std::string& path, const EvalReport& report) {
  std::ofstream fh(path);
  if (!fh) throw DataError("cannot write " + path);
  fh << report_to_json(report);
  if (!fh) throw DataError("write failed: " + path);
}

}  // namespace uqr
