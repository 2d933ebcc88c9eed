#include "uqr/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "json.hpp"
#include "uqr/errors.hpp"
#include "uqr/isolation_forest.hpp"

namespace uqr {

namespace {

// child-stream ids of a repetition's Rng
constexpr std::uint64_t kStreamSplit = 0;
constexpr std::uint64_t kStreamTrain = 1;
constexpr std::uint64_t kStreamTrainSecond = 2;  // second ensemble (OOD pairing)
constexpr std::uint64_t kStreamForest = 3;
constexpr std::uint64_t kStreamGenerate = 4;  // dataset synthesis

Rng rep_rng(const ExperimentConfig& config, int rep) {
  return Rng(config.seed).child(10000 + static_cast<std::uint64_t>(rep));
}

double parse_double_or_throw(const std::string& value, const std::string& key) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw DataError("config: bad numeric value '" + value + "' for " + key);
  }
}

long parse_long_or_throw(const std::string& value, const std::string& key) {
  try {
    std::size_t used = 0;
    const long v = std::stol(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw DataError("config: bad integer value '" + value + "' for " + key);
  }
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

void apply_config_line(ExperimentConfig& config, const std::string& key,
                       const std::string& value) {
  if (key == "dataset") config.dataset = value;
  else if (key == "target_column") config.target_column = value;
  else if (key == "generator") config.generator = value;
  else if (key == "gen_n") config.gen_n = static_cast<std::size_t>(parse_long_or_throw(value, key));
  else if (key == "gen_lo") config.gen_lo = parse_double_or_throw(value, key);
  else if (key == "gen_hi") config.gen_hi = parse_double_or_throw(value, key);
  else if (key == "gen_noise") config.gen_noise = parse_double_or_throw(value, key);
  else if (key == "hidden") config.hidden = static_cast<int>(parse_long_or_throw(value, key));
  else if (key == "normalize") config.normalize = value == "true" || value == "1";
  else if (key == "loss") config.loss = loss_kind_from_name(value);
  else if (key == "epsilon") config.epsilon = parse_double_or_throw(value, key);
  else if (key == "k") config.k = static_cast<int>(parse_long_or_throw(value, key));
  else if (key == "epochs") config.epochs = static_cast<int>(parse_long_or_throw(value, key));
  else if (key == "batch_size") config.batch_size = static_cast<int>(parse_long_or_throw(value, key));
  else if (key == "lr") config.lr = parse_double_or_throw(value, key);
  else if (key == "weight_decay") config.weight_decay = parse_double_or_throw(value, key);
  else if (key == "optimizer") {
    if (value == "adamw") config.decoupled_decay = true;
    else if (value == "adam") config.decoupled_decay = false;
    else throw DataError("config: optimizer must be adamw or adam");
  } else if (key == "split_mode") {
    if (value != "random" && value != "outlier") {
      throw DataError("config: split_mode must be random or outlier");
    }
    config.split_mode = value;
  } else if (key == "split_fraction") config.split_fraction = parse_double_or_throw(value, key);
  else if (key == "forest_trees") config.forest_trees = static_cast<int>(parse_long_or_throw(value, key));
  else if (key == "forest_psi") config.forest_psi = static_cast<int>(parse_long_or_throw(value, key));
  else if (key == "repetitions") config.repetitions = static_cast<int>(parse_long_or_throw(value, key));
  else if (key == "seed") config.seed = static_cast<std::uint64_t>(parse_long_or_throw(value, key));
  else if (key == "out_dir") config.out_dir = value;
  else if (key == "preset") apply_preset(config, value);
  else throw DataError("config: unknown key '" + key + "'");
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream fh(path);
  if (!fh) throw DataError("cannot open config " + path);
  ExperimentConfig config;
  std::string line;
  int lineno = 0;
  while (std::getline(fh, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw DataError(path + ":" + std::to_string(lineno) + ": expected key = value");
    }
    apply_config_line(config, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return config;
}

std::string config_schema_help() {
  return
      "config keys (key = value, '#' comments):\n"
      "  dataset         CSV path (header row; target column last by default)\n"
      "  target_column   target column name (default: last column)\n"
      "  generator       toy-cubic | heteroscedastic (used when dataset empty)\n"
      "  gen_n           generator sample count            (default 20)\n"
      "  gen_lo, gen_hi  generator x range                 (default -4, 4)\n"
      "  gen_noise       toy-cubic noise standard deviation (default 3)\n"
      "  hidden          hidden units, one ReLU layer      (default 50)\n"
      "  normalize       true|false feature/target scaling (default true)\n"
      "  loss            mse | nll | bvm                   (default bvm)\n"
      "  epsilon         BVM agreement half-width          (default 0.01)\n"
      "  k               ensemble size                     (default 5)\n"
      "  epochs          training epochs                   (default 40)\n"
      "  batch_size      minibatch size                    (default 32)\n"
      "  lr              learning rate                     (default 3e-4)\n"
      "  weight_decay    AdamW decay coefficient           (default 0.01)\n"
      "  optimizer       adamw | adam                      (default adamw)\n"
      "  split_mode      random | outlier                  (default random)\n"
      "  split_fraction  test fraction                     (default 0.1)\n"
      "  forest_trees    Isolation Forest size             (default 100)\n"
      "  forest_psi      subsample size, 0 = min(256,N)    (default 0)\n"
      "  repetitions     split repetitions                 (default 20)\n"
      "  seed            master seed                       (default 1)\n"
      "  out_dir         output directory (empty: no files)\n"
      "  preset          table1 | ood | toy-cubic | protein-scale\n";
}

void apply_preset(ExperimentConfig& config, const std::string& name) {
  if (name == "table1") {
    config.loss = LossKind::kBvm;
    config.epsilon = 0.01;
    config.k = 5;
    config.epochs = 40;
    config.batch_size = 32;
    config.lr = 3e-4;
    config.weight_decay = 0.01;
    config.decoupled_decay = true;
    config.hidden = 50;
    config.normalize = true;
    config.split_mode = "random";
    config.split_fraction = 0.1;
    config.repetitions = 20;
  } else if (name == "protein-scale") {
    apply_preset(config, "table1");
    config.hidden = 100;
    config.repetitions = 5;
  } else if (name == "ood") {
    // outlier-split protocol: plain Adam, lr 3e-3, batch 16
    config.split_mode = "outlier";
    config.split_fraction = 0.1;
    config.lr = 3e-3;
    config.batch_size = 16;
    config.epochs = 40;
    config.k = 5;
    config.decoupled_decay = false;
    config.hidden = 50;
    config.normalize = true;
    config.repetitions = 5;
  } else if (name == "toy-cubic") {
    // unnormalized cubic toy: full batch, long schedule, softplus variance
    config.generator = "toy-cubic";
    config.dataset.clear();
    config.gen_n = 20;
    config.gen_lo = -4.0;
    config.gen_hi = 4.0;
    config.gen_noise = 3.0;
    config.normalize = false;
    config.loss = LossKind::kBvm;
    config.epsilon = 1.0;
    config.hidden = 100;
    config.k = 5;
    config.epochs = 1000;
    config.batch_size = 20;
    config.lr = 1e-2;
    config.weight_decay = 0.0;
    config.decoupled_decay = true;
  } else {
    throw DataError("unknown preset '" + name + "'");
  }
}

Dataset load_experiment_data(const ExperimentConfig& config) {
  if (!config.dataset.empty()) {
    Dataset data = load_csv(config.dataset, config.target_column);
    if (data.rejected_rows > 0) {
      std::cerr << "warning: " << config.dataset << ": dropped "
                << data.rejected_rows << " unusable row(s)\n";
    }
    return data;
  }
  if (config.generator.empty()) {
    throw DataError("config: need a dataset path or a generator name");
  }
  Rng gen_rng = Rng(config.seed).child(kStreamGenerate);
  if (config.generator == "toy-cubic") {
    return toy_cubic(config.gen_n, config.gen_lo, config.gen_hi,
                     config.gen_noise, gen_rng);
  }
  if (config.generator == "heteroscedastic") {
    return hetero_synthetic(config.gen_n, gen_rng);
  }
  throw DataError("unknown generator '" + config.generator + "'");
}

namespace {

Architecture arch_for(const ExperimentConfig& config, LossKind loss,
                      std::size_t input_dim) {
  Architecture arch;
  arch.input_dim = static_cast<int>(input_dim);
  arch.hidden = {config.hidden};
  if (loss == LossKind::kMse) {
    arch.output_dim = 1;
    arch.head = config.normalize ? HeadKind::kSigmoidBoth : HeadKind::kIdentity;
  } else {
    arch.output_dim = 2;
    arch.head = config.normalize ? HeadKind::kSigmoidBoth : HeadKind::kSoftplusVar;
  }
  return arch;
}

TrainSchedule schedule_for(const ExperimentConfig& config) {
  TrainSchedule schedule;
  schedule.epochs = config.epochs;
  schedule.batch_size = config.batch_size;
  schedule.opt.lr = config.lr;
  schedule.opt.weight_decay = config.weight_decay;
  schedule.opt.decoupled_decay = config.decoupled_decay;
  return schedule;
}

RunMeta meta_for(const ExperimentConfig& config, LossKind loss,
                 const std::string& dataset_tag) {
  RunMeta meta;
  meta.seed = config.seed;
  meta.spec = LossSpec{loss, config.epsilon, 1e-300};
  meta.k = config.k;
  meta.epochs = config.epochs;
  meta.batch_size = config.batch_size;
  meta.lr = config.lr;
  meta.weight_decay = config.weight_decay;
  meta.decoupled_decay = config.decoupled_decay;
  meta.dataset = dataset_tag;
  return meta;
}

SplitIndices make_split(const ExperimentConfig& config, const Dataset& data,
                        Rng& rng, StatDiff* stat_diff) {
  if (config.split_mode == "outlier") {
    Rng forest_rng = rng.child(kStreamForest);
    return outlier_split(data, config.split_fraction,
                         {config.forest_trees, config.forest_psi}, forest_rng,
                         stat_diff);
  }
  Rng split_rng = rng.child(kStreamSplit);
  return random_split(data.n, config.split_fraction, split_rng);
}

// train one ensemble on the given split and evaluate it on the test side
EnsembleModel train_on_split(const ExperimentConfig& config, LossKind loss,
                             const Dataset& data, const SplitIndices& split,
                             Rng train_rng) {
  const Dataset train_raw = take_rows(data, split.train);
  NormalizationMeta norm;
  if (config.normalize) {
    norm = fit_normalization(train_raw);
  } else {
    norm.identity = true;
  }
  const Dataset train = apply_normalization(train_raw, norm);
  LossSpec spec{loss, config.epsilon, 1e-300};
  EnsembleModel ensemble =
      train_ensemble(config.k, arch_for(config, loss, data.d), train, spec,
                     schedule_for(config), train_rng);
  ensemble.norm = norm;
  return ensemble;
}

std::vector<GaussianPrediction> predict_rows(const EnsembleModel& ensemble,
                                             const NormalizationMeta& norm,
                                             const Dataset& test_raw) {
  const Dataset test = apply_normalization(test_raw, norm);
  std::vector<GaussianPrediction> preds;
  preds.reserve(test.n);
  for (std::size_t i = 0; i < test.n; ++i) {
    preds.push_back(predict(ensemble, test.row(i)));
  }
  return preds;
}

EvalReport evaluate_split(const ExperimentConfig& config, LossKind loss,
                          const Dataset& data, const SplitIndices& split,
                          const EnsembleModel& ensemble,
                          const StatDiff* stat_diff) {
  const Dataset test_raw = take_rows(data, split.test);
  // features standardized with train statistics; predictions come back in
  // original target units via the ensemble's stored normalization
  const auto preds = predict_rows(ensemble, ensemble.norm, test_raw);
  EvalReport report;
  report.rmse = rmse(preds, test_raw.y);
  report.nll = predictive_nll(preds, test_raw.y);
  report.calibration = calibration_curve(preds, test_raw.y);
  if (stat_diff) report.stat_diff = *stat_diff;
  report.meta = meta_for(config, loss, data.provenance);
  return report;
}

void ensure_out_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory " + dir);
}

std::string rep_tag(int rep) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "rep%03d", rep);
  return buf;
}

void write_split_manifests(const std::string& dir, const std::string& tag,
                           const SplitIndices& split) {
  write_manifest(dir + "/" + tag + ".train.idx", split.train);
  write_manifest(dir + "/" + tag + ".test.idx", split.test);
}

// mean and standard error of the mean (sample std / sqrt(R))
std::pair<double, double> mean_se(const std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  double mean = 0;
  for (double x : v) mean += x;
  mean /= n;
  if (v.size() < 2) return {mean, 0.0};
  double var = 0;
  for (double x : v) var += (x - mean) * (x - mean);
  var /= (n - 1.0);
  return {mean, std::sqrt(var / n)};
}

}  // namespace

BenchmarkResult run_benchmark(const ExperimentConfig& config) {
  const Dataset data = load_experiment_data(config);
  if (!config.out_dir.empty()) ensure_out_dir(config.out_dir);

  BenchmarkResult result;
  std::vector<double> rmses, nlls;
  for (int rep = 0; rep < config.repetitions; ++rep) {
    Rng rng = rep_rng(config, rep);
    try {
      StatDiff stat_diff;
      const bool outlier = config.split_mode == "outlier";
      SplitIndices split = make_split(config, data, rng, outlier ? &stat_diff : nullptr);
      audit_partition(data.n, split.train, split.test);
      EnsembleModel ensemble = train_on_split(config, config.loss, data, split,
                                              rng.child(kStreamTrain));
      EvalReport report = evaluate_split(config, config.loss, data, split, ensemble,
                                         outlier ? &stat_diff : nullptr);
      report.meta.seed = config.seed;
      rmses.push_back(report.rmse);
      nlls.push_back(report.nll);
      if (!config.out_dir.empty()) {
        write_report(config.out_dir + "/" + rep_tag(rep) + ".report.json", report);
        write_split_manifests(config.out_dir, rep_tag(rep), split);
      }
      result.reps.push_back({std::move(report), std::move(split)});
    } catch (const NumericError& err) {
      ++result.aborted;
      std::cerr << "repetition " << rep << " aborted: " << err.what() << "\n";
    }
  }
  if (result.aborted * 10 > config.repetitions) {
    throw NumericError("run_benchmark: " + std::to_string(result.aborted) + " of " +
                       std::to_string(config.repetitions) + " repetitions aborted");
  }
  if (result.reps.empty()) throw NumericError("run_benchmark: no completed repetitions");

  std::tie(result.mean_rmse, result.se_rmse) = mean_se(rmses);
  std::tie(result.mean_nll, result.se_nll) = mean_se(nlls);

  if (!config.out_dir.empty()) {
    nlohmann::json j = {{"schema_version", 1},
                        {"dataset", data.provenance},
                        {"loss", loss_kind_name(config.loss)},
                        {"repetitions", static_cast<int>(result.reps.size())},
                        {"aborted", result.aborted},
                        {"rmse_mean", result.mean_rmse},
                        {"rmse_se", result.se_rmse},
                        {"nll_mean", result.mean_nll},
                        {"nll_se", result.se_nll},
                        {"seed", config.seed}};
    std::ofstream fh(config.out_dir + "/summary.json");
    fh << j.dump(2) << "\n";
    std::ofstream csv(config.out_dir + "/summary.csv");
    csv.precision(17);
    csv << "rep,rmse,nll\n";
    for (std::size_t i = 0; i < result.reps.size(); ++i) {
      csv << i << "," << result.reps[i].report.rmse << ","
          << result.reps[i].report.nll << "\n";
    }
  }
  return result;
}

OodResult run_ood_benchmark(const ExperimentConfig& config) {
  if (config.split_mode != "outlier") {
    throw DataError("run_ood_benchmark: split_mode must be outlier");
  }
  const Dataset data = load_experiment_data(config);
  if (!config.out_dir.empty()) ensure_out_dir(config.out_dir);

  OodResult result;
  double sum_nll_trained = 0, sum_bvm_trained = 0;
  for (int rep = 0; rep < config.repetitions; ++rep) {
    Rng rng = rep_rng(config, rep);
    StatDiff stat_diff;
    SplitIndices split = make_split(config, data, rng, &stat_diff);
    audit_partition(data.n, split.train, split.test);

    EnsembleModel nll_ens = train_on_split(config, LossKind::kNll, data, split,
                                           rng.child(kStreamTrain));
    EnsembleModel bvm_ens = train_on_split(config, LossKind::kBvm, data, split,
                                           rng.child(kStreamTrainSecond));
    OodRepetition pair;
    pair.stat_diff = stat_diff;
    pair.nll_report =
        evaluate_split(config, LossKind::kNll, data, split, nll_ens, &stat_diff);
    pair.bvm_report =
        evaluate_split(config, LossKind::kBvm, data, split, bvm_ens, &stat_diff);
    sum_nll_trained += pair.nll_report.nll;
    sum_bvm_trained += pair.bvm_report.nll;
    if (pair.bvm_report.nll < pair.nll_report.nll) ++result.bvm_wins;
    if (!config.out_dir.empty()) {
      write_report(config.out_dir + "/" + rep_tag(rep) + ".nll.report.json",
                   pair.nll_report);
      write_report(config.out_dir + "/" + rep_tag(rep) + ".bvm.report.json",
                   pair.bvm_report);
      write_split_manifests(config.out_dir, rep_tag(rep), split);
    }
    result.reps.push_back(std::move(pair));
  }
  result.mean_nll_trained = sum_nll_trained / static_cast<double>(config.repetitions);
  result.mean_bvm_trained = sum_bvm_trained / static_cast<double>(config.repetitions);

  if (!config.out_dir.empty()) {
    nlohmann::json j = {{"schema_version", 1},
                        {"dataset", data.provenance},
                        {"repetitions", config.repetitions},
                        {"nll_trained_test_nll", result.mean_nll_trained},
                        {"bvm_trained_test_nll", result.mean_bvm_trained},
                        {"bvm_wins", result.bvm_wins},
                        {"stat_diff_mean", result.reps[0].stat_diff.mean_diff},
                        {"stat_diff_var", result.reps[0].stat_diff.var_diff},
                        {"seed", config.seed}};
    std::ofstream fh(config.out_dir + "/ood_summary.json");
    fh << j.dump(2) << "\n";
  }
  return result;
}

CalibrateResult run_calibrate(const ExperimentConfig& config) {
  const Dataset data = load_experiment_data(config);
  if (!config.out_dir.empty()) ensure_out_dir(config.out_dir);

  CalibrateResult result;
  result.mse.observed.fill(0);
  result.nll.observed.fill(0);
  result.bvm.observed.fill(0);
  const LossKind kinds[] = {LossKind::kMse, LossKind::kNll, LossKind::kBvm};
  CalibrationCurve* curves[] = {&result.mse, &result.nll, &result.bvm};

  for (int rep = 0; rep < config.repetitions; ++rep) {
    Rng rng = rep_rng(config, rep);
    SplitIndices split = make_split(config, data, rng, nullptr);
    audit_partition(data.n, split.train, split.test);
    for (int ki = 0; ki < 3; ++ki) {
      EnsembleModel ensemble = train_on_split(config, kinds[ki], data, split,
                                              rng.child(kStreamTrain + ki));
      EvalReport report =
          evaluate_split(config, kinds[ki], data, split, ensemble, nullptr);
      for (std::size_t zi = 0; zi < 9; ++zi) {
        curves[ki]->observed[zi] += report.calibration.observed[zi];
      }
    }
  }
  for (auto* curve : curves) {
    for (auto& o : curve->observed) o /= static_cast<double>(config.repetitions);
  }

  if (!config.out_dir.empty()) {
    const char* names[] = {"mse", "nll", "bvm"};
    for (int ki = 0; ki < 3; ++ki) {
      std::ofstream csv(config.out_dir + "/calibration_" + names[ki] + ".csv");
      csv.precision(17);
      csv << "expected,observed\n";
      for (std::size_t zi = 0; zi < 9; ++zi) {
        csv << curves[ki]->expected[zi] << "," << curves[ki]->observed[zi] << "\n";
      }
    }
  }
  return result;
}

void cmd_generate(const ExperimentConfig& config, const std::string& out_path) {
  if (config.generator.empty()) throw DataError("generate: need a generator name");
  ExperimentConfig gen_config = config;
  gen_config.dataset.clear();
  const Dataset data = load_experiment_data(gen_config);
  write_csv(out_path, data);
  nlohmann::json sidecar = {{"schema_version", 1},
                            {"generator", config.generator},
                            {"n", config.gen_n},
                            {"lo", config.gen_lo},
                            {"hi", config.gen_hi},
                            {"noise_sd", config.gen_noise},
                            {"seed", config.seed}};
  std::ofstream fh(out_path + ".meta.json");
  if (!fh) throw DataError("cannot write " + out_path + ".meta.json");
  fh << sidecar.dump(2) << "\n";
}

SplitIndices cmd_split(const ExperimentConfig& config) {
  const Dataset data = load_experiment_data(config);
  Rng rng = rep_rng(config, 0);
  StatDiff stat_diff;
  const bool outlier = config.split_mode == "outlier";
  SplitIndices split = make_split(config, data, rng, outlier ? &stat_diff : nullptr);
  audit_partition(data.n, split.train, split.test);
  if (!config.out_dir.empty()) {
    ensure_out_dir(config.out_dir);
    write_split_manifests(config.out_dir, "split", split);
    if (outlier) {
      nlohmann::json j = {{"mean_diff", stat_diff.mean_diff},
                          {"var_diff", stat_diff.var_diff}};
      std::ofstream fh(config.out_dir + "/stat_diff.json");
      fh << j.dump(2) << "\n";
    }
  }
  return split;
}

}  // namespace uqr
