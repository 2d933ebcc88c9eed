#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "uqr/data.hpp"
#include "uqr/ensemble.hpp"
#include "uqr/eval.hpp"

namespace uqr {

// Defaults follow the benchmark protocol: K=5, 40 epochs, batch 32,
// AdamW(lr 3e-4, wd 0.01), eps=0.01, random 90/10 splits, 20 repetitions,
// one hidden layer of 50 ReLU units, sigmoid heads on normalized data.
struct ExperimentConfig {
  // data source: a CSV path, or a named generator when dataset is empty
  std::string dataset;
  std::string target_column;        // empty: last column
  std::string generator;            // "toy-cubic" | "heteroscedastic"
  std::size_t gen_n = 20;
  double gen_lo = -4.0, gen_hi = 4.0, gen_noise = 3.0;

  // model
  int hidden = 50;
  bool normalize = true;  // standardize features, map targets to [0,1]

  // loss
  LossKind loss = LossKind::kBvm;
  double epsilon = 0.01;

  // ensemble and schedule
  int k = 5;
  int epochs = 40;
  int batch_size = 32;
  double lr = 3e-4;
  double weight_decay = 0.01;
  bool decoupled_decay = true;  // AdamW; false: plain Adam

  // split
  std::string split_mode = "random";  // "random" | "outlier"
  double split_fraction = 0.1;
  int forest_trees = 100;
  int forest_psi = 0;  // 0: min(256, N)

  // run
  int repetitions = 20;
  std::uint64_t seed = 1;
  std::string out_dir;  // empty: no files written
};

// flat key = value text, '#' comments; unknown keys are errors
ExperimentConfig parse_config_file(const std::string& path);
void apply_config_line(ExperimentConfig& config, const std::string& key,
                       const std::string& value);
std::string config_schema_help();

// named presets adjusting the protocol knobs in one step
void apply_preset(ExperimentConfig& config, const std::string& name);

Dataset load_experiment_data(const ExperimentConfig& config);

struct RepetitionResult {
  EvalReport report;
  SplitIndices split;
};

struct BenchmarkResult {
  std::vector<RepetitionResult> reps;
  int aborted = 0;
  double mean_rmse = 0, se_rmse = 0;
  double mean_nll = 0, se_nll = 0;
};

// split -> normalize -> train -> evaluate, repeated; aborted repetitions are
// logged and tolerated up to 10%
BenchmarkResult run_benchmark(const ExperimentConfig& config);

struct OodRepetition {
  EvalReport nll_report;  // NLL-trained ensemble
  EvalReport bvm_report;  // BVM-trained ensemble, identical split
  StatDiff stat_diff;
};

struct OodResult {
  std::vector<OodRepetition> reps;
  double mean_nll_trained = 0, mean_bvm_trained = 0;
  int bvm_wins = 0;  // repetitions where BVM test NLL < NLL-trained test NLL
};

OodResult run_ood_benchmark(const ExperimentConfig& config);

struct CalibrateResult {
  CalibrationCurve mse, nll, bvm;  // averaged over repetitions
};

CalibrateResult run_calibrate(const ExperimentConfig& config);

// writes the generated CSV plus a provenance sidecar (generator, params, seed)
void cmd_generate(const ExperimentConfig& config, const std::string& out_path);

// performs the configured split once and writes train/test manifests
SplitIndices cmd_split(const ExperimentConfig& config);

}  // namespace uqr
