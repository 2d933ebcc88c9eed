// uqreg: train small MLP ensembles for regression uncertainty and reproduce
// the benchmark protocols (random-split tables, outlier splits, calibration).
#include <cstdint>
#include <iostream>
#include <memory>
#include <string>

#include "CLI11.hpp"
#include "uqr/errors.hpp"
#include "uqr/experiment.hpp"

namespace {

struct CommonOpts {
  std::string config_path;
  std::string dataset;
  std::string preset;
  std::string out;
  std::uint64_t seed = 0;
  CLI::Option* dataset_opt = nullptr;
  CLI::Option* preset_opt = nullptr;
  CLI::Option* out_opt = nullptr;
  CLI::Option* seed_opt = nullptr;
};

std::shared_ptr<CommonOpts> add_common(CLI::App* cmd) {
  auto opts = std::make_shared<CommonOpts>();
  cmd->add_option("--config", opts->config_path,
                  "key = value config file (see --config-schema)");
  opts->dataset_opt =
      cmd->add_option("--dataset", opts->dataset, "dataset CSV path (overrides config)");
  opts->preset_opt = cmd->add_option(
      "--preset", opts->preset,
      "apply a named preset after the config file (table1, ood, toy-cubic, protein-scale)");
  opts->seed_opt =
      cmd->add_option("--seed", opts->seed, "master seed (overrides config)");
  opts->out_opt = cmd->add_option("--out", opts->out,
                                  "output directory, or file path for generate "
                                  "(overrides config)");
  return opts;
}

uqr::ExperimentConfig resolve(const CommonOpts& opts) {
  uqr::ExperimentConfig config;
  if (!opts.config_path.empty()) config = uqr::parse_config_file(opts.config_path);
  if (opts.preset_opt->count() > 0) uqr::apply_preset(config, opts.preset);
  if (opts.dataset_opt->count() > 0) config.dataset = opts.dataset;
  if (opts.seed_opt->count() > 0) config.seed = opts.seed;
  if (opts.out_opt->count() > 0) config.out_dir = opts.out;
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"regression uncertainty via MLP ensembles (MSE, NLL, eps-BVM)"};
  app.require_subcommand(1);
  app.add_flag_callback(
      "--config-schema",
      [] {
        std::cout << uqr::config_schema_help();
        throw CLI::Success();
      },
      "print the config file schema and exit");

  auto* gen = app.add_subcommand("generate", "write a synthetic dataset CSV");
  auto gen_opts = add_common(gen);
  auto gen_name = std::make_shared<std::string>();
  auto gen_n = std::make_shared<std::uint64_t>(0);
  auto* gen_name_opt = gen->add_option("--generator", *gen_name,
                                       "toy-cubic | heteroscedastic (overrides config)");
  auto* gen_n_opt = gen->add_option("--n", *gen_n, "sample count (overrides config)");
  gen->callback([gen_opts, gen_name, gen_name_opt, gen_n, gen_n_opt] {
    uqr::ExperimentConfig config = resolve(*gen_opts);
    if (gen_name_opt->count() > 0) config.generator = *gen_name;
    if (gen_n_opt->count() > 0) config.gen_n = static_cast<std::size_t>(*gen_n);
    if (config.out_dir.empty()) throw uqr::DataError("generate: need --out <csv path>");
    const std::string path = config.out_dir;
    config.out_dir.clear();
    uqr::cmd_generate(config, path);
    std::cout << "wrote " << path << " and " << path << ".meta.json\n";
  });

  auto* bench = app.add_subcommand("benchmark",
                                   "repeated random splits: train, evaluate, summarize");
  auto bench_opts = add_common(bench);
  bench->callback([bench_opts] {
    const uqr::ExperimentConfig config = resolve(*bench_opts);
    const uqr::BenchmarkResult result = uqr::run_benchmark(config);
    std::cout.precision(10);
    std::cout << "repetitions " << result.reps.size() << " aborted " << result.aborted
              << "\n"
              << "rmse " << result.mean_rmse << " +/- " << result.se_rmse << "\n"
              << "nll  " << result.mean_nll << " +/- " << result.se_nll << "\n";
  });

  auto* ood = app.add_subcommand(
      "ood-benchmark", "outlier splits: NLL-trained vs BVM-trained on the same split");
  auto ood_opts = add_common(ood);
  ood->callback([ood_opts] {
    uqr::ExperimentConfig config = resolve(*ood_opts);
    config.split_mode = "outlier";
    const uqr::OodResult result = uqr::run_ood_benchmark(config);
    std::cout.precision(10);
    std::cout << "repetitions " << result.reps.size() << "\n"
              << "nll-trained test nll " << result.mean_nll_trained << "\n"
              << "bvm-trained test nll " << result.mean_bvm_trained << "\n"
              << "bvm wins " << result.bvm_wins << " of " << result.reps.size() << "\n";
    if (!result.reps.empty()) {
      std::cout << "split stat diff: mean " << result.reps[0].stat_diff.mean_diff
                << " var " << result.reps[0].stat_diff.var_diff << "\n";
    }
  });

  auto* cal = app.add_subcommand(
      "calibrate", "reliability curves for MSE, NLL, and BVM ensembles");
  auto cal_opts = add_common(cal);
  cal->callback([cal_opts] {
    const uqr::ExperimentConfig config = resolve(*cal_opts);
    const uqr::CalibrateResult result = uqr::run_calibrate(config);
    std::cout.precision(10);
    const uqr::CalibrationCurve* curves[] = {&result.mse, &result.nll, &result.bvm};
    const char* names[] = {"mse", "nll", "bvm"};
    for (int i = 0; i < 3; ++i) {
      double worst = 0;
      for (std::size_t z = 0; z < 9; ++z) {
        worst = std::max(worst,
                         std::abs(curves[i]->observed[z] - curves[i]->expected[z]));
      }
      std::cout << names[i] << " max |observed - expected| " << worst << "\n";
    }
  });

  auto* split = app.add_subcommand("split",
                                   "perform one train/test split and write manifests");
  auto split_opts = add_common(split);
  split->callback([split_opts] {
    const uqr::ExperimentConfig config = resolve(*split_opts);
    const uqr::SplitIndices indices = uqr::cmd_split(config);
    std::cout << "train " << indices.train.size() << " test " << indices.test.size()
              << "\n";
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const uqr::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const uqr::NumericError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
