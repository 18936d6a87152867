#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "commands.hpp"
#include "config_file.hpp"
#include "infomorph/errors.hpp"

namespace {

using infomorph::cli::RunConfig;

RunConfig build_config(const std::string& config_path,
                       const std::vector<std::string>& overrides,
                       const std::string& data_dir, const std::string& out_dir,
                       int threads) {
  RunConfig config = RunConfig::defaults();
  if (!config_path.empty()) config.load_file(config_path);
  for (const auto& assignment : overrides) config.apply_override(assignment);
  if (!data_dir.empty()) config.apply_override("data.dir=" + data_dir);
  if (!out_dir.empty()) config.apply_override("out.dir=" + out_dir);
  if (threads >= 0) config.apply_override("train.threads=" + std::to_string(threads));
  config.finalize();
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"infomorphic networks: local PID-goal training, evaluation and analysis"};
  app.require_subcommand(1);

  std::string config_path, data_dir, out_dir;
  std::vector<std::string> overrides;
  int threads = -1;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "key=value config file");
    cmd->add_option("--set", overrides, "override a config key (key=value)");
    cmd->add_option("--data-dir", data_dir, "dataset directory (IDX files)");
    cmd->add_option("--out", out_dir, "output directory for artifacts");
    cmd->add_option("--threads", threads, "worker thread cap (0 = hardware)");
  };

  CLI::App* train = app.add_subcommand("train", "train a network and write artifacts");
  add_common(train);

  CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  std::string checkpoint, split = "test", eval_json;
  eval->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  eval->add_option("--data-dir", data_dir, "dataset directory");
  eval->add_option("--split", split, "train | validation | test");
  eval->add_option("--json", eval_json, "also write a JSON result");
  eval->add_option("--threads", threads, "worker thread cap");

  CLI::App* pid = app.add_subcommand("pid", "decompose a sample CSV into PID atoms");
  infomorph::cli::PidArgs pid_args;
  pid->add_option("--input", pid_args.input_csv, "CSV with header y,f,c,l or y,f,c")
      ->required();
  pid->add_option("--bins", pid_args.n_bins, "bins per source (default 20)");
  double pid_lo = 0, pid_hi = 0;
  auto* lo_opt = pid->add_option("--lo", pid_lo, "fixed binning lower edge");
  auto* hi_opt = pid->add_option("--hi", pid_hi, "fixed binning upper edge");
  pid->add_option("--json", pid_args.json_out, "write atoms as JSON");

  CLI::App* search = app.add_subcommand("search", "optimize the hidden goal vector");
  infomorph::cli::SearchArgs search_args;
  add_common(search);
  search->add_option("--sampler", search_args.sampler, "cmaes | random");
  search->add_option("--budget", search_args.budget, "number of trials");
  search->add_option("--epochs", search_args.truncated_epochs,
                     "truncated training epochs per trial");

  CLI::App* ablate = app.add_subcommand("ablate", "goal-vector ablation / sensitivity");
  infomorph::cli::AblateArgs ablate_args;
  add_common(ablate);
  ablate->add_option("--mode", ablate_args.mode, "individual | cumulative | sensitivity")
      ->required();
  ablate->add_option("--gamma", ablate_args.gamma_file, "goal vector JSON (default: config goal)");
  ablate->add_option("--seeds", ablate_args.n_seeds, "repeat seeds to average over");
  ablate->add_option("--epochs", ablate_args.truncated_epochs,
                     "truncated training epochs per evaluation");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (train->parsed()) {
      RunConfig config = build_config(config_path, overrides, data_dir, out_dir, threads);
      infomorph::cli::run_train(config);
    } else if (eval->parsed()) {
      infomorph::cli::run_eval(checkpoint, data_dir, split, eval_json, threads);
    } else if (pid->parsed()) {
      if (lo_opt->count()) pid_args.lo = pid_lo;
      if (hi_opt->count()) pid_args.hi = pid_hi;
      infomorph::cli::run_pid(pid_args);
    } else if (search->parsed()) {
      RunConfig config = build_config(config_path, overrides, data_dir, out_dir, threads);
      infomorph::cli::run_search(config, search_args);
    } else if (ablate->parsed()) {
      RunConfig config = build_config(config_path, overrides, data_dir, out_dir, threads);
      infomorph::cli::run_ablate(config, ablate_args);
    }
  } catch (const infomorph::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const infomorph::DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 2;
  } catch (const infomorph::NumericalError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 4;
  }
  return 0;
}
