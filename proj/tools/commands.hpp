#pragma once

#include <optional>
#include <string>

#include "config_file.hpp"

namespace infomorph::cli {

void run_train(RunConfig& config);

void run_eval(const std::string& checkpoint_path, const std::string& data_dir,
              const std::string& split, const std::string& json_out, int threads);

struct PidArgs {
  std::string input_csv;
  int n_bins = 20;
  std::optional<double> lo, hi;  // both set: fixed binning
  std::string json_out;
};
void run_pid(const PidArgs& args);

struct SearchArgs {
  std::string sampler = "cmaes";
  int budget = 200;
  int truncated_epochs = 20;
};
void run_search(RunConfig& config, const SearchArgs& args);

struct AblateArgs {
  std::string mode;  // individual | cumulative | sensitivity
  std::string gamma_file;
  int n_seeds = 1;
  int truncated_epochs = 20;
};
void run_ablate(RunConfig& config, const AblateArgs& args);

}  // namespace infomorph::cli
