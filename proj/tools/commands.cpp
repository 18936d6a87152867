#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "infomorph/errors.hpp"
#include "infomorph/estimator.hpp"
#include "infomorph/goal_search.hpp"
#include "infomorph/network.hpp"
#include "infomorph/rng.hpp"
#include "infomorph/serialize.hpp"
#include "svg.hpp"

namespace infomorph::cli {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

struct LoadedData {
  DatasetSplit train_full;
  DatasetSplit test;
};

LoadedData load_dataset(const std::string& data_dir, int n_classes) {
  if (data_dir.empty()) {
    throw DataError(
        "no dataset directory configured (set data.dir, --data-dir or "
        "INFOMORPH_DATA_DIR)");
  }
  const MnistPaths paths = locate_mnist(data_dir);
  LoadedData data;
  data.train_full = load_idx(paths.train_images, paths.train_labels, SplitRole::train);
  data.test = load_idx(paths.test_images, paths.test_labels, SplitRole::test);
  for (const auto* split : {&data.train_full, &data.test}) {
    for (std::uint8_t label : split->labels) {
      if (label >= n_classes) {
        throw DataError("label " + std::to_string(label) +
                        " exceeds configured class count " + std::to_string(n_classes));
      }
    }
  }
  return data;
}

void ensure_out_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory " + dir);
}

void print_epoch(const EpochMetrics& m) {
  if (std::isnan(m.median_self_distance)) {
    std::printf("epoch %4d  train %.4f  val %.4f  Dc --      goal %.5f\n", m.epoch,
                m.train_accuracy, m.validation_accuracy, m.mean_hidden_goal);
  } else {
    std::printf("epoch %4d  train %.4f  val %.4f  Dc %.5f  goal %.5f\n", m.epoch,
                m.train_accuracy, m.validation_accuracy, m.median_self_distance,
                m.mean_hidden_goal);
  }
  std::fflush(stdout);
}

// Objective for search/ablation: best validation accuracy of a truncated
// training run with the candidate hidden goal.
GoalEvaluator make_truncated_evaluator(const NetworkConfig& base,
                                       const DatasetSplit& train,
                                       const DatasetSplit& validation,
                                       int truncated_epochs) {
  return [&train, &validation, base, truncated_epochs](std::span<const double> gamma,
                                                       std::uint64_t seed) {
    NetworkConfig config = base;
    config.epochs = truncated_epochs;
    config.seed = seed;
    config.hidden_goal.assign(gamma.begin(), gamma.end());
    Network net(config);
    const TrainReport report = net.fit(train, validation, nullptr);
    return report.best_validation_accuracy;
  };
}

std::string trial_to_jsonl(const Trial& trial) {
  ordered_json j;
  j["gamma"] = trial.gamma;
  j["objective"] = trial.objective;
  j["seed"] = trial.seed;
  j["wall_seconds"] = trial.wall_seconds;
  return j.dump() + "\n";
}

}  // namespace

void run_train(RunConfig& config) {
  const LoadedData data =
      load_dataset(config.data_dir(), config.get_int("network.n_classes"));
  NetworkConfig net_config =
      config.network_config(data.train_full.sample_dim());
  const auto [train, validation] = split_train_validation(
      data.train_full, net_config.validation_fraction, net_config.seed);
  std::printf("training: %zu train / %zu validation / %zu test samples, %d hidden neurons\n",
              train.n_samples, validation.n_samples, data.test.n_samples,
              net_config.n_hidden);

  const std::string out = config.out_dir();
  ensure_out_dir(out);
  write_text_file(out + "/resolved_config.json", config.to_json());

  Network net(net_config);
  const TrainReport report = net.fit(train, validation, &data.test, print_epoch);

  net.save_checkpoint(out + "/checkpoint.imn");
  write_text_file(out + "/report.json", train_report_to_json(report));
  write_text_file(out + "/metrics.csv", train_metrics_to_csv(report));

  Series train_series{"train", {}, "#4a7fb5"};
  Series val_series{"validation", {}, "#b5524a"};
  for (const auto& m : report.epochs) {
    train_series.values.push_back(m.train_accuracy);
    val_series.values.push_back(m.validation_accuracy);
  }
  write_text_file(out + "/learning_curve.svg",
                  line_chart_svg("accuracy over training", "epoch", "accuracy",
                                 {train_series, val_series}));
  std::printf("test accuracy %.4f\n", report.test_accuracy);
  std::printf("artifacts written to %s\n", out.c_str());
}

void run_eval(const std::string& checkpoint_path, const std::string& data_dir,
              const std::string& split_name, const std::string& json_out, int threads) {
  Network net = Network::load_checkpoint(checkpoint_path, threads);
  NetworkConfig config = net.config();
  const LoadedData data = load_dataset(
      data_dir.empty() ? (std::getenv("INFOMORPH_DATA_DIR") ? std::getenv("INFOMORPH_DATA_DIR") : "")
                       : data_dir,
      config.n_classes);

  const DatasetSplit* split = nullptr;
  DatasetSplit train, validation;
  if (split_name == "test") {
    split = &data.test;
  } else {
    std::tie(train, validation) = split_train_validation(
        data.train_full, config.validation_fraction, config.seed);
    if (split_name == "train") split = &train;
    else if (split_name == "validation") split = &validation;
    else throw ConfigError("--split must be train, validation or test");
  }
  const double accuracy = net.evaluate(*split, counter_hash({0xE7A1u}));
  std::printf("accuracy %.4f\n", accuracy);
  if (!json_out.empty()) {
    ordered_json j;
    j["schema_version"] = kSchemaVersion;
    j["split"] = split_name;
    j["n_samples"] = split->n_samples;
    j["accuracy"] = accuracy;
    j["config"] = ordered_json::parse(network_config_to_json(config));
    write_text_file(json_out, j.dump(2) + "\n");
  }
}

void run_pid(const PidArgs& args) {
  std::ifstream in(args.input_csv);
  if (!in) throw DataError("cannot open " + args.input_csv);
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty CSV " + args.input_csv);
  auto split_csv = [](const std::string& row) {
    std::vector<std::string> fields;
    std::istringstream stream(row);
    std::string field;
    while (std::getline(stream, field, ',')) {
      field.erase(0, field.find_first_not_of(" \t\r"));
      field.erase(field.find_last_not_of(" \t\r") + 1);
      fields.push_back(field);
    }
    return fields;
  };
  const auto head = split_csv(line);
  int n_sources = 0;
  if (head.size() == 4 && head[0] == "y" && head[1] == "f" && head[2] == "c" &&
      head[3] == "l") {
    n_sources = 3;
  } else if (head.size() == 3 && head[0] == "y" && head[1] == "f" && head[2] == "c") {
    n_sources = 2;
  } else {
    throw DataError(args.input_csv + ": header must be y,f,c,l or y,f,c");
  }

  BatchActivations batch;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = split_csv(line);
    if (static_cast<int>(fields.size()) != n_sources + 1) {
      throw DataError(args.input_csv + ":" + std::to_string(line_no) +
                      ": expected " + std::to_string(n_sources + 1) + " fields");
    }
    try {
      const double y = std::stod(fields[0]);
      if (y != 1.0 && y != -1.0) {
        throw DataError(args.input_csv + ":" + std::to_string(line_no) +
                        ": y must be -1 or 1");
      }
      batch.fire_prob.push_back(y > 0 ? 1.0 : 0.0);
      batch.feedforward.push_back(std::stod(fields[1]));
      batch.context.push_back(std::stod(fields[2]));
      if (n_sources == 3) batch.lateral.push_back(std::stod(fields[3]));
    } catch (const DataError&) {
      throw;
    } catch (const std::exception&) {
      throw DataError(args.input_csv + ":" + std::to_string(line_no) +
                      ": malformed numeric field");
    }
  }
  if (batch.size() == 0) throw DataError(args.input_csv + ": no data rows");

  BinningSpec spec = BinningSpec::adaptive(args.n_bins);
  if (args.lo.has_value() != args.hi.has_value()) {
    throw ConfigError("--lo and --hi must be given together");
  }
  if (args.lo.has_value()) {
    spec = BinningSpec::fixed_range(args.n_bins, *args.lo, *args.hi);
  }
  const std::vector<BinningSpec> specs(n_sources, spec);
  const auto est = estimate_joint(batch, specs);
  const auto& lattice = n_sources == 3 ? PidLattice::trivariate() : PidLattice::bivariate();
  const auto atoms = decompose(est.joint, lattice);
  const auto residuals = consistency_residuals(atoms, est.joint, lattice);
  const auto labels = lattice.atom_labels();

  std::printf("%zu samples, %zu occupied cells, %d sources\n", batch.size(),
              est.joint.n_cells(), n_sources);
  std::printf("%-14s %12s\n", "atom", "bits");
  for (std::size_t a = 0; a < atoms.size(); ++a) {
    std::printf("%-14s %12.6f\n", labels[a].c_str(), atoms[a].value);
  }
  std::printf("consistency residuals (bits):");
  for (double r : residuals) std::printf(" %.3e", r);
  std::printf("\n");

  if (!args.json_out.empty()) {
    ordered_json j;
    j["schema_version"] = kSchemaVersion;
    j["kind"] = "atoms";
    j["n_sources"] = n_sources;
    j["order"] = labels;
    std::vector<double> values;
    for (const auto& a : atoms) values.push_back(a.value);
    j["values"] = values;
    j["consistency_residuals"] = residuals;
    write_text_file(args.json_out, j.dump(2) + "\n");
  }
}

void run_search(RunConfig& config, const SearchArgs& args) {
  const LoadedData data =
      load_dataset(config.data_dir(), config.get_int("network.n_classes"));
  NetworkConfig base = config.network_config(data.train_full.sample_dim());
  const auto [train, validation] =
      split_train_validation(data.train_full, base.validation_fraction, base.seed);

  const std::string out = config.out_dir();
  ensure_out_dir(out);
  write_text_file(out + "/resolved_config.json", config.to_json());

  const GoalEvaluator eval =
      make_truncated_evaluator(base, train, validation, args.truncated_epochs);
  std::ofstream trial_log(out + "/trials.jsonl");
  if (!trial_log) throw DataError("cannot write " + out + "/trials.jsonl");
  int done = 0;
  const GoalEvaluator logged = [&](std::span<const double> gamma, std::uint64_t seed) {
    const auto t0 = std::chrono::steady_clock::now();
    const double objective = eval(gamma, seed);
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    Trial trial{std::vector<double>(gamma.begin(), gamma.end()), objective, seed, wall};
    trial_log << trial_to_jsonl(trial);
    trial_log.flush();
    ++done;
    std::printf("trial %4d  objective %.4f\n", done, objective);
    std::fflush(stdout);
    return objective;
  };

  SearchResult result;
  if (args.sampler == "cmaes") {
    CmaesOptions options;
    options.dim = 19;
    options.fix_residual = true;
    options.initial_mean = NetworkConfig::heuristic_hidden_goal();
    options.sigma0 = 0.3;
    result = cmaes_search(args.budget, logged, base.seed, options);
  } else if (args.sampler == "random") {
    result = random_search(args.budget, 19, logged, base.seed);
  } else {
    throw ConfigError("--sampler must be cmaes or random");
  }
  write_text_file(out + "/best_gamma.json",
                  vector_to_json(result.best().gamma, PidLattice::trivariate(), "goal"));
  std::printf("best objective %.4f after %zu trials\n", result.best().objective,
              result.trials.size());
  std::printf("artifacts written to %s\n", out.c_str());
}

void run_ablate(RunConfig& config, const AblateArgs& args) {
  const LoadedData data =
      load_dataset(config.data_dir(), config.get_int("network.n_classes"));
  NetworkConfig base = config.network_config(data.train_full.sample_dim());
  const auto [train, validation] =
      split_train_validation(data.train_full, base.validation_fraction, base.seed);

  std::vector<double> gamma = base.hidden_goal;
  if (!args.gamma_file.empty()) {
    gamma = goal_vector_from_json(read_text_file(args.gamma_file),
                                  PidLattice::trivariate());
  }
  const auto labels = PidLattice::trivariate().atom_labels();

  const std::string out = config.out_dir();
  ensure_out_dir(out);
  write_text_file(out + "/resolved_config.json", config.to_json());

  const GoalEvaluator eval =
      make_truncated_evaluator(base, train, validation, args.truncated_epochs);

  const auto individual =
      ablate_individual(gamma, labels, eval, args.n_seeds, base.seed);
  if (args.mode == "individual") {
    std::string csv = "index,label,gamma,baseline,ablated,delta,evaluated\n";
    std::vector<double> deltas;
    char buf[256];
    for (const auto& e : individual) {
      std::snprintf(buf, sizeof(buf), "%d,%s,%.10g,%.10g,%.10g,%.10g,%d\n", e.index,
                    e.label.c_str(), gamma[e.index], e.baseline, e.ablated, e.delta,
                    e.evaluated ? 1 : 0);
      csv += buf;
      deltas.push_back(e.delta);
    }
    write_text_file(out + "/ablation_individual.csv", csv);
    write_text_file(out + "/ablation_individual.svg",
                    bar_chart_svg("validation accuracy change when zeroing each goal entry",
                                  labels, deltas));
  } else if (args.mode == "cumulative") {
    const auto steps = ablate_cumulative(gamma, individual, eval, args.n_seeds, base.seed);
    std::string csv = "step,zeroed_index,label,accuracy,evaluated\n";
    Series curve{"accuracy", {}, "#4a7fb5"};
    char buf[256];
    for (const auto& s : steps) {
      std::snprintf(buf, sizeof(buf), "%d,%d,%s,%.10g,%d\n", s.step, s.zeroed_index,
                    s.label.c_str(), s.accuracy, s.evaluated ? 1 : 0);
      csv += buf;
      curve.values.push_back(s.accuracy);
    }
    write_text_file(out + "/ablation_cumulative.csv", csv);
    write_text_file(out + "/ablation_cumulative.svg",
                    line_chart_svg("cumulative ablation (ascending individual impact)",
                                   "zeroed entries", "validation accuracy", {curve}));
  } else if (args.mode == "sensitivity") {
    const auto entries = perturb_sensitivity(gamma, labels, eval, args.n_seeds, base.seed);
    std::string csv = "index,label,kind,gamma_value,delta,evaluated\n";
    char buf[256];
    for (const auto& e : entries) {
      std::snprintf(buf, sizeof(buf), "%d,%s,%s,%.10g,%.10g,%d\n", e.index,
                    e.label.c_str(), e.kind.c_str(), e.gamma_value, e.delta,
                    e.evaluated ? 1 : 0);
      csv += buf;
    }
    write_text_file(out + "/sensitivity.csv", csv);
  } else {
    throw ConfigError("--mode must be individual, cumulative or sensitivity");
  }
  std::printf("artifacts written to %s\n", out.c_str());
}

}  // namespace infomorph::cli
