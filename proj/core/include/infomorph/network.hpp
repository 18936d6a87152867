#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "infomorph/dataset.hpp"
#include "infomorph/estimator.hpp"
#include "infomorph/grad.hpp"
#include "infomorph/lattice.hpp"
#include "infomorph/neuron.hpp"
#include "infomorph/parallel.hpp"

namespace infomorph {

// Hidden-layer wiring variants:
//  1: all-to-all lateral connections, one-hot label as context
//  2: sparse lateral connections (at most max_lateral), label context
//  3: sparse lateral connections, output-layer feedback as context
enum class Setup { dense_lateral_label = 1, sparse_lateral_label = 2, sparse_lateral_feedback = 3 };

enum class ContextSource { labels, feedback, withheld };

struct NetworkConfig {
  int n_inputs = 784;
  int n_classes = 10;
  int n_hidden = 100;
  Setup setup = Setup::dense_lateral_label;
  int max_lateral = 100;
  ActivationKind activation = ActivationKind::modulatory;
  ActivationParams activation_params;
  std::vector<double> hidden_goal;  // 19 entries; default: 1 on {F}{C}
  std::vector<double> output_goal;  // 5 entries; default redundancy-dominated
  int epochs = 100;
  int batch_size = 1024;
  double lr_hidden = 0.002;
  double lr_output = 0.003;
  double weight_decay_hidden = 0.00035;
  double weight_decay_output = 0.00015;
  int n_bins = 20;
  double hidden_bin_lo = -20.0;
  double hidden_bin_hi = 20.0;
  double validation_fraction = 0.2;
  std::uint64_t seed = 1;
  int threads = 0;  // 0 = hardware concurrency

  // Canonical-order default goals.
  static std::vector<double> heuristic_hidden_goal();  // one-hot on {F}{C}
  static std::vector<double> default_output_goal();
  // The published optimized hidden goal: the four critical atom weights,
  // all other entries zero.
  static std::vector<double> reference_optimized_goal();

  void validate() const;  // throws ConfigError
};

struct EpochMetrics {
  int epoch = 0;
  double train_accuracy = 0.0;
  double validation_accuracy = 0.0;
  double median_self_distance = std::numeric_limits<double>::quiet_NaN();
  double mean_hidden_goal = 0.0;
  double mean_output_goal = 0.0;
};

struct TrainReport {
  NetworkConfig config;
  std::vector<EpochMetrics> epochs;
  double test_accuracy = std::numeric_limits<double>::quiet_NaN();
  double best_validation_accuracy = 0.0;
};

// Full forward pass over one batch: two hidden-layer iterations (the first
// from zero lateral state, the second fed by the first iteration's sampled
// states), then one output-layer pass. For the feedback setup the context of
// the second iteration comes from a provisional output pass driven by the
// first-iteration states.
struct ForwardResult {
  std::size_t batch_size = 0;
  std::vector<double> ff_agg;       // B x N
  std::vector<double> ctx_agg;      // B x N, second-iteration context aggregate
  std::vector<double> lat_agg;      // B x N, second-iteration lateral aggregate
  std::vector<double> prob1;        // B x N
  std::vector<double> prob2;        // B x N
  std::vector<double> state1;       // B x N, sampled +-1
  std::vector<double> state2;       // B x N
  std::vector<double> ctx_inputs;      // B x n_classes, empty when withheld
  std::vector<double> out_ff_agg;      // B x n_classes
  std::vector<double> out_ctx_agg;     // B x n_classes
  std::vector<double> out_prob;        // B x n_classes
  std::vector<double> out_ctx_inputs;  // B x n_classes +-1 label matrix (training)

  // Argmax over orientation-corrected output probabilities. `orientation`
  // may be null (all positive).
  int predict(std::size_t i, int n_classes,
              const std::int8_t* orientation = nullptr) const;
};

class Network {
 public:
  explicit Network(const NetworkConfig& config);

  const NetworkConfig& config() const { return config_; }

  ForwardResult forward(const double* images, std::size_t batch_size,
                        const std::uint8_t* labels, ContextSource context,
                        std::uint64_t draw_tag) const;

  // One pass over the training split: forward with context, per-neuron joint
  // estimation, PID, goal, backward and optimizer step for both layers.
  // Returns (mean hidden goal, mean output goal) over the epoch.
  std::pair<double, double> train_epoch(const DatasetSplit& train, std::uint64_t epoch);

  // Context-withheld accuracy of argmax predictions.
  double evaluate(const DatasetSplit& split, std::uint64_t draw_tag) const;

  // The goal function is invariant under jointly flipping a neuron's output
  // coding and its weights, so each output neuron's coding orientation is
  // a free bit the objective cannot fix. Estimate it from training data
  // (context withheld) so the argmax readout scores fire-for-my-class and
  // fire-against-my-class neurons alike. Called by fit() after each epoch;
  // stored in checkpoints.
  void calibrate_output_orientation(const DatasetSplit& train, std::uint64_t draw_tag);
  const std::vector<std::int8_t>& output_orientation() const { return orientation_; }

  // Full training loop with per-epoch metrics (train/validation accuracy,
  // median self-cosine distance of the feedforward weights, goal values).
  TrainReport fit(const DatasetSplit& train, const DatasetSplit& validation,
                  const DatasetSplit* test,
                  const std::function<void(const EpochMetrics&)>& on_epoch = {});

  // Median absolute change of the hidden firing probabilities between a
  // second and a third lateral iteration on the given batch.
  double recurrence_probe(const double* images, std::size_t batch_size,
                          std::uint64_t draw_tag) const;

  // 1 - cosine similarity between the given snapshot and the current
  // feedforward weights, per hidden neuron; zero-norm vectors yield NaN.
  std::vector<double> self_cosine_distance(const std::vector<std::vector<double>>& previous) const;
  std::vector<std::vector<double>> feedforward_weight_snapshot() const;

  // Weight access (hidden layer n, output neuron k).
  NeuronState& hidden(std::size_t n) { return hidden_[n]; }
  const NeuronState& hidden(std::size_t n) const { return hidden_[n]; }
  NeuronState& output(std::size_t k) { return output_[k]; }
  const NeuronState& output(std::size_t k) const { return output_[k]; }
  const std::vector<std::uint32_t>& lateral_wiring(std::size_t n) const { return wiring_[n]; }

  void save_checkpoint(const std::string& path) const;
  // threads_override < 0 keeps the worker count stored in the checkpoint.
  static Network load_checkpoint(const std::string& path, int threads_override = -1);

 private:
  friend struct CheckpointCodec;

  void init_weights();
  void init_wiring();
  std::vector<double> label_context_matrix(const std::uint8_t* labels,
                                           std::size_t batch_size) const;
  void hidden_aggregate_ff(const double* images, std::size_t batch_size,
                           std::vector<double>& ff_agg) const;
  void hidden_aggregate_ctx(const std::vector<double>& ctx_inputs, std::size_t batch_size,
                            std::vector<double>& ctx_agg) const;
  void hidden_iteration(std::size_t batch_size, const std::vector<double>& ff_agg,
                        const std::vector<double>& ctx_agg,
                        const std::vector<double>* prev_state, int iteration,
                        std::uint64_t draw_tag, std::vector<double>& lat_agg,
                        std::vector<double>& prob, std::vector<double>& state) const;
  void output_pass(const std::vector<double>& hidden_state, std::size_t batch_size,
                   const std::vector<double>* ctx_inputs,
                   std::vector<double>& ff_agg, std::vector<double>& ctx_agg,
                   std::vector<double>& prob) const;

  NetworkConfig config_;
  std::vector<NeuronState> hidden_;
  std::vector<NeuronState> output_;
  std::vector<std::int8_t> orientation_;            // output coding signs
  std::vector<std::vector<std::uint32_t>> wiring_;  // lateral peers per hidden neuron
  std::vector<AdamOptimizer> adam_hidden_ff_, adam_hidden_ctx_, adam_hidden_lat_;
  std::vector<AdamOptimizer> adam_output_ff_, adam_output_ctx_;
  mutable std::unique_ptr<ThreadPool> pool_;
};

// Accuracy helper shared by evaluate() and the CLI.
double accuracy_of_predictions(const std::vector<int>& predictions,
                               const std::uint8_t* labels, std::size_t n);

}  // namespace infomorph
