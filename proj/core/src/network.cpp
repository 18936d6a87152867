#include "infomorph/network.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "infomorph/errors.hpp"
#include "infomorph/rng.hpp"

namespace infomorph {

namespace {

// rng stream tags
constexpr std::uint64_t kTagWeightInit = 0x11;
constexpr std::uint64_t kTagWiring = 0x22;
constexpr std::uint64_t kTagFire = 0x33;
constexpr std::uint64_t kTagTrainBatch = 0x44;
constexpr std::uint64_t kTagEval = 0x55;
constexpr std::uint64_t kTagProbe = 0x66;
constexpr std::uint64_t kTagCalibrate = 0x77;

// Canonical trivariate atom indices (asserted against the lattice in tests).
constexpr int kAtomFC = 2;       // {F}{C}
constexpr int kAtomFL = 3;       // {F}{L}
constexpr int kAtomFCL = 0;      // {F}{C}{L}
constexpr int kAtomSynFCFL = 8;  // {FC}{FL}

double median_ignoring_nan(std::vector<double> values) {
  values.erase(std::remove_if(values.begin(), values.end(),
                              [](double v) { return std::isnan(v); }),
               values.end());
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  if (values.size() % 2 == 1) return values[mid];
  return 0.5 * (values[mid - 1] + values[mid]);
}

}  // namespace

std::vector<double> NetworkConfig::heuristic_hidden_goal() {
  std::vector<double> g(19, 0.0);
  g[kAtomFC] = 1.0;
  return g;
}

std::vector<double> NetworkConfig::default_output_goal() {
  // Redundancy-dominated objective for the label-supervised output layer,
  // in canonical order ({F}{C}, {F}, {C}, {FC}, H_res).
  return {1.0, -0.2, 0.1, 0.1, 0.0};
}

std::vector<double> NetworkConfig::reference_optimized_goal() {
  std::vector<double> g(19, 0.0);
  g[kAtomFC] = 0.98;
  g[kAtomFL] = -0.99;
  g[kAtomFCL] = 0.33;
  g[kAtomSynFCFL] = -0.97;
  return g;
}

void NetworkConfig::validate() const {
  if (n_inputs < 1) throw ConfigError("n_inputs must be >= 1");
  if (n_classes < 2) throw ConfigError("n_classes must be >= 2");
  if (n_hidden < 2) throw ConfigError("n_hidden must be >= 2 (lateral inputs need a peer)");
  if (setup != Setup::dense_lateral_label && setup != Setup::sparse_lateral_label &&
      setup != Setup::sparse_lateral_feedback) {
    throw ConfigError("setup must be 1, 2 or 3");
  }
  if (max_lateral < 1) throw ConfigError("max_lateral must be >= 1");
  if (!hidden_goal.empty() && hidden_goal.size() != 19) {
    throw ConfigError("hidden goal must have 19 entries");
  }
  if (!output_goal.empty() && output_goal.size() != 5) {
    throw ConfigError("output goal must have 5 entries");
  }
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (n_bins < 2) throw ConfigError("n_bins must be >= 2");
  if (!(hidden_bin_lo < hidden_bin_hi)) {
    throw ConfigError("hidden binning range requires lo < hi");
  }
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
    throw ConfigError("validation fraction must be in (0, 1)");
  }
}

int ForwardResult::predict(std::size_t i, int n_classes,
                           const std::int8_t* orientation) const {
  const double* p = out_prob.data() + i * n_classes;
  auto score = [&](int k) {
    return (orientation == nullptr || orientation[k] > 0) ? p[k] : 1.0 - p[k];
  };
  int best = 0;
  for (int k = 1; k < n_classes; ++k) {
    if (score(k) > score(best)) best = k;
  }
  return best;
}

double accuracy_of_predictions(const std::vector<int>& predictions,
                               const std::uint8_t* labels, std::size_t n) {
  std::size_t correct = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (predictions[i] == labels[i]) ++correct;
  }
  return n == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(n);
}

Network::Network(const NetworkConfig& config)
    : config_(config),
      pool_(std::make_unique<ThreadPool>(
          config.threads <= 0 ? 0 : static_cast<unsigned>(config.threads))) {
  if (config_.hidden_goal.empty()) config_.hidden_goal = NetworkConfig::heuristic_hidden_goal();
  if (config_.output_goal.empty()) config_.output_goal = NetworkConfig::default_output_goal();
  config_.validate();
  orientation_.assign(config_.n_classes, 1);
  init_wiring();
  init_weights();

  const AdamConfig adam_hidden{config_.lr_hidden, config_.weight_decay_hidden};
  const AdamConfig adam_output{config_.lr_output, config_.weight_decay_output};
  for (int n = 0; n < config_.n_hidden; ++n) {
    adam_hidden_ff_.emplace_back(hidden_[n].w_ff.size(), adam_hidden);
    adam_hidden_ctx_.emplace_back(hidden_[n].w_ctx.size(), adam_hidden);
    adam_hidden_lat_.emplace_back(hidden_[n].w_lat.size(), adam_hidden);
  }
  for (int k = 0; k < config_.n_classes; ++k) {
    adam_output_ff_.emplace_back(output_[k].w_ff.size(), adam_output);
    adam_output_ctx_.emplace_back(output_[k].w_ctx.size(), adam_output);
  }
}

void Network::init_wiring() {
  const int n = config_.n_hidden;
  wiring_.resize(n);
  if (config_.setup == Setup::dense_lateral_label) {
    for (int i = 0; i < n; ++i) {
      wiring_[i].clear();
      for (int j = 0; j < n; ++j) {
        if (j != i) wiring_[i].push_back(static_cast<std::uint32_t>(j));
      }
    }
    return;
  }
  // Sparse setups: a fixed random peer subset chosen once from the seed,
  // self-connection excluded.
  const int fan_in = std::min(n - 1, config_.max_lateral);
  for (int i = 0; i < n; ++i) {
    std::vector<std::uint32_t> peers;
    peers.reserve(n - 1);
    for (int j = 0; j < n; ++j) {
      if (j != i) peers.push_back(static_cast<std::uint32_t>(j));
    }
    Rng64 rng(counter_hash({config_.seed, kTagWiring, static_cast<std::uint64_t>(i)}));
    for (int k = 0; k < fan_in; ++k) {
      const std::size_t pick = k + rng.below(peers.size() - k);
      std::swap(peers[k], peers[pick]);
    }
    peers.resize(fan_in);
    std::sort(peers.begin(), peers.end());
    wiring_[i] = std::move(peers);
  }
}

void Network::init_weights() {
  // Uniform in [-k, k] with k = 1/sqrt(fan-in) per input class; keeps the
  // initial aggregates inside the fixed binning range.
  auto fill = [&](std::vector<double>& w, std::size_t fan_in, std::uint64_t layer,
                  std::uint64_t neuron, std::uint64_t input_class) {
    w.resize(fan_in);
    const double k = fan_in > 0 ? 1.0 / std::sqrt(static_cast<double>(fan_in)) : 0.0;
    Rng64 rng(counter_hash({config_.seed, kTagWeightInit, layer, neuron, input_class}));
    for (auto& v : w) v = k * (2.0 * rng.uniform() - 1.0);
  };
  hidden_.assign(config_.n_hidden, NeuronState{});
  for (int n = 0; n < config_.n_hidden; ++n) {
    auto& neuron = hidden_[n];
    neuron.activation = config_.activation;
    neuron.params = config_.activation_params;
    fill(neuron.w_ff, config_.n_inputs, 0, n, 0);
    fill(neuron.w_ctx, config_.n_classes, 0, n, 1);
    fill(neuron.w_lat, wiring_[n].size(), 0, n, 2);
  }
  output_.assign(config_.n_classes, NeuronState{});
  for (int k = 0; k < config_.n_classes; ++k) {
    auto& neuron = output_[k];
    neuron.activation = config_.activation;
    neuron.params = config_.activation_params;
    fill(neuron.w_ff, config_.n_hidden, 1, k, 0);
    fill(neuron.w_ctx, 1, 1, k, 1);
    // The goal is invariant under jointly flipping a neuron's output coding
    // and its weights, but the argmax readout needs every output neuron to
    // code its own label element positively. A non-negative context weight
    // selects that basin at the start.
    neuron.w_ctx[0] = std::abs(neuron.w_ctx[0]);
  }
}

std::vector<double> Network::label_context_matrix(const std::uint8_t* labels,
                                                  std::size_t batch_size) const {
  // one-hot encoded as +-1: +1 for the true class, -1 elsewhere
  std::vector<double> ctx(batch_size * config_.n_classes, -1.0);
  for (std::size_t i = 0; i < batch_size; ++i) {
    ctx[i * config_.n_classes + labels[i]] = 1.0;
  }
  return ctx;
}

void Network::hidden_aggregate_ff(const double* images, std::size_t batch_size,
                                  std::vector<double>& ff_agg) const {
  const std::size_t n = hidden_.size();
  const std::size_t dim = config_.n_inputs;
  ff_agg.resize(batch_size * n);
  constexpr std::size_t kTile = 64;
  const std::size_t n_tiles = (batch_size + kTile - 1) / kTile;
  pool_->parallel_for(n_tiles, [&](std::size_t tile) {
    const std::size_t begin = tile * kTile;
    const std::size_t end = std::min(begin + kTile, batch_size);
    for (std::size_t r = 0; r < n; ++r) {
      const double* w = hidden_[r].w_ff.data();
      for (std::size_t i = begin; i < end; ++i) {
        const double* xi = images + i * dim;
        double acc = 0.0;
        for (std::size_t k = 0; k < dim; ++k) acc += xi[k] * w[k];
        ff_agg[i * n + r] = acc;
      }
    }
  });
}

void Network::hidden_aggregate_ctx(const std::vector<double>& ctx_inputs,
                                   std::size_t batch_size,
                                   std::vector<double>& ctx_agg) const {
  const std::size_t n = hidden_.size();
  ctx_agg.assign(batch_size * n, 0.0);
  if (ctx_inputs.empty()) return;
  const std::size_t dim = config_.n_classes;
  pool_->parallel_for(n, [&](std::size_t r) {
    const double* w = hidden_[r].w_ctx.data();
    for (std::size_t i = 0; i < batch_size; ++i) {
      const double* xi = ctx_inputs.data() + i * dim;
      double acc = 0.0;
      for (std::size_t k = 0; k < dim; ++k) acc += xi[k] * w[k];
      ctx_agg[i * n + r] = acc;
    }
  });
}

void Network::hidden_iteration(std::size_t batch_size, const std::vector<double>& ff_agg,
                               const std::vector<double>& ctx_agg,
                               const std::vector<double>* prev_state, int iteration,
                               std::uint64_t draw_tag, std::vector<double>& lat_agg,
                               std::vector<double>& prob, std::vector<double>& state) const {
  const std::size_t n = hidden_.size();
  lat_agg.assign(batch_size * n, 0.0);
  prob.resize(batch_size * n);
  state.resize(batch_size * n);
  pool_->parallel_for(n, [&](std::size_t r) {
    const auto& w_lat = hidden_[r].w_lat;
    const auto& wires = wiring_[r];
    for (std::size_t i = 0; i < batch_size; ++i) {
      const std::size_t at = i * n + r;
      double lat = 0.0;
      if (prev_state != nullptr) {
        const double* row = prev_state->data() + i * n;
        for (std::size_t k = 0; k < wires.size(); ++k) lat += w_lat[k] * row[wires[k]];
      }
      lat_agg[at] = lat;
      const double a = activation(ff_agg[at], ctx_agg[at], lat, config_.activation,
                                  config_.activation_params);
      // counter-addressed draw: independent per (neuron, iteration, sample)
      const double u = counter_uniform({config_.seed, kTagFire, draw_tag,
                                        static_cast<std::uint64_t>(iteration), r, i});
      const FireResult fired = fire(a, u);
      prob[at] = fired.probability;
      state[at] = static_cast<double>(fired.state);
    }
  });
}

void Network::output_pass(const std::vector<double>& hidden_state, std::size_t batch_size,
                          const std::vector<double>* ctx_inputs,
                          std::vector<double>& ff_agg, std::vector<double>& ctx_agg,
                          std::vector<double>& prob) const {
  const std::size_t n = hidden_.size();
  const std::size_t n_out = output_.size();
  ff_agg.resize(batch_size * n_out);
  ctx_agg.assign(batch_size * n_out, 0.0);
  prob.resize(batch_size * n_out);
  pool_->parallel_for(n_out, [&](std::size_t k) {
    const double* w = output_[k].w_ff.data();
    const double w_ctx = output_[k].w_ctx[0];
    for (std::size_t i = 0; i < batch_size; ++i) {
      const double* row = hidden_state.data() + i * n;
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) acc += row[j] * w[j];
      const std::size_t at = i * n_out + k;
      ff_agg[at] = acc;
      double ctx = 0.0;
      if (ctx_inputs != nullptr) {
        // exactly one element of the one-hot label as context
        ctx = w_ctx * (*ctx_inputs)[i * n_out + k];
      }
      ctx_agg[at] = ctx;
      // bivariate output: L = 0, the sigmoid is not sampled
      const double a = activation(acc, ctx, 0.0, config_.activation,
                                  config_.activation_params);
      prob[at] = fire_probability(a);
    }
  });
}

ForwardResult Network::forward(const double* images, std::size_t batch_size,
                               const std::uint8_t* labels, ContextSource context,
                               std::uint64_t draw_tag) const {
  if ((context == ContextSource::labels || context == ContextSource::feedback) &&
      labels == nullptr) {
    throw ConfigError("forward: labels required for the requested context source");
  }
  ForwardResult fr;
  fr.batch_size = batch_size;
  hidden_aggregate_ff(images, batch_size, fr.ff_agg);

  std::vector<double> label_ctx;
  if (context != ContextSource::withheld) {
    label_ctx = label_context_matrix(labels, batch_size);
  }

  // Iteration 1: zero lateral state. Hidden context is the label for the
  // label setups; the feedback setup has no context available yet.
  std::vector<double> ctx_agg1;
  if (context == ContextSource::labels) {
    fr.ctx_inputs = label_ctx;
    hidden_aggregate_ctx(fr.ctx_inputs, batch_size, ctx_agg1);
  } else {
    hidden_aggregate_ctx({}, batch_size, ctx_agg1);  // zeros
  }
  std::vector<double> lat_agg1;
  hidden_iteration(batch_size, fr.ff_agg, ctx_agg1, nullptr, 1, draw_tag, lat_agg1,
                   fr.prob1, fr.state1);

  // Feedback context: a provisional output pass driven by the first-iteration
  // hidden states (one extra output evaluation per batch).
  if (context == ContextSource::feedback) {
    std::vector<double> prov_ff, prov_ctx, prov_prob;
    output_pass(fr.state1, batch_size, nullptr, prov_ff, prov_ctx, prov_prob);
    fr.ctx_inputs.resize(batch_size * config_.n_classes);
    for (std::size_t i = 0; i < fr.ctx_inputs.size(); ++i) {
      fr.ctx_inputs[i] = 2.0 * prov_prob[i] - 1.0;  // map probabilities to the +-1 scale
    }
    hidden_aggregate_ctx(fr.ctx_inputs, batch_size, fr.ctx_agg);
  } else {
    fr.ctx_agg = ctx_agg1;
  }

  // Iteration 2: the first iteration's sampled states as lateral input.
  hidden_iteration(batch_size, fr.ff_agg, fr.ctx_agg, &fr.state1, 2, draw_tag,
                   fr.lat_agg, fr.prob2, fr.state2);

  // Output layer, once, from the second-iteration states. During training the
  // output context is always the label element; withheld otherwise.
  const std::vector<double>* out_ctx =
      (context == ContextSource::withheld) ? nullptr : &label_ctx;
  output_pass(fr.state2, batch_size, out_ctx, fr.out_ff_agg, fr.out_ctx_agg, fr.out_prob);
  if (out_ctx != nullptr) fr.out_ctx_inputs = label_ctx;
  return fr;
}

std::pair<double, double> Network::train_epoch(const DatasetSplit& train,
                                               std::uint64_t epoch) {
  const auto& lattice3 = PidLattice::trivariate();
  const auto& lattice2 = PidLattice::bivariate();
  const std::size_t n_hidden = hidden_.size();
  const std::size_t n_out = output_.size();
  const int dim = config_.n_inputs;
  if (train.sample_dim() != dim) {
    throw ConfigError("dataset sample dimension " + std::to_string(train.sample_dim()) +
                      " does not match configured n_inputs " + std::to_string(dim));
  }

  const std::array<BinningSpec, 3> hidden_specs = {
      BinningSpec::fixed_range(config_.n_bins, config_.hidden_bin_lo, config_.hidden_bin_hi),
      BinningSpec::fixed_range(config_.n_bins, config_.hidden_bin_lo, config_.hidden_bin_hi),
      BinningSpec::fixed_range(config_.n_bins, config_.hidden_bin_lo, config_.hidden_bin_hi)};
  const std::array<BinningSpec, 2> output_specs = {BinningSpec::adaptive(config_.n_bins),
                                                   BinningSpec::adaptive(config_.n_bins)};

  const auto batch_list = batches(train.n_samples, config_.batch_size, config_.seed, epoch);

  double hidden_goal_sum = 0.0, output_goal_sum = 0.0;
  std::size_t hidden_goal_count = 0, output_goal_count = 0;

  std::vector<double> xbuf;
  std::vector<std::uint8_t> ybuf;
  const ContextSource context = config_.setup == Setup::sparse_lateral_feedback
                                    ? ContextSource::feedback
                                    : ContextSource::labels;

  for (std::size_t b = 0; b < batch_list.size(); ++b) {
    const auto& batch = batch_list[b];
    const std::size_t bs = batch.size();
    xbuf.resize(bs * dim);
    ybuf.resize(bs);
    for (std::size_t i = 0; i < bs; ++i) {
      const float* src = train.image(batch[i]);
      double* dst = xbuf.data() + i * dim;
      for (int k = 0; k < dim; ++k) dst[k] = src[k];
      ybuf[i] = train.labels[batch[i]];
    }

    const std::uint64_t draw_tag = counter_hash({kTagTrainBatch, epoch, b});
    const ForwardResult fr = forward(xbuf.data(), bs, ybuf.data(), context, draw_tag);

    // Hidden layer: per-neuron estimation, PID, goal, backward, step. Each
    // neuron only touches its own weights and optimizer state.
    std::vector<double> goal_values(n_hidden, 0.0);
    pool_->parallel_for(n_hidden, [&](std::size_t r) {
      BatchActivations acts;
      acts.feedforward.resize(bs);
      acts.context.resize(bs);
      acts.lateral.resize(bs);
      acts.fire_prob.resize(bs);
      for (std::size_t i = 0; i < bs; ++i) {
        const std::size_t at = i * n_hidden + r;
        acts.feedforward[i] = fr.ff_agg[at];
        acts.context[i] = fr.ctx_agg[at];
        acts.lateral[i] = fr.lat_agg[at];
        acts.fire_prob[i] = fr.prob2[at];
      }
      EstimatedJoint est = estimate_joint(acts, hidden_specs);
      const auto atoms = decompose(est.joint, lattice3);
      const Differentiable goal = goal_value(atoms, config_.hidden_goal);
      if (!std::isfinite(goal.value)) {
        throw NumericalError("non-finite goal for hidden neuron " + std::to_string(r) +
                             " in batch " + std::to_string(b));
      }
      goal_values[r] = goal.value;

      NeuronBatchRecord record;
      record.agg_ff = std::move(acts.feedforward);
      record.agg_ctx = std::move(acts.context);
      record.agg_lat = std::move(acts.lateral);
      record.fire_prob = std::move(acts.fire_prob);
      record.sample_cell = std::move(est.sample_cell);
      record.cell_count = std::move(est.cell_count);
      record.activation = config_.activation;
      record.params = config_.activation_params;

      const InputView ff_view{xbuf.data(), static_cast<std::size_t>(dim),
                              static_cast<std::size_t>(dim), nullptr};
      const InputView ctx_view{fr.ctx_inputs.data(),
                               static_cast<std::size_t>(config_.n_classes),
                               static_cast<std::size_t>(config_.n_classes), nullptr};
      const InputView lat_view{fr.state1.data(), wiring_[r].size(), n_hidden,
                               wiring_[r].data()};
      WeightGradients grads = backward(record, goal.grad, ff_view, ctx_view, lat_view);
      try {
        adam_hidden_ff_[r].step(hidden_[r].w_ff, grads.ff);
        adam_hidden_ctx_[r].step(hidden_[r].w_ctx, grads.ctx);
        adam_hidden_lat_[r].step(hidden_[r].w_lat, grads.lat);
      } catch (const NumericalError& e) {
        throw NumericalError(std::string(e.what()) + " (hidden neuron " +
                             std::to_string(r) + ", batch " + std::to_string(b) + ")");
      }
    });
    for (double g : goal_values) hidden_goal_sum += g;
    hidden_goal_count += n_hidden;

    // Output layer: bivariate neurons, adaptive binning, label element context.
    std::vector<double> out_goal_values(n_out, 0.0);
    pool_->parallel_for(n_out, [&](std::size_t k) {
      BatchActivations acts;
      acts.feedforward.resize(bs);
      acts.context.resize(bs);
      acts.fire_prob.resize(bs);
      for (std::size_t i = 0; i < bs; ++i) {
        const std::size_t at = i * n_out + k;
        acts.feedforward[i] = fr.out_ff_agg[at];
        acts.context[i] = fr.out_ctx_agg[at];
        acts.fire_prob[i] = fr.out_prob[at];
      }
      EstimatedJoint est = estimate_joint(acts, output_specs);
      const auto atoms = decompose(est.joint, lattice2);
      const Differentiable goal = goal_value(atoms, config_.output_goal);
      if (!std::isfinite(goal.value)) {
        throw NumericalError("non-finite goal for output neuron " + std::to_string(k) +
                             " in batch " + std::to_string(b));
      }
      out_goal_values[k] = goal.value;

      NeuronBatchRecord record;
      record.agg_ff = std::move(acts.feedforward);
      record.agg_ctx = std::move(acts.context);
      record.agg_lat.assign(bs, 0.0);
      record.fire_prob = std::move(acts.fire_prob);
      record.sample_cell = std::move(est.sample_cell);
      record.cell_count = std::move(est.cell_count);
      record.activation = config_.activation;
      record.params = config_.activation_params;

      const InputView ff_view{fr.state2.data(), n_hidden, n_hidden, nullptr};
      // column k of the +-1 label matrix
      const InputView ctx_view{fr.out_ctx_inputs.data() + k, 1, n_out, nullptr};
      const InputView lat_view{nullptr, 0, 0, nullptr};
      WeightGradients grads = backward(record, goal.grad, ff_view, ctx_view, lat_view);
      try {
        adam_output_ff_[k].step(output_[k].w_ff, grads.ff);
        adam_output_ctx_[k].step(output_[k].w_ctx, grads.ctx);
      } catch (const NumericalError& e) {
        throw NumericalError(std::string(e.what()) + " (output neuron " +
                             std::to_string(k) + ", batch " + std::to_string(b) + ")");
      }
    });
    for (double g : out_goal_values) output_goal_sum += g;
    output_goal_count += n_out;
  }

  return {hidden_goal_count ? hidden_goal_sum / hidden_goal_count : 0.0,
          output_goal_count ? output_goal_sum / output_goal_count : 0.0};
}

double Network::evaluate(const DatasetSplit& split, std::uint64_t draw_tag) const {
  const int dim = config_.n_inputs;
  if (split.sample_dim() != dim) {
    throw ConfigError("dataset sample dimension does not match configured n_inputs");
  }
  const std::size_t bs_max = static_cast<std::size_t>(config_.batch_size);
  std::vector<double> xbuf;
  std::vector<int> predictions(split.n_samples);
  std::size_t batch_index = 0;
  for (std::size_t start = 0; start < split.n_samples; start += bs_max, ++batch_index) {
    const std::size_t bs = std::min(bs_max, split.n_samples - start);
    xbuf.resize(bs * dim);
    for (std::size_t i = 0; i < bs; ++i) {
      const float* src = split.image(start + i);
      double* dst = xbuf.data() + i * dim;
      for (int k = 0; k < dim; ++k) dst[k] = src[k];
    }
    const std::uint64_t tag = counter_hash({kTagEval, draw_tag, batch_index});
    const ForwardResult fr =
        forward(xbuf.data(), bs, nullptr, ContextSource::withheld, tag);
    for (std::size_t i = 0; i < bs; ++i) {
      predictions[start + i] = fr.predict(i, config_.n_classes, orientation_.data());
    }
  }
  return accuracy_of_predictions(predictions, split.labels.data(), split.n_samples);
}

void Network::calibrate_output_orientation(const DatasetSplit& train,
                                           std::uint64_t draw_tag) {
  const int dim = config_.n_inputs;
  const std::size_t n = std::min<std::size_t>(train.n_samples, 8192);
  const std::size_t bs_max = static_cast<std::size_t>(config_.batch_size);
  std::vector<double> own_sum(config_.n_classes, 0.0), other_sum(config_.n_classes, 0.0);
  std::vector<std::size_t> own_count(config_.n_classes, 0), other_count(config_.n_classes, 0);
  std::vector<double> xbuf;
  std::size_t batch_index = 0;
  for (std::size_t start = 0; start < n; start += bs_max, ++batch_index) {
    const std::size_t bs = std::min(bs_max, n - start);
    xbuf.resize(bs * dim);
    for (std::size_t i = 0; i < bs; ++i) {
      const float* src = train.image(start + i);
      double* dst = xbuf.data() + i * dim;
      for (int k = 0; k < dim; ++k) dst[k] = src[k];
    }
    const std::uint64_t tag = counter_hash({kTagCalibrate, draw_tag, batch_index});
    const ForwardResult fr =
        forward(xbuf.data(), bs, nullptr, ContextSource::withheld, tag);
    for (std::size_t i = 0; i < bs; ++i) {
      const int label = train.labels[start + i];
      for (int k = 0; k < config_.n_classes; ++k) {
        const double p = fr.out_prob[i * config_.n_classes + k];
        if (k == label) {
          own_sum[k] += p;
          ++own_count[k];
        } else {
          other_sum[k] += p;
          ++other_count[k];
        }
      }
    }
  }
  for (int k = 0; k < config_.n_classes; ++k) {
    if (own_count[k] == 0 || other_count[k] == 0) continue;
    const double own = own_sum[k] / static_cast<double>(own_count[k]);
    const double other = other_sum[k] / static_cast<double>(other_count[k]);
    orientation_[k] = (own >= other) ? 1 : -1;
  }
}

std::vector<std::vector<double>> Network::feedforward_weight_snapshot() const {
  std::vector<std::vector<double>> snapshot;
  snapshot.reserve(hidden_.size());
  for (const auto& neuron : hidden_) snapshot.push_back(neuron.w_ff);
  return snapshot;
}

std::vector<double> Network::self_cosine_distance(
    const std::vector<std::vector<double>>& previous) const {
  if (previous.size() != hidden_.size()) {
    throw ConfigError("self_cosine_distance: snapshot size mismatch");
  }
  std::vector<double> distances(hidden_.size());
  for (std::size_t r = 0; r < hidden_.size(); ++r) {
    const auto& a = previous[r];
    const auto& b = hidden_[r].w_ff;
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
      dot += a[k] * b[k];
      na += a[k] * a[k];
      nb += b[k] * b[k];
    }
    if (na == 0.0 || nb == 0.0) {
      distances[r] = std::numeric_limits<double>::quiet_NaN();  // undefined
    } else {
      distances[r] = 1.0 - dot / (std::sqrt(na) * std::sqrt(nb));
    }
  }
  return distances;
}

TrainReport Network::fit(const DatasetSplit& train, const DatasetSplit& validation,
                         const DatasetSplit* test,
                         const std::function<void(const EpochMetrics&)>& on_epoch) {
  TrainReport report;
  report.config = config_;
  auto snapshot = feedforward_weight_snapshot();
  for (int epoch = 0; epoch < config_.epochs; ++epoch) {
    const auto [hidden_goal, output_goal] =
        train_epoch(train, static_cast<std::uint64_t>(epoch));
    EpochMetrics metrics;
    metrics.epoch = epoch;
    metrics.mean_hidden_goal = hidden_goal;
    metrics.mean_output_goal = output_goal;
    calibrate_output_orientation(train, static_cast<std::uint64_t>(epoch));
    metrics.train_accuracy = evaluate(train, counter_hash({0xAAu, static_cast<std::uint64_t>(epoch)}));
    metrics.validation_accuracy =
        evaluate(validation, counter_hash({0xBBu, static_cast<std::uint64_t>(epoch)}));
    metrics.median_self_distance = median_ignoring_nan(self_cosine_distance(snapshot));
    snapshot = feedforward_weight_snapshot();
    report.best_validation_accuracy =
        std::max(report.best_validation_accuracy, metrics.validation_accuracy);
    report.epochs.push_back(metrics);
    if (on_epoch) on_epoch(metrics);
  }
  if (test != nullptr) {
    report.test_accuracy = evaluate(*test, counter_hash({0xCCu}));
  }
  return report;
}

double Network::recurrence_probe(const double* images, std::size_t batch_size,
                                 std::uint64_t draw_tag) const {
  const std::uint64_t tag = counter_hash({kTagProbe, draw_tag});
  const ForwardResult fr =
      forward(images, batch_size, nullptr, ContextSource::withheld, tag);
  // third iteration: second-iteration states as lateral input
  std::vector<double> ctx_agg;
  hidden_aggregate_ctx({}, batch_size, ctx_agg);
  std::vector<double> lat3, prob3, state3;
  hidden_iteration(batch_size, fr.ff_agg, ctx_agg, &fr.state2, 3, tag, lat3, prob3, state3);
  std::vector<double> deltas(prob3.size());
  for (std::size_t i = 0; i < prob3.size(); ++i) {
    deltas[i] = std::abs(prob3[i] - fr.prob2[i]);
  }
  return median_ignoring_nan(std::move(deltas));
}

}  // namespace infomorph
