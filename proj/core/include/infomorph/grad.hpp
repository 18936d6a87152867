#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "infomorph/neuron.hpp"

namespace infomorph {

// Adam with decoupled multiplicative weight decay, applied as gradient
// ascent (goals are maximized).
struct AdamConfig {
  double learning_rate = 0.002;
  double weight_decay = 0.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class AdamOptimizer {
 public:
  AdamOptimizer() = default;
  AdamOptimizer(std::size_t n_weights, const AdamConfig& config);

  // w <- w * (1 - lr*decay) + lr * m_hat / (sqrt(v_hat) + eps).
  // Throws NumericalError on non-finite gradients.
  void step(std::span<double> weights, std::span<const double> gradients);

  std::int64_t step_count() const { return t_; }
  const AdamConfig& config() const { return config_; }

 private:
  AdamConfig config_;
  std::vector<double> m_;
  std::vector<double> v_;
  std::int64_t t_ = 0;
};

// Access pattern for one input class of a batch: value(i, k) is the k-th
// input of sample i. `gather` (optional) maps the k-th lateral slot to a
// column of the state matrix.
struct InputView {
  const double* data = nullptr;
  std::size_t dim = 0;     // inputs per sample
  std::size_t stride = 0;  // row stride of `data`
  const std::uint32_t* gather = nullptr;

  double value(std::size_t i, std::size_t k) const {
    return data[i * stride + (gather ? gather[k] : k)];
  }
};

// The recorded differentiable chain for one neuron over one batch: the
// forward pass plus the (constant) bin assignment produced by the joint
// estimation. A record can be consumed by backward() exactly once.
struct NeuronBatchRecord {
  std::vector<double> agg_ff;
  std::vector<double> agg_ctx;
  std::vector<double> agg_lat;
  std::vector<double> fire_prob;
  std::vector<std::uint32_t> sample_cell;
  std::vector<std::uint32_t> cell_count;
  ActivationKind activation = ActivationKind::modulatory;
  ActivationParams params;
  bool consumed = false;

  std::size_t batch_size() const { return fire_prob.size(); }
};

struct WeightGradients {
  std::vector<double> ff;
  std::vector<double> ctx;
  std::vector<double> lat;
};

// Exact reverse-mode derivatives of a goal through conditional probabilities,
// firing probabilities and the activation, down to the weights. The goal's
// gradient with respect to the per-cell conditionals is `goal_grad`; the
// empirical source pmf and the bin assignment are treated as constants.
// Views for absent classes (withheld context, bivariate neurons) may have
// dim 0. Throws on a consumed record.
WeightGradients backward(NeuronBatchRecord& record, std::span<const double> goal_grad,
                         const InputView& ff, const InputView& ctx,
                         const InputView& lat);

}  // namespace infomorph
