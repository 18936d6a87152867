#include "infomorph/grad.hpp"

#include <cmath>
#include <stdexcept>

#include "infomorph/errors.hpp"

namespace infomorph {

AdamOptimizer::AdamOptimizer(std::size_t n_weights, const AdamConfig& config)
    : config_(config), m_(n_weights, 0.0), v_(n_weights, 0.0) {}

void AdamOptimizer::step(std::span<double> weights, std::span<const double> gradients) {
  if (weights.size() != m_.size() || gradients.size() != m_.size()) {
    throw ConfigError("optimizer step: shape mismatch");
  }
  for (double g : gradients) {
    if (!std::isfinite(g)) throw NumericalError("optimizer step: non-finite gradient");
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  const double shrink = 1.0 - config_.learning_rate * config_.weight_decay;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    m_[i] = config_.beta1 * m_[i] + (1.0 - config_.beta1) * gradients[i];
    v_[i] = config_.beta2 * v_[i] + (1.0 - config_.beta2) * gradients[i] * gradients[i];
    const double m_hat = m_[i] / bc1;
    const double v_hat = v_[i] / bc2;
    weights[i] = weights[i] * shrink +
                 config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.epsilon);
  }
}

WeightGradients backward(NeuronBatchRecord& record, std::span<const double> goal_grad,
                         const InputView& ff, const InputView& ctx,
                         const InputView& lat) {
  if (record.consumed) {
    throw std::logic_error("backward: record already consumed");
  }
  record.consumed = true;
  const std::size_t n = record.batch_size();
  if (goal_grad.size() != record.cell_count.size()) {
    throw ConfigError("backward: goal gradient length does not match cell count");
  }

  WeightGradients grads;
  grads.ff.assign(ff.dim, 0.0);
  grads.ctx.assign(ctx.dim, 0.0);
  grads.lat.assign(lat.dim, 0.0);

  for (std::size_t i = 0; i < n; ++i) {
    const std::uint32_t cell = record.sample_cell[i];
    // conditional = mean of the firing probabilities in the cell
    const double d_prob = goal_grad[cell] / static_cast<double>(record.cell_count[cell]);
    const double p = record.fire_prob[i];
    const double d_act = d_prob * p * (1.0 - p);
    if (d_act == 0.0) continue;
    const auto partials = activation_partials(record.agg_ff[i], record.agg_ctx[i],
                                              record.agg_lat[i], record.activation,
                                              record.params);
    if (ff.dim > 0 && partials.d_ff != 0.0) {
      const double g = d_act * partials.d_ff;
      for (std::size_t k = 0; k < ff.dim; ++k) grads.ff[k] += g * ff.value(i, k);
    }
    if (ctx.dim > 0 && partials.d_ctx != 0.0) {
      const double g = d_act * partials.d_ctx;
      for (std::size_t k = 0; k < ctx.dim; ++k) grads.ctx[k] += g * ctx.value(i, k);
    }
    if (lat.dim > 0 && partials.d_lat != 0.0) {
      const double g = d_act * partials.d_lat;
      for (std::size_t k = 0; k < lat.dim; ++k) grads.lat[k] += g * lat.value(i, k);
    }
  }
  return grads;
}

}  // namespace infomorph
