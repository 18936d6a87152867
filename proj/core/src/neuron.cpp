#include "infomorph/neuron.hpp"

#include <cmath>

#include "infomorph/errors.hpp"

namespace infomorph {

namespace {

double dot_or_zero(std::span<const double> inputs, const std::vector<double>& weights,
                   const char* what) {
  if (inputs.empty() && weights.empty()) return 0.0;
  if (inputs.size() != weights.size()) {
    throw ConfigError(std::string("aggregate: ") + what + " input length " +
                      std::to_string(inputs.size()) + " != weight length " +
                      std::to_string(weights.size()));
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < inputs.size(); ++i) acc += inputs[i] * weights[i];
  return acc;
}

}  // namespace

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Aggregates aggregate(std::span<const double> ff_inputs,
                     std::span<const double> ctx_inputs,
                     std::span<const double> lat_inputs,
                     const NeuronState& state) {
  Aggregates agg;
  agg.ff = dot_or_zero(ff_inputs, state.w_ff, "feedforward");
  agg.ctx = dot_or_zero(ctx_inputs, state.w_ctx, "context");
  agg.lat = dot_or_zero(lat_inputs, state.w_lat, "lateral");
  return agg;
}

double activation(double ff, double ctx, double lat, ActivationKind kind,
                  const ActivationParams& p) {
  if (kind == ActivationKind::linear) return ff + 0.1 * ctx + 0.1 * lat;
  const double base = 1.0 - p.context_mix - p.lateral_mix;
  return ff * (base + p.context_mix * sigmoid(p.context_slope * ff * ctx) +
               p.lateral_mix * sigmoid(p.lateral_slope * ff * lat));
}

ActivationPartials activation_partials(double ff, double ctx, double lat,
                                       ActivationKind kind,
                                       const ActivationParams& p) {
  ActivationPartials out;
  if (kind == ActivationKind::linear) {
    out.d_ff = 1.0;
    out.d_ctx = 0.1;
    out.d_lat = 0.1;
    return out;
  }
  const double sc = sigmoid(p.context_slope * ff * ctx);
  const double sl = sigmoid(p.lateral_slope * ff * lat);
  const double dsc = sc * (1.0 - sc);
  const double dsl = sl * (1.0 - sl);
  const double base = 1.0 - p.context_mix - p.lateral_mix;
  out.d_ff = base + p.context_mix * sc + p.lateral_mix * sl +
             ff * (p.context_mix * dsc * p.context_slope * ctx +
                   p.lateral_mix * dsl * p.lateral_slope * lat);
  out.d_ctx = ff * ff * p.context_mix * dsc * p.context_slope;
  out.d_lat = ff * ff * p.lateral_mix * dsl * p.lateral_slope;
  return out;
}

FireResult fire(double activation_value, double uniform_draw) {
  const double p = sigmoid(activation_value);
  return FireResult{p, uniform_draw < p ? +1 : -1};
}

double fire_probability(double activation_value) { return sigmoid(activation_value); }

}  // namespace infomorph
