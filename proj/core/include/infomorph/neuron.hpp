#pragma once

#include <span>
#include <vector>

namespace infomorph {

enum class ActivationKind { modulatory, linear };

// Parameters of the modulatory activation
//   A(F,C,L) = F * [(1 - a1 - a2) + a1*sigmoid(b1*F*C) + a2*sigmoid(b2*F*L)]
// where a1/a2 scale the context/lateral influence and b1/b2 their slopes.
// The linear alternative is A(F,C,L) = F + 0.1*C + 0.1*L.
struct ActivationParams {
  double context_mix = 0.1;    // a1
  double lateral_mix = 0.1;    // a2
  double context_slope = 2.0;  // b1
  double lateral_slope = 2.0;  // b2
};

// Per-neuron weights. Lateral weights exclude the self-connection (the
// wiring that maps lateral slots to peer neurons lives in the layer).
struct NeuronState {
  std::vector<double> w_ff;
  std::vector<double> w_ctx;
  std::vector<double> w_lat;
  ActivationKind activation = ActivationKind::modulatory;
  ActivationParams params;
};

struct Aggregates {
  double ff = 0.0;
  double ctx = 0.0;
  double lat = 0.0;
};

// Weighted sums per input class. An empty input span with empty weights
// yields 0 for that class (withheld context, bivariate neurons).
Aggregates aggregate(std::span<const double> ff_inputs,
                     std::span<const double> ctx_inputs,
                     std::span<const double> lat_inputs,
                     const NeuronState& state);

double activation(double ff, double ctx, double lat, ActivationKind kind,
                  const ActivationParams& params);

struct ActivationPartials {
  double d_ff = 0.0;
  double d_ctx = 0.0;
  double d_lat = 0.0;
};

ActivationPartials activation_partials(double ff, double ctx, double lat,
                                       ActivationKind kind,
                                       const ActivationParams& params);

double sigmoid(double x);

struct FireResult {
  double probability;  // sigmoid of the activation
  int state;           // +1 fired, -1 silent
};

// Stochastic +-1 output. `uniform_draw` is the caller's counter-addressed
// uniform in [0,1); the result is deterministic given (activation, draw).
FireResult fire(double activation_value, double uniform_draw);

// Output-layer variant: the sigmoid is not sampled, only interpreted as a
// firing probability.
double fire_probability(double activation_value);

}  // namespace infomorph
