#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "infomorph/joint.hpp"
#include "infomorph/lattice.hpp"
#include "infomorph/pid.hpp"

namespace infomorph {

// Equal-width discretization of one aggregated input. Fixed mode uses the
// configured range; adaptive mode uses the batch min/max, recomputed per
// batch. Out-of-range values clamp to the edge bins.
struct BinningSpec {
  int n_bins = 20;
  enum class Mode { fixed, adaptive };
  Mode mode = Mode::fixed;
  double lo = -20.0;
  double hi = 20.0;

  static BinningSpec fixed_range(int n_bins, double lo, double hi);
  static BinningSpec adaptive(int n_bins);
};

// One batch of per-sample aggregated inputs plus the per-sample firing
// probability. `lateral` stays empty for bivariate neurons.
struct BatchActivations {
  std::vector<double> feedforward;
  std::vector<double> context;
  std::vector<double> lateral;
  std::vector<double> fire_prob;

  std::size_t size() const { return fire_prob.size(); }
  int n_sources() const { return lateral.empty() ? 2 : 3; }
};

// Bin indices in [0, n_bins). Throws DataError on NaN input. Adaptive mode
// with fewer than two distinct values falls back to a single bin.
std::vector<std::uint16_t> bin_values(std::span<const double> values,
                                      const BinningSpec& spec);

struct EstimatedJoint {
  JointDistribution joint;
  std::vector<std::uint32_t> sample_cell;  // per sample -> occupied cell index
  std::vector<std::uint32_t> cell_count;   // per cell -> number of samples
};

// Plug-in estimation: source mass = bin count / batch size, conditional
// p(Y=+1 | cell) = mean firing probability of the samples in the cell. The
// bin assignment is a per-batch constant; derivative information flows only
// through the firing probabilities.
EstimatedJoint estimate_joint(const BatchActivations& batch,
                              std::span<const BinningSpec> specs);

// H(Y | sources) in bits, with gradient with respect to the conditionals.
Differentiable residual_entropy(const JointDistribution& joint);

// Convenience: redundancies -> atoms with residual entropy appended.
std::vector<Differentiable> decompose(const JointDistribution& joint,
                                      const PidLattice& lattice);

}  // namespace infomorph
