#include "infomorph/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "infomorph/errors.hpp"

namespace infomorph {

BinningSpec BinningSpec::fixed_range(int n_bins, double lo, double hi) {
  BinningSpec spec;
  spec.n_bins = n_bins;
  spec.mode = Mode::fixed;
  spec.lo = lo;
  spec.hi = hi;
  return spec;
}

BinningSpec BinningSpec::adaptive(int n_bins) {
  BinningSpec spec;
  spec.n_bins = n_bins;
  spec.mode = Mode::adaptive;
  return spec;
}

std::vector<std::uint16_t> bin_values(std::span<const double> values,
                                      const BinningSpec& spec) {
  if (values.empty()) throw DataError("bin_values: empty input");
  if (spec.n_bins < 2) throw ConfigError("bin_values: need at least 2 bins");
  for (double v : values) {
    if (std::isnan(v)) throw DataError("bin_values: NaN input");
  }

  double lo = spec.lo, hi = spec.hi;
  if (spec.mode == BinningSpec::Mode::adaptive) {
    lo = *std::min_element(values.begin(), values.end());
    hi = *std::max_element(values.begin(), values.end());
    if (lo == hi) {
      // fewer than two distinct values: single bin
      return std::vector<std::uint16_t>(values.size(), 0);
    }
  } else if (!(lo < hi)) {
    throw ConfigError("bin_values: fixed range requires lo < hi");
  }

  const double width = (hi - lo) / spec.n_bins;
  std::vector<std::uint16_t> bins(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    int b = static_cast<int>(std::floor((values[i] - lo) / width));
    b = std::clamp(b, 0, spec.n_bins - 1);
    bins[i] = static_cast<std::uint16_t>(b);
  }
  return bins;
}

EstimatedJoint estimate_joint(const BatchActivations& batch,
                              std::span<const BinningSpec> specs) {
  const std::size_t n = batch.size();
  if (n == 0) throw DataError("estimate_joint: empty batch");
  const int n_sources = batch.n_sources();
  if (static_cast<int>(specs.size()) != n_sources) {
    throw ConfigError("estimate_joint: expected one binning spec per source");
  }
  if (batch.feedforward.size() != n || batch.context.size() != n ||
      (n_sources == 3 && batch.lateral.size() != n)) {
    throw ConfigError("estimate_joint: per-source vectors must match batch size");
  }
  for (double p : batch.fire_prob) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw DataError("estimate_joint: firing probability outside [0, 1]");
    }
  }

  std::array<std::vector<std::uint16_t>, 3> bins;
  bins[0] = bin_values(batch.feedforward, specs[0]);
  bins[1] = bin_values(batch.context, specs[1]);
  if (n_sources == 3) bins[2] = bin_values(batch.lateral, specs[2]);

  // Group samples by cell key; cells come out sorted, which makes the joint
  // representation canonical and independent of batch order.
  std::vector<std::uint64_t> keys(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::uint64_t key = bins[0][i];
    key |= static_cast<std::uint64_t>(bins[1][i]) << 16;
    if (n_sources == 3) key |= static_cast<std::uint64_t>(bins[2][i]) << 32;
    keys[i] = key;
  }
  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(),
            [&](std::uint32_t a, std::uint32_t b) { return keys[a] < keys[b]; });

  EstimatedJoint out;
  JointDistribution& joint = out.joint;
  joint.n_sources = n_sources;
  for (int s = 0; s < n_sources; ++s) joint.alphabet_sizes[s] = specs[s].n_bins;
  out.sample_cell.resize(n);

  std::uint32_t cell = 0;
  for (std::size_t r = 0; r < n; ++r) {
    const std::uint32_t i = order[r];
    if (r == 0 || keys[i] != keys[order[r - 1]]) {
      if (r > 0) ++cell;
      joint.cells.push_back({bins[0][i], bins[1][i],
                             n_sources == 3 ? bins[2][i] : std::uint16_t{0}});
      out.cell_count.push_back(0);
      joint.fire_prob.push_back(0.0);
    }
    out.sample_cell[i] = cell;
    ++out.cell_count[cell];
    joint.fire_prob[cell] += batch.fire_prob[i];
  }

  const std::size_t m = joint.cells.size();
  joint.cell_mass.resize(m);
  for (std::size_t j = 0; j < m; ++j) {
    joint.cell_mass[j] = static_cast<double>(out.cell_count[j]) / static_cast<double>(n);
    joint.fire_prob[j] /= static_cast<double>(out.cell_count[j]);
  }
  return out;
}

Differentiable residual_entropy(const JointDistribution& joint) {
  const std::size_t m = joint.n_cells();
  Differentiable h(0.0, m);
  for (std::size_t j = 0; j < m; ++j) {
    const double q = joint.cell_mass[j];
    const double theta = joint.fire_prob[j];
    double cell_entropy = 0.0;
    if (theta > 0.0) cell_entropy -= theta * std::log2(theta);
    if (theta < 1.0) cell_entropy -= (1.0 - theta) * std::log2(1.0 - theta);
    h.value += q * cell_entropy;
    const double t = std::max(theta, 1e-12);
    const double u = std::max(1.0 - theta, 1e-12);
    h.grad[j] = -q * std::log2(t / u);
  }
  return h;
}

std::vector<Differentiable> decompose(const JointDistribution& joint,
                                      const PidLattice& lattice) {
  const auto redundancies = isx_redundancies(joint, lattice);
  return atoms_from_redundancies(redundancies, lattice, residual_entropy(joint));
}

}  // namespace infomorph
