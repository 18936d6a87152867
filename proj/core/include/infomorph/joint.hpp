#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace infomorph {

// Empirical joint distribution over (Y, binned sources) with a binary target
// Y in {+1, -1}. Only source cells with positive mass are stored. The target
// conditionals are parameterized by the firing probability
// theta_j = p(Y=+1 | cell j); the Y=-1 conditional is 1 - theta_j. All
// derivative information downstream is taken with respect to the theta
// entries, with the source masses treated as constants.
struct JointDistribution {
  int n_sources = 0;                       // 2 or 3
  std::array<int, 3> alphabet_sizes{};     // bins per source (unused dims 0)
  std::vector<std::array<std::uint16_t, 3>> cells;  // occupied source cells, sorted
  std::vector<double> cell_mass;           // p(cell), sums to 1
  std::vector<double> fire_prob;           // theta_j = p(Y=+1 | cell j)

  std::size_t n_cells() const { return cells.size(); }

  // p(Y=+1) under the joint.
  double target_marginal() const {
    double p = 0.0;
    for (std::size_t j = 0; j < cells.size(); ++j) p += cell_mass[j] * fire_prob[j];
    return p;
  }
};

// Scalar carrying its gradient with respect to a joint's fire_prob entries.
struct Differentiable {
  double value = 0.0;
  std::vector<double> grad;  // d value / d theta_j, aligned with joint cells

  Differentiable() = default;
  Differentiable(double v, std::size_t n_cells) : value(v), grad(n_cells, 0.0) {}

  Differentiable& add_scaled(const Differentiable& other, double factor) {
    value += factor * other.value;
    if (grad.size() < other.grad.size()) grad.resize(other.grad.size(), 0.0);
    for (std::size_t i = 0; i < other.grad.size(); ++i) grad[i] += factor * other.grad[i];
    return *this;
  }
};

}  // namespace infomorph
