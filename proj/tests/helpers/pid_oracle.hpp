// Straight-from-definition PID reference implementation used as the test
// oracle. Deliberately independent of the library's computation path: event
// probabilities come from enumerating the full outcome set (no
// inclusion-exclusion) and atoms from a fresh Gaussian solve of the lattice
// system (no precomputed inverse).
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "infomorph/joint.hpp"
#include "infomorph/lattice.hpp"

namespace oracle {

struct DenseJoint {
  int n_sources = 0;
  std::array<int, 3> sizes{1, 1, 1};
  std::vector<double> p_plus;   // p(y=+1, cell), indexed f + s0*(c + s1*l)
  std::vector<double> p_minus;  // p(y=-1, cell)

  std::size_t n_cells() const {
    return static_cast<std::size_t>(sizes[0]) * sizes[1] * sizes[2];
  }
  std::array<int, 3> unpack(std::size_t idx) const {
    std::array<int, 3> s{};
    s[0] = static_cast<int>(idx % sizes[0]);
    s[1] = static_cast<int>((idx / sizes[0]) % sizes[1]);
    s[2] = static_cast<int>(idx / (static_cast<std::size_t>(sizes[0]) * sizes[1]));
    return s;
  }
  double total() const {
    double t = 0.0;
    for (std::size_t i = 0; i < p_plus.size(); ++i) t += p_plus[i] + p_minus[i];
    return t;
  }
};

inline infomorph::JointDistribution to_sparse(const DenseJoint& dense) {
  infomorph::JointDistribution joint;
  joint.n_sources = dense.n_sources;
  for (int i = 0; i < dense.n_sources; ++i) joint.alphabet_sizes[i] = dense.sizes[i];
  for (std::size_t idx = 0; idx < dense.n_cells(); ++idx) {
    const double q = dense.p_plus[idx] + dense.p_minus[idx];
    if (q <= 0.0) continue;
    const auto s = dense.unpack(idx);
    joint.cells.push_back({static_cast<std::uint16_t>(s[0]),
                           static_cast<std::uint16_t>(s[1]),
                           static_cast<std::uint16_t>(s[2])});
    joint.cell_mass.push_back(q);
    joint.fire_prob.push_back(dense.p_plus[idx] / q);
  }
  return joint;
}

// I_cap by direct enumeration of the disjunction-of-conjunctions event set.
inline double isx(const DenseJoint& dense, const infomorph::Antichain& alpha) {
  double p_plus_marginal = 0.0;
  for (double v : dense.p_plus) p_plus_marginal += v;
  const double p_minus_marginal = dense.total() - p_plus_marginal;

  double value = 0.0;
  for (std::size_t idx = 0; idx < dense.n_cells(); ++idx) {
    const auto s = dense.unpack(idx);
    const double joint_mass[2] = {dense.p_plus[idx], dense.p_minus[idx]};
    if (joint_mass[0] + joint_mass[1] <= 0.0) continue;
    double event_mass = 0.0, event_plus = 0.0;
    for (std::size_t other = 0; other < dense.n_cells(); ++other) {
      const auto t = dense.unpack(other);
      bool in_event = false;
      for (infomorph::SourceSet a : alpha.inner) {
        bool conj = true;
        for (int i = 0; i < dense.n_sources; ++i) {
          if ((a & (1 << i)) && t[i] != s[i]) {
            conj = false;
            break;
          }
        }
        if (conj) {
          in_event = true;
          break;
        }
      }
      if (in_event) {
        event_mass += dense.p_plus[other] + dense.p_minus[other];
        event_plus += dense.p_plus[other];
      }
    }
    const double marginals[2] = {p_plus_marginal, p_minus_marginal};
    const double event_y[2] = {event_plus, event_mass - event_plus};
    for (int y = 0; y < 2; ++y) {
      if (joint_mass[y] <= 0.0) continue;
      value += joint_mass[y] *
               std::log2(event_y[y] / event_mass / marginals[y]);
    }
  }
  return value;
}

// beta precedes alpha: every inner set of alpha contains some inner set of
// beta (re-stated from the definition, not taken from the library tables).
inline bool precedes(const infomorph::Antichain& beta, const infomorph::Antichain& alpha) {
  for (infomorph::SourceSet a : alpha.inner) {
    bool found = false;
    for (infomorph::SourceSet b : beta.inner) {
      if ((b & a) == b) {
        found = true;
        break;
      }
    }
    if (!found) return false;
  }
  return true;
}

// Solve zeta * atoms = redundancies with plain Gaussian elimination.
inline std::vector<double> atoms(const DenseJoint& dense,
                                 const infomorph::PidLattice& lattice) {
  const std::size_t n = lattice.size();
  std::vector<double> a(n * (n + 1), 0.0);
  for (std::size_t row = 0; row < n; ++row) {
    for (std::size_t col = 0; col < n; ++col) {
      a[row * (n + 1) + col] =
          precedes(lattice.antichains()[col], lattice.antichains()[row]) ? 1.0 : 0.0;
    }
    a[row * (n + 1) + n] = isx(dense, lattice.antichains()[row]);
  }
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t row = col + 1; row < n; ++row) {
      if (std::abs(a[row * (n + 1) + col]) > std::abs(a[pivot * (n + 1) + col])) pivot = row;
    }
    for (std::size_t k = 0; k <= n; ++k) std::swap(a[col * (n + 1) + k], a[pivot * (n + 1) + k]);
    if (a[col * (n + 1) + col] == 0.0) throw std::runtime_error("oracle: singular zeta");
    for (std::size_t row = 0; row < n; ++row) {
      if (row == col) continue;
      const double factor = a[row * (n + 1) + col] / a[col * (n + 1) + col];
      if (factor == 0.0) continue;
      for (std::size_t k = col; k <= n; ++k) {
        a[row * (n + 1) + k] -= factor * a[col * (n + 1) + k];
      }
    }
  }
  std::vector<double> solution(n);
  for (std::size_t row = 0; row < n; ++row) {
    solution[row] = a[row * (n + 1) + n] / a[row * (n + 1) + row];
  }
  return solution;
}

// Classical mutual information I(Y : S_subset) by definition.
inline double mutual_information(const DenseJoint& dense, infomorph::SourceSet subset) {
  double p_plus_marginal = 0.0;
  for (double v : dense.p_plus) p_plus_marginal += v;
  const double p_minus_marginal = dense.total() - p_plus_marginal;

  // group cells by projection
  std::vector<double> group_mass, group_plus;
  std::vector<long> group_of(dense.n_cells(), -1);
  std::vector<std::array<int, 3>> reps;
  for (std::size_t idx = 0; idx < dense.n_cells(); ++idx) {
    const auto s = dense.unpack(idx);
    long g = -1;
    for (std::size_t r = 0; r < reps.size(); ++r) {
      bool match = true;
      for (int i = 0; i < dense.n_sources; ++i) {
        if ((subset & (1 << i)) && reps[r][i] != s[i]) {
          match = false;
          break;
        }
      }
      if (match) {
        g = static_cast<long>(r);
        break;
      }
    }
    if (g < 0) {
      reps.push_back(s);
      group_mass.push_back(0.0);
      group_plus.push_back(0.0);
      g = static_cast<long>(reps.size()) - 1;
    }
    group_of[idx] = g;
    group_mass[g] += dense.p_plus[idx] + dense.p_minus[idx];
    group_plus[g] += dense.p_plus[idx];
  }
  double info = 0.0;
  for (std::size_t g = 0; g < group_mass.size(); ++g) {
    const double w_plus = group_plus[g];
    const double w_minus = group_mass[g] - group_plus[g];
    if (w_plus > 0.0) info += w_plus * std::log2(w_plus / (group_mass[g] * p_plus_marginal));
    if (w_minus > 0.0) info += w_minus * std::log2(w_minus / (group_mass[g] * p_minus_marginal));
  }
  return info;
}

inline double residual_entropy(const DenseJoint& dense) {
  double h = 0.0;
  for (std::size_t idx = 0; idx < dense.n_cells(); ++idx) {
    const double q = dense.p_plus[idx] + dense.p_minus[idx];
    if (q <= 0.0) continue;
    for (double w : {dense.p_plus[idx], dense.p_minus[idx]}) {
      if (w > 0.0) h -= w * std::log2(w / q);
    }
  }
  return h;
}

}  // namespace oracle
