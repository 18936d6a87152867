#include "infomorph/pid.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "infomorph/errors.hpp"

namespace infomorph {

namespace {

constexpr double kLn2 = 0.6931471805599453;
constexpr double kGradLogFloor = 1e-12;  // probability clamp inside logs, gradients only

double log2_clamped(double p) { return std::log2(std::max(p, kGradLogFloor)); }

// Grouping of the occupied cells by their projection onto one source subset,
// with the (constant) marginal mass and the (theta-linear) joint mass of
// Y=+1 per group.
struct MarginalTable {
  std::vector<std::uint32_t> group;  // per cell -> group id
  std::vector<double> mass;          // per group: P(S_A = u)
  std::vector<double> w_plus;        // per group: P(Y=+1, S_A = u)
};

std::uint64_t project_key(const std::array<std::uint16_t, 3>& cell, SourceSet mask) {
  std::uint64_t key = 0;
  for (int i = 0; i < 3; ++i) {
    if (mask & (1 << i)) key |= static_cast<std::uint64_t>(cell[i]) << (16 * i);
  }
  return key;
}

MarginalTable build_marginal(const JointDistribution& joint, SourceSet mask) {
  const std::size_t m = joint.n_cells();
  std::vector<std::uint64_t> keys(m);
  for (std::size_t j = 0; j < m; ++j) keys[j] = project_key(joint.cells[j], mask);

  std::vector<std::uint32_t> order(m);
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(),
            [&](std::uint32_t a, std::uint32_t b) { return keys[a] < keys[b]; });

  MarginalTable table;
  table.group.resize(m);
  std::uint32_t g = 0;
  for (std::size_t r = 0; r < m; ++r) {
    if (r > 0 && keys[order[r]] != keys[order[r - 1]]) ++g;
    table.group[order[r]] = g;
  }
  table.mass.assign(g + 1, 0.0);
  table.w_plus.assign(g + 1, 0.0);
  for (std::size_t j = 0; j < m; ++j) {
    table.mass[table.group[j]] += joint.cell_mass[j];
    table.w_plus[table.group[j]] += joint.cell_mass[j] * joint.fire_prob[j];
  }
  return table;
}

// Inclusion-exclusion expansion of the antichain's disjunction event,
// consolidated per union mask: P(E) = sum_T coef_T * P(S_{U(T)} = s_{U(T)}).
struct IeTerm {
  SourceSet mask;
  double coef;
};

std::vector<IeTerm> inclusion_exclusion_terms(const Antichain& alpha) {
  const std::size_t k = alpha.inner.size();
  std::vector<double> coef(8, 0.0);
  for (std::uint32_t t = 1; t < (1u << k); ++t) {
    SourceSet u = 0;
    for (std::size_t i = 0; i < k; ++i) {
      if (t & (1u << i)) u |= alpha.inner[i];
    }
    coef[u] += (std::popcount(t) % 2 == 1) ? 1.0 : -1.0;
  }
  std::vector<IeTerm> terms;
  for (int u = 1; u < 8; ++u) {
    if (coef[u] != 0.0) terms.push_back({static_cast<SourceSet>(u), coef[u]});
  }
  return terms;
}

using TableSet = std::array<MarginalTable, 8>;  // indexed by subset mask

void ensure_tables(const JointDistribution& joint, const std::vector<IeTerm>& terms,
                   TableSet& tables, std::array<bool, 8>& built) {
  for (const auto& t : terms) {
    if (!built[t.mask]) {
      tables[t.mask] = build_marginal(joint, t.mask);
      built[t.mask] = true;
    }
  }
}

Differentiable isx_impl(const JointDistribution& joint, const Antichain& alpha,
                        const TableSet& tables) {
  const std::size_t m = joint.n_cells();
  const auto terms = inclusion_exclusion_terms(alpha);

  const double p_plus = joint.target_marginal();
  const double p_minus = 1.0 - p_plus;

  // Event probabilities per cell. Mathematically N+ >= q*theta, N- >= q*(1-theta)
  // and D >= q; the clamps only absorb inclusion-exclusion rounding.
  std::vector<double> n_plus(m), n_minus(m), event_mass(m);
  for (std::size_t j = 0; j < m; ++j) {
    double d = 0.0, np = 0.0;
    for (const auto& t : terms) {
      const auto& table = tables[t.mask];
      const std::uint32_t g = table.group[j];
      d += t.coef * table.mass[g];
      np += t.coef * table.w_plus[g];
    }
    const double q = joint.cell_mass[j];
    const double theta = joint.fire_prob[j];
    event_mass[j] = std::max(d, q);
    n_plus[j] = std::max(np, q * theta);
    n_minus[j] = std::max(d - np, q * (1.0 - theta));
  }

  Differentiable result(0.0, m);

  // Value: terms with zero joint mass contribute exactly 0 and are skipped.
  double value = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    const double q = joint.cell_mass[j];
    const double theta = joint.fire_prob[j];
    const double l2d = std::log2(event_mass[j]);
    if (theta > 0.0) {
      value += q * theta * (std::log2(n_plus[j]) - l2d - std::log2(p_plus));
    }
    if (theta < 1.0) {
      value += q * (1.0 - theta) * (std::log2(n_minus[j]) - l2d - std::log2(p_minus));
    }
  }
  result.value = value;

  // Gradient with respect to theta_k. The event masses and source marginals
  // are constants; the p(y) log-derivative contributions cancel exactly.
  std::array<std::vector<double>, 8> s_plus, s_minus;
  for (const auto& t : terms) {
    s_plus[t.mask].assign(tables[t.mask].mass.size(), 0.0);
    s_minus[t.mask].assign(tables[t.mask].mass.size(), 0.0);
  }
  for (std::size_t j = 0; j < m; ++j) {
    const double q = joint.cell_mass[j];
    const double theta = joint.fire_prob[j];
    const double r_plus = (theta > 0.0) ? q * theta / n_plus[j] : 0.0;
    const double r_minus = (theta < 1.0) ? q * (1.0 - theta) / n_minus[j] : 0.0;
    for (const auto& t : terms) {
      const std::uint32_t g = tables[t.mask].group[j];
      s_plus[t.mask][g] += r_plus;
      s_minus[t.mask][g] += r_minus;
    }
  }
  const double l2p_plus = log2_clamped(p_plus);
  const double l2p_minus = log2_clamped(p_minus);
  for (std::size_t k = 0; k < m; ++k) {
    const double q = joint.cell_mass[k];
    double ie_sum = 0.0;
    for (const auto& t : terms) {
      const std::uint32_t g = tables[t.mask].group[k];
      ie_sum += t.coef * (s_plus[t.mask][g] - s_minus[t.mask][g]);
    }
    result.grad[k] = q * (log2_clamped(n_plus[k]) - log2_clamped(n_minus[k]) -
                          l2p_plus + l2p_minus + ie_sum / kLn2);
  }
  return result;
}

void validate_antichain_sources(const JointDistribution& joint, const Antichain& alpha) {
  for (SourceSet s : alpha.inner) {
    if (s >= (1 << joint.n_sources)) {
      throw ConfigError("antichain " + alpha.label() + " references sources beyond n_sources=" +
                        std::to_string(joint.n_sources));
    }
  }
}

}  // namespace

Differentiable isx_redundancy(const JointDistribution& joint, const Antichain& alpha) {
  validate_antichain_sources(joint, alpha);
  TableSet tables;
  std::array<bool, 8> built{};
  ensure_tables(joint, inclusion_exclusion_terms(alpha), tables, built);
  return isx_impl(joint, alpha, tables);
}

std::vector<Differentiable> isx_redundancies(const JointDistribution& joint,
                                             const PidLattice& lattice) {
  if (lattice.n_sources() != joint.n_sources) {
    throw ConfigError("lattice/joint source count mismatch");
  }
  TableSet tables;
  std::array<bool, 8> built{};
  std::vector<Differentiable> result;
  result.reserve(lattice.size());
  for (const auto& alpha : lattice.antichains()) {
    ensure_tables(joint, inclusion_exclusion_terms(alpha), tables, built);
    result.push_back(isx_impl(joint, alpha, tables));
  }
  return result;
}

std::vector<Differentiable> atoms_from_redundancies(
    std::span<const Differentiable> redundancies, const PidLattice& lattice,
    const Differentiable& residual_entropy) {
  const std::size_t n = lattice.size();
  if (redundancies.size() != n) {
    throw ConfigError("expected " + std::to_string(n) + " redundancies, got " +
                      std::to_string(redundancies.size()));
  }
  const auto& inv = lattice.inversion();
  std::vector<Differentiable> atoms;
  atoms.reserve(n + 1);
  const std::size_t m = redundancies.empty() ? 0 : redundancies[0].grad.size();
  for (std::size_t a = 0; a < n; ++a) {
    Differentiable atom(0.0, m);
    for (std::size_t b = 0; b < n; ++b) {
      const double w = inv[a * n + b];
      if (w != 0.0) atom.add_scaled(redundancies[b], w);
    }
    atoms.push_back(std::move(atom));
  }
  atoms.push_back(residual_entropy);
  return atoms;
}

double mutual_information(const JointDistribution& joint, SourceSet subset) {
  const auto table = build_marginal(joint, subset);
  const double p_plus = joint.target_marginal();
  const double p_minus = 1.0 - p_plus;
  double info = 0.0;
  for (std::size_t g = 0; g < table.mass.size(); ++g) {
    const double mass = table.mass[g];
    const double w_plus = table.w_plus[g];
    const double w_minus = mass - w_plus;
    if (w_plus > 0.0) info += w_plus * std::log2(w_plus / (mass * p_plus));
    if (w_minus > 0.0) info += w_minus * std::log2(w_minus / (mass * p_minus));
  }
  return info;
}

std::vector<double> consistency_residuals(std::span<const Differentiable> atoms,
                                          const JointDistribution& joint,
                                          const PidLattice& lattice) {
  if (atoms.size() != lattice.size() + 1) {
    throw ConfigError("atom vector length does not match lattice");
  }
  // Subsets ordered by (size, bitmask): F, C, [L,] FC, [FL, CL, FCL].
  std::vector<SourceSet> subsets;
  for (int size = 1; size <= joint.n_sources; ++size) {
    for (int mask = 1; mask < (1 << joint.n_sources); ++mask) {
      if (std::popcount(static_cast<unsigned>(mask)) == size) {
        subsets.push_back(static_cast<SourceSet>(mask));
      }
    }
  }
  std::vector<double> residuals;
  residuals.reserve(subsets.size());
  for (SourceSet subset : subsets) {
    const auto idx = lattice.index_of(PidLattice::make_antichain({subset}));
    double atom_sum = 0.0;
    for (std::size_t b = 0; b < lattice.size(); ++b) {
      if (lattice.below(b, static_cast<std::size_t>(idx))) atom_sum += atoms[b].value;
    }
    residuals.push_back(mutual_information(joint, subset) - atom_sum);
  }
  return residuals;
}

Differentiable goal_value(std::span<const Differentiable> atoms,
                          std::span<const double> gamma) {
  if (atoms.size() != gamma.size()) {
    throw ConfigError("goal vector length " + std::to_string(gamma.size()) +
                      " does not match atom vector length " + std::to_string(atoms.size()));
  }
  const std::size_t m = atoms.empty() ? 0 : atoms[0].grad.size();
  Differentiable goal(0.0, m);
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    if (gamma[i] != 0.0) goal.add_scaled(atoms[i], gamma[i]);
  }
  return goal;
}

}  // namespace infomorph
