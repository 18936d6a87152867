#pragma once

#include <span>
#include <vector>

#include "infomorph/joint.hpp"
#include "infomorph/lattice.hpp"

namespace infomorph {

// Shared-exclusion redundancy of one antichain, in bits:
//
//   I_cap(Y : S_alpha) = sum_{y,s} p(y,s) log2 P(y | OR_a AND_{i in a} S_i=s_i) / p(y)
//
// The disjunction-of-conjunctions event probability is computed by
// inclusion-exclusion over marginals of the antichain's inner-set unions.
// Terms with p(y,s) = 0 contribute exactly 0. The result carries the
// gradient with respect to the joint's fire_prob entries.
Differentiable isx_redundancy(const JointDistribution& joint, const Antichain& alpha);

// All redundancies of a lattice in canonical order (shares marginal tables
// across antichains; equivalent to calling isx_redundancy per antichain).
std::vector<Differentiable> isx_redundancies(const JointDistribution& joint,
                                             const PidLattice& lattice);

// Moebius inversion: atoms = inversion matrix * redundancies, with the
// residual entropy appended as the final entry. Lengths 5 (bivariate) or 19.
std::vector<Differentiable> atoms_from_redundancies(
    std::span<const Differentiable> redundancies, const PidLattice& lattice,
    const Differentiable& residual_entropy);

// For each non-empty source subset: classical mutual information computed
// directly from the joint minus the sum of atoms below that subset's
// singleton antichain. 3 residuals for two sources, 7 for three.
std::vector<double> consistency_residuals(std::span<const Differentiable> atoms,
                                          const JointDistribution& joint,
                                          const PidLattice& lattice);

// Classical plug-in mutual information I(Y : S_A) in bits for the source
// subset given as a bitmask.
double mutual_information(const JointDistribution& joint, SourceSet subset);

// G = gamma . atoms (including the residual-entropy entry). Throws on
// length mismatch.
Differentiable goal_value(std::span<const Differentiable> atoms,
                          std::span<const double> gamma);

}  // namespace infomorph
