#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace infomorph {

// A source subset is a bitmask over source indices (bit 0 = F, 1 = C, 2 = L).
using SourceSet = std::uint8_t;

// An antichain of non-empty source subsets, pairwise incomparable under
// inclusion. The inner sets denote synergies, the outer set redundancy
// between them. Inner sets are kept sorted by (size, bitmask) so that equal
// antichains have identical representations.
struct Antichain {
  std::vector<SourceSet> inner;

  bool operator==(const Antichain& other) const { return inner == other.inner; }

  // Display form like "{F}{CL}". Source letters are F, C, L in index order.
  std::string label() const;
};

// The redundancy lattice for 2 or 3 sources, in a fixed canonical order:
// antichains sorted by descending inner-set count, then ascending inner-set
// sizes, then ascending bitmasks. This order is what all atom/goal vectors
// and their serializations index against:
//
//   n=2:  {F}{C}  {F}  {C}  {FC}                                   (4 atoms)
//   n=3:  {F}{C}{L}  {FC}{FL}{CL}  {F}{C}  {F}{L}  {C}{L}  {F}{CL}
//         {C}{FL}  {L}{FC}  {FC}{FL}  {FC}{CL}  {FL}{CL}  {F}  {C}
//         {L}  {FC}  {FL}  {CL}  {FCL}                            (18 atoms)
//
// Atom and goal vectors carry one extra trailing entry for the residual
// entropy, giving lengths 5 and 19.
class PidLattice {
 public:
  // Throws ConfigError unless n_sources is 2 or 3.
  explicit PidLattice(int n_sources);

  int n_sources() const { return n_sources_; }
  std::size_t size() const { return antichains_.size(); }
  const std::vector<Antichain>& antichains() const { return antichains_; }

  // True iff beta precedes alpha in the lattice order, i.e. every inner set
  // of alpha contains some inner set of beta. The redundancy of alpha is the
  // sum of the atoms of all antichains preceding it.
  bool below(std::size_t beta, std::size_t alpha) const {
    return below_[beta * size() + alpha];
  }

  // Integer inverse of the zeta matrix Z[a][b] = below(b, a); atom vector =
  // inversion * redundancy vector. Row-major size() x size().
  const std::vector<double>& inversion() const { return inversion_; }

  // Index of an antichain in canonical order, or -1 if it does not belong.
  std::ptrdiff_t index_of(const Antichain& alpha) const;

  // Canonical antichain with the given inner sets (sorts and validates).
  static Antichain make_antichain(std::vector<SourceSet> inner_sets);

  // Atom labels plus the trailing "H_res" entry.
  std::vector<std::string> atom_labels() const;

  // Shared instances (immutable, safe to use from any thread).
  static const PidLattice& bivariate();
  static const PidLattice& trivariate();

 private:
  int n_sources_;
  std::vector<Antichain> antichains_;
  std::vector<char> below_;       // row-major [beta][alpha]
  std::vector<double> inversion_; // row-major, exact integers stored as double
};

}  // namespace infomorph
