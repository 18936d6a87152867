#include "infomorph/lattice.hpp"

#include <algorithm>
#include <bit>
#include <cstdlib>
#include <numeric>
#include <stdexcept>

#include "infomorph/errors.hpp"

namespace infomorph {

namespace {

constexpr const char* kSourceLetters = "FCL";

bool subset_of(SourceSet a, SourceSet b) { return (a & b) == a; }

// beta precedes alpha iff for every inner set a of alpha there is an inner
// set b of beta with b subset of a.
bool precedes(const Antichain& beta, const Antichain& alpha) {
  for (SourceSet a : alpha.inner) {
    bool found = false;
    for (SourceSet b : beta.inner) {
      if (subset_of(b, a)) {
        found = true;
        break;
      }
    }
    if (!found) return false;
  }
  return true;
}

// Canonical order: descending inner-set count, then ascending size tuple,
// then ascending bitmask sequence.
bool canonical_less(const Antichain& x, const Antichain& y) {
  if (x.inner.size() != y.inner.size()) return x.inner.size() > y.inner.size();
  for (std::size_t i = 0; i < x.inner.size(); ++i) {
    const int sx = std::popcount(static_cast<unsigned>(x.inner[i]));
    const int sy = std::popcount(static_cast<unsigned>(y.inner[i]));
    if (sx != sy) return sx < sy;
  }
  return x.inner < y.inner;
}

std::vector<Antichain> enumerate_antichains(int n_sources) {
  const int n_subsets = (1 << n_sources) - 1;  // non-empty subsets as masks 1..
  std::vector<Antichain> result;
  for (std::uint32_t family = 1; family < (1u << n_subsets); ++family) {
    std::vector<SourceSet> members;
    for (int s = 0; s < n_subsets; ++s) {
      if (family & (1u << s)) members.push_back(static_cast<SourceSet>(s + 1));
    }
    bool incomparable = true;
    for (std::size_t i = 0; i < members.size() && incomparable; ++i) {
      for (std::size_t j = 0; j < members.size(); ++j) {
        if (i != j && subset_of(members[i], members[j])) {
          incomparable = false;
          break;
        }
      }
    }
    if (!incomparable) continue;
    result.push_back(PidLattice::make_antichain(std::move(members)));
  }
  std::sort(result.begin(), result.end(), canonical_less);
  return result;
}

}  // namespace

std::string Antichain::label() const {
  std::string out;
  for (SourceSet s : inner) {
    out += '{';
    for (int i = 0; i < 3; ++i) {
      if (s & (1 << i)) out += kSourceLetters[i];
    }
    out += '}';
  }
  return out;
}

Antichain PidLattice::make_antichain(std::vector<SourceSet> inner_sets) {
  if (inner_sets.empty()) throw ConfigError("antichain must have at least one inner set");
  std::sort(inner_sets.begin(), inner_sets.end(), [](SourceSet a, SourceSet b) {
    auto ka = (std::popcount(static_cast<unsigned>(a)) << 8) | a;
    auto kb = (std::popcount(static_cast<unsigned>(b)) << 8) | b;
    return ka < kb;
  });
  for (std::size_t i = 0; i < inner_sets.size(); ++i) {
    if (inner_sets[i] == 0) throw ConfigError("antichain inner sets must be non-empty");
    for (std::size_t j = 0; j < inner_sets.size(); ++j) {
      if (i != j && subset_of(inner_sets[i], inner_sets[j])) {
        throw ConfigError("inner sets of an antichain must be pairwise incomparable");
      }
    }
  }
  return Antichain{std::move(inner_sets)};
}

PidLattice::PidLattice(int n_sources) : n_sources_(n_sources) {
  if (n_sources != 2 && n_sources != 3) {
    throw ConfigError("PID lattice supports 2 or 3 sources, got " +
                      std::to_string(n_sources));
  }
  antichains_ = enumerate_antichains(n_sources);
  const std::size_t n = antichains_.size();

  below_.assign(n * n, 0);
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t a = 0; a < n; ++a) {
      below_[b * n + a] = precedes(antichains_[b], antichains_[a]) ? 1 : 0;
    }
  }

  // Invert the zeta matrix exactly in integer arithmetic. Under a linear
  // extension of the lattice order the zeta matrix is unit-triangular, so
  // its inverse is integral and obtained by forward substitution.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<int> below_count(n, 0);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) below_count[a] += below_[b * n + a];
  }
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return below_count[x] < below_count[y];
  });

  std::vector<long long> zp(n * n, 0);  // permuted zeta, lower triangular
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      zp[i * n + j] = below_[order[j] * n + order[i]];
    }
  }
  std::vector<long long> inv(n * n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      long long v = (i == j) ? 1 : 0;
      for (std::size_t k = j; k < i; ++k) v -= zp[i * n + k] * inv[k * n + j];
      inv[i * n + j] = v;
    }
  }

  inversion_.assign(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      inversion_[order[i] * n + order[j]] = static_cast<double>(inv[i * n + j]);
    }
  }

  // Round-trip check: inversion * zeta must be the identity, exactly.
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      long long acc = 0;
      for (std::size_t k = 0; k < n; ++k) {
        acc += static_cast<long long>(inversion_[i * n + k]) * below_[j * n + k];
      }
      if (acc != (i == j ? 1 : 0)) {
        throw NumericalError("lattice inversion failed self-check");
      }
    }
  }
}

std::ptrdiff_t PidLattice::index_of(const Antichain& alpha) const {
  for (std::size_t i = 0; i < antichains_.size(); ++i) {
    if (antichains_[i] == alpha) return static_cast<std::ptrdiff_t>(i);
  }
  return -1;
}

std::vector<std::string> PidLattice::atom_labels() const {
  std::vector<std::string> labels;
  labels.reserve(size() + 1);
  for (const auto& a : antichains_) labels.push_back(a.label());
  labels.push_back("H_res");
  return labels;
}

const PidLattice& PidLattice::bivariate() {
  static const PidLattice lattice(2);
  return lattice;
}

const PidLattice& PidLattice::trivariate() {
  static const PidLattice lattice(3);
  return lattice;
}

}  // namespace infomorph
