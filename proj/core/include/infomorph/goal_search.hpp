#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace infomorph {

// One black-box evaluation of a goal vector: returns the objective (best
// validation accuracy of a truncated training run, or a mock in tests).
using GoalEvaluator =
    std::function<double(std::span<const double> gamma, std::uint64_t seed)>;

struct Trial {
  std::vector<double> gamma;
  double objective = 0.0;
  std::uint64_t seed = 0;
  double wall_seconds = 0.0;
};

struct SearchResult {
  std::vector<Trial> trials;
  std::size_t best_index = 0;

  const Trial& best() const { return trials[best_index]; }
};

struct CmaesOptions {
  int dim = 19;                      // full goal-vector length
  int population = 0;                // 0 = 4 + floor(3 ln n)
  double sigma0 = 0.3;
  std::vector<double> initial_mean;  // full length; default: heuristic goal
  double lo = -1.0;
  double hi = 1.0;
  bool fix_residual = true;          // last entry pinned to 0, not searched
};

// (mu/mu_w, lambda) CMA-ES maximizing the evaluator, sampled points
// box-clipped to [lo, hi]. Throws ConfigError if budget < population.
SearchResult cmaes_search(int budget, const GoalEvaluator& eval, std::uint64_t seed,
                          const CmaesOptions& options);

// Uniform sampling in the box over all dim entries.
SearchResult random_search(int budget, int dim, const GoalEvaluator& eval,
                           std::uint64_t seed, double lo = -1.0, double hi = 1.0);

struct AblationEntry {
  int index = 0;
  std::string label;
  double baseline = 0.0;
  double ablated = 0.0;
  double delta = 0.0;   // ablated - baseline
  bool evaluated = false;  // false: entry already zero, no retraining needed
};

// Individually zero each non-zero entry and report the accuracy change,
// averaged over n_seeds evaluations. Zero entries are reported with delta 0
// without retraining.
std::vector<AblationEntry> ablate_individual(std::span<const double> gamma,
                                             std::span<const std::string> labels,
                                             const GoalEvaluator& eval, int n_seeds,
                                             std::uint64_t seed);

struct CumulativeStep {
  int step = 0;             // number of zeroed entries so far
  int zeroed_index = -1;    // -1 for the baseline row
  std::string label;
  double accuracy = 0.0;
  bool evaluated = false;
};

// Zero entries cumulatively in ascending order of individual |delta|; no-op
// steps (already-zero entries) reuse the previous accuracy.
std::vector<CumulativeStep> ablate_cumulative(std::span<const double> gamma,
                                              std::span<const AblationEntry> individual,
                                              const GoalEvaluator& eval, int n_seeds,
                                              std::uint64_t seed);

struct PerturbationEntry {
  int index = 0;
  std::string label;
  std::string kind;     // rel+10, rel-10, abs+0.1, abs-0.1
  double gamma_value = 0.0;
  double delta = 0.0;
  bool evaluated = false;  // relative perturbations of zero entries are skipped
};

// 4 perturbations x dim entries accuracy deltas.
std::vector<PerturbationEntry> perturb_sensitivity(std::span<const double> gamma,
                                                   std::span<const std::string> labels,
                                                   const GoalEvaluator& eval, int n_seeds,
                                                   std::uint64_t seed);

}  // namespace infomorph
