#include "infomorph/goal_search.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "infomorph/errors.hpp"
#include "infomorph/rng.hpp"

namespace infomorph {

namespace {

double now_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

double mean_objective(const GoalEvaluator& eval, std::span<const double> gamma,
                      int n_seeds, std::uint64_t seed) {
  double sum = 0.0;
  for (int s = 0; s < n_seeds; ++s) sum += eval(gamma, seed + static_cast<std::uint64_t>(s));
  return sum / n_seeds;
}

// Cyclic Jacobi eigendecomposition of a symmetric matrix; a is row-major
// n x n, eigenvectors come out as columns of v.
void jacobi_eigen(std::vector<double> a, int n, std::vector<double>& eigenvalues,
                  std::vector<double>& v) {
  v.assign(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) v[i * n + i] = 1.0;
  for (int sweep = 0; sweep < 64; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) off += a[p * n + q] * a[p * n + q];
    }
    if (off < 1e-26) break;
    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = a[p * n + q];
        if (std::abs(apq) < 1e-300) continue;
        const double theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < n; ++k) {
          const double akp = a[k * n + p];
          const double akq = a[k * n + q];
          a[k * n + p] = c * akp - s * akq;
          a[k * n + q] = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = a[p * n + k];
          const double aqk = a[q * n + k];
          a[p * n + k] = c * apk - s * aqk;
          a[q * n + k] = s * apk + c * aqk;
        }
        for (int k = 0; k < n; ++k) {
          const double vkp = v[k * n + p];
          const double vkq = v[k * n + q];
          v[k * n + p] = c * vkp - s * vkq;
          v[k * n + q] = s * vkp + c * vkq;
        }
      }
    }
  }
  eigenvalues.resize(n);
  for (int i = 0; i < n; ++i) eigenvalues[i] = a[i * n + i];
}

double normal_draw(Rng64& rng) {
  constexpr double kTwoPi = 6.283185307179586;
  double u1 = rng.uniform();
  while (u1 <= 0.0) u1 = rng.uniform();
  const double u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

}  // namespace

SearchResult cmaes_search(int budget, const GoalEvaluator& eval, std::uint64_t seed,
                          const CmaesOptions& options) {
  const int full_dim = options.dim;
  const int n = options.fix_residual ? full_dim - 1 : full_dim;
  if (n < 1) throw ConfigError("cmaes_search: dimension must be >= 1");

  const int lambda =
      options.population > 0 ? options.population : 4 + static_cast<int>(3.0 * std::log(n));
  if (budget < lambda) {
    throw ConfigError("cmaes_search: budget " + std::to_string(budget) +
                      " is smaller than the population size " + std::to_string(lambda));
  }
  const int mu = lambda / 2;
  std::vector<double> weights(mu);
  for (int i = 0; i < mu; ++i) {
    weights[i] = std::log(0.5 * (lambda + 1)) - std::log(i + 1.0);
  }
  const double weight_sum = std::accumulate(weights.begin(), weights.end(), 0.0);
  for (auto& w : weights) w /= weight_sum;
  double mu_eff = 0.0;
  for (double w : weights) mu_eff += w * w;
  mu_eff = 1.0 / mu_eff;

  const double c_sigma = (mu_eff + 2.0) / (n + mu_eff + 5.0);
  const double d_sigma =
      1.0 + 2.0 * std::max(0.0, std::sqrt((mu_eff - 1.0) / (n + 1.0)) - 1.0) + c_sigma;
  const double c_c = (4.0 + mu_eff / n) / (n + 4.0 + 2.0 * mu_eff / n);
  const double c_1 = 2.0 / ((n + 1.3) * (n + 1.3) + mu_eff);
  const double c_mu = std::min(1.0 - c_1, 2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) /
                                              ((n + 2.0) * (n + 2.0) + mu_eff));
  const double chi_n = std::sqrt(static_cast<double>(n)) *
                       (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n));

  std::vector<double> mean(n, 0.0);
  if (!options.initial_mean.empty()) {
    if (static_cast<int>(options.initial_mean.size()) != full_dim) {
      throw ConfigError("cmaes_search: initial mean length mismatch");
    }
    for (int i = 0; i < n; ++i) mean[i] = options.initial_mean[i];
  }
  for (auto& m : mean) m = std::clamp(m, options.lo, options.hi);

  double sigma = options.sigma0;
  std::vector<double> cov(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) cov[i * n + i] = 1.0;
  std::vector<double> p_sigma(n, 0.0), p_c(n, 0.0);

  Rng64 rng(counter_hash({seed, 0xC3AE5ULL}));
  SearchResult result;
  result.trials.reserve(budget);
  double best = -std::numeric_limits<double>::infinity();

  auto make_full = [&](const std::vector<double>& x) {
    std::vector<double> g(full_dim, 0.0);
    for (int i = 0; i < n; ++i) g[i] = x[i];
    if (options.fix_residual) g[full_dim - 1] = 0.0;
    return g;
  };

  std::vector<double> eigenvalues, basis;
  int generation = 0;
  while (static_cast<int>(result.trials.size()) + lambda <= budget) {
    jacobi_eigen(cov, n, eigenvalues, basis);
    std::vector<double> scale(n);
    for (int i = 0; i < n; ++i) scale[i] = std::sqrt(std::max(eigenvalues[i], 1e-30));

    struct Candidate {
      std::vector<double> x;
      double objective;
    };
    std::vector<Candidate> population(lambda);
    for (int k = 0; k < lambda; ++k) {
      std::vector<double> z(n);
      for (int i = 0; i < n; ++i) z[i] = normal_draw(rng);
      std::vector<double> x(n);
      for (int i = 0; i < n; ++i) {
        double step = 0.0;
        for (int j = 0; j < n; ++j) step += basis[i * n + j] * scale[j] * z[j];
        x[i] = std::clamp(mean[i] + sigma * step, options.lo, options.hi);
      }
      const std::uint64_t trial_seed =
          counter_hash({seed, static_cast<std::uint64_t>(generation),
                        static_cast<std::uint64_t>(k)});
      const auto gamma = make_full(x);
      const double t0 = now_seconds();
      const double objective = eval(gamma, trial_seed);
      Trial trial{gamma, objective, trial_seed, now_seconds() - t0};
      if (objective > best) {
        best = objective;
        result.best_index = result.trials.size();
      }
      result.trials.push_back(trial);
      population[k] = Candidate{std::move(x), objective};
    }

    std::vector<int> order(lambda);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return population[a].objective > population[b].objective;
    });

    // mean update from the mu best (clipped) candidates
    std::vector<double> old_mean = mean;
    std::fill(mean.begin(), mean.end(), 0.0);
    for (int r = 0; r < mu; ++r) {
      const auto& x = population[order[r]].x;
      for (int i = 0; i < n; ++i) mean[i] += weights[r] * x[i];
    }

    std::vector<double> shift(n);
    for (int i = 0; i < n; ++i) shift[i] = (mean[i] - old_mean[i]) / sigma;

    // C^(-1/2) * shift via the eigendecomposition
    std::vector<double> c_inv_sqrt_shift(n, 0.0);
    for (int j = 0; j < n; ++j) {
      double proj = 0.0;
      for (int i = 0; i < n; ++i) proj += basis[i * n + j] * shift[i];
      proj /= scale[j];
      for (int i = 0; i < n; ++i) c_inv_sqrt_shift[i] += basis[i * n + j] * proj;
    }
    double p_sigma_norm2 = 0.0;
    for (int i = 0; i < n; ++i) {
      p_sigma[i] = (1.0 - c_sigma) * p_sigma[i] +
                   std::sqrt(c_sigma * (2.0 - c_sigma) * mu_eff) * c_inv_sqrt_shift[i];
      p_sigma_norm2 += p_sigma[i] * p_sigma[i];
    }
    ++generation;
    const double expected_decay =
        std::sqrt(1.0 - std::pow(1.0 - c_sigma, 2.0 * generation));
    const bool h_sigma =
        std::sqrt(p_sigma_norm2) / expected_decay < (1.4 + 2.0 / (n + 1.0)) * chi_n;

    for (int i = 0; i < n; ++i) {
      p_c[i] = (1.0 - c_c) * p_c[i] +
               (h_sigma ? std::sqrt(c_c * (2.0 - c_c) * mu_eff) * shift[i] : 0.0);
    }

    const double c1a = c_1 * (1.0 - (h_sigma ? 0.0 : 1.0) * c_c * (2.0 - c_c));
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        double rank_mu = 0.0;
        for (int r = 0; r < mu; ++r) {
          const auto& x = population[order[r]].x;
          const double yi = (x[i] - old_mean[i]) / sigma;
          const double yj = (x[j] - old_mean[j]) / sigma;
          rank_mu += weights[r] * yi * yj;
        }
        cov[i * n + j] = (1.0 - c1a - c_mu) * cov[i * n + j] +
                         c_1 * p_c[i] * p_c[j] + c_mu * rank_mu;
      }
    }
    sigma *= std::exp((c_sigma / d_sigma) * (std::sqrt(p_sigma_norm2) / chi_n - 1.0));
    sigma = std::min(sigma, 1e3);
  }
  return result;
}

SearchResult random_search(int budget, int dim, const GoalEvaluator& eval,
                           std::uint64_t seed, double lo, double hi) {
  if (budget < 1) throw ConfigError("random_search: budget must be >= 1");
  Rng64 rng(counter_hash({seed, 0x4A2DULL}));
  SearchResult result;
  result.trials.reserve(budget);
  double best = -std::numeric_limits<double>::infinity();
  for (int t = 0; t < budget; ++t) {
    std::vector<double> gamma(dim);
    for (auto& g : gamma) g = lo + (hi - lo) * rng.uniform();
    const std::uint64_t trial_seed = counter_hash({seed, 0x7A1AULL, static_cast<std::uint64_t>(t)});
    const double t0 = now_seconds();
    const double objective = eval(gamma, trial_seed);
    if (objective > best) {
      best = objective;
      result.best_index = result.trials.size();
    }
    result.trials.push_back(Trial{std::move(gamma), objective, trial_seed,
                                  now_seconds() - t0});
  }
  return result;
}

std::vector<AblationEntry> ablate_individual(std::span<const double> gamma,
                                             std::span<const std::string> labels,
                                             const GoalEvaluator& eval, int n_seeds,
                                             std::uint64_t seed) {
  if (labels.size() != gamma.size()) throw ConfigError("ablate: labels/gamma length mismatch");
  const double baseline = mean_objective(eval, gamma, n_seeds, seed);
  std::vector<AblationEntry> entries;
  entries.reserve(gamma.size());
  std::vector<double> working(gamma.begin(), gamma.end());
  for (std::size_t i = 0; i < gamma.size(); ++i) {
    AblationEntry entry;
    entry.index = static_cast<int>(i);
    entry.label = labels[i];
    entry.baseline = baseline;
    if (gamma[i] == 0.0) {
      entry.ablated = baseline;
      entry.delta = 0.0;
      entry.evaluated = false;
    } else {
      const double saved = working[i];
      working[i] = 0.0;
      entry.ablated = mean_objective(eval, working, n_seeds, seed);
      entry.delta = entry.ablated - baseline;
      entry.evaluated = true;
      working[i] = saved;
    }
    entries.push_back(std::move(entry));
  }
  return entries;
}

std::vector<CumulativeStep> ablate_cumulative(std::span<const double> gamma,
                                              std::span<const AblationEntry> individual,
                                              const GoalEvaluator& eval, int n_seeds,
                                              std::uint64_t seed) {
  if (individual.size() != gamma.size()) {
    throw ConfigError("ablate_cumulative: individual results length mismatch");
  }
  std::vector<std::size_t> order(gamma.size());
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(individual[a].delta) < std::abs(individual[b].delta);
  });

  std::vector<CumulativeStep> steps;
  std::vector<double> working(gamma.begin(), gamma.end());
  CumulativeStep base;
  base.step = 0;
  base.zeroed_index = -1;
  base.label = "baseline";
  base.accuracy = individual.empty() ? mean_objective(eval, working, n_seeds, seed)
                                     : individual[0].baseline;
  base.evaluated = true;
  steps.push_back(base);

  double last = base.accuracy;
  int step = 0;
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    const std::size_t i = order[rank];
    CumulativeStep s;
    s.step = ++step;
    s.zeroed_index = static_cast<int>(i);
    s.label = individual[i].label;
    if (working[i] == 0.0) {
      s.accuracy = last;  // no-op step: entry already zero
      s.evaluated = false;
    } else {
      working[i] = 0.0;
      s.accuracy = mean_objective(eval, working, n_seeds, seed);
      s.evaluated = true;
      last = s.accuracy;
    }
    steps.push_back(std::move(s));
  }
  return steps;
}

std::vector<PerturbationEntry> perturb_sensitivity(std::span<const double> gamma,
                                                   std::span<const std::string> labels,
                                                   const GoalEvaluator& eval, int n_seeds,
                                                   std::uint64_t seed) {
  if (labels.size() != gamma.size()) throw ConfigError("perturb: labels/gamma length mismatch");
  const double baseline = mean_objective(eval, gamma, n_seeds, seed);
  struct Variant {
    const char* kind;
    bool relative;
    double amount;
  };
  const Variant variants[4] = {{"rel+10%", true, 1.1},
                               {"rel-10%", true, 0.9},
                               {"abs+0.1", false, 0.1},
                               {"abs-0.1", false, -0.1}};
  std::vector<PerturbationEntry> entries;
  entries.reserve(gamma.size() * 4);
  std::vector<double> working(gamma.begin(), gamma.end());
  for (std::size_t i = 0; i < gamma.size(); ++i) {
    for (const auto& variant : variants) {
      PerturbationEntry entry;
      entry.index = static_cast<int>(i);
      entry.label = labels[i];
      entry.kind = variant.kind;
      if (variant.relative && gamma[i] == 0.0) {
        // a relative perturbation of a zero entry changes nothing
        entry.gamma_value = 0.0;
        entry.delta = 0.0;
        entry.evaluated = false;
      } else {
        const double saved = working[i];
        working[i] = variant.relative ? saved * variant.amount : saved + variant.amount;
        entry.gamma_value = working[i];
        entry.delta = mean_objective(eval, working, n_seeds, seed) - baseline;
        entry.evaluated = true;
        working[i] = saved;
      }
      entries.push_back(std::move(entry));
    }
  }
  return entries;
}

}  // namespace infomorph
