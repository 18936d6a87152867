// Micro-benchmarks for the training hot path: per-neuron PID decomposition
// with gradients, joint estimation, and the hidden-layer forward pass.
// Self-contained chrono harness; prints one line per case.

#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#include "infomorph/estimator.hpp"
#include "infomorph/network.hpp"
#include "infomorph/pid.hpp"
#include "infomorph/rng.hpp"

using namespace infomorph;

namespace {

volatile double sink;  // defeats dead-code elimination

template <typename Fn>
void bench(const std::string& name, int iterations, Fn&& fn) {
  // warmup
  fn();
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < iterations; ++i) fn();
  const double total =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("%-44s %8.3f ms/iter  (%d iters)\n", name.c_str(),
              1e3 * total / iterations, iterations);
}

BatchActivations random_batch(std::size_t n, Rng64& rng) {
  BatchActivations batch;
  for (std::size_t i = 0; i < n; ++i) {
    batch.feedforward.push_back(40.0 * (rng.uniform() - 0.5));
    batch.context.push_back(40.0 * (rng.uniform() - 0.5));
    batch.lateral.push_back(40.0 * (rng.uniform() - 0.5));
    batch.fire_prob.push_back(0.02 + 0.96 * rng.uniform());
  }
  return batch;
}

}  // namespace

int main() {
  Rng64 rng(1);
  const std::array<BinningSpec, 3> specs = {BinningSpec::fixed_range(20, -20, 20),
                                            BinningSpec::fixed_range(20, -20, 20),
                                            BinningSpec::fixed_range(20, -20, 20)};
  const auto batch = random_batch(1024, rng);
  const auto est = estimate_joint(batch, specs);
  std::printf("joint: %zu occupied cells from 1024 samples\n", est.joint.n_cells());

  bench("estimate_joint (batch 1024, 3 sources)", 200, [&] {
    sink = estimate_joint(batch, specs).joint.cell_mass[0];
  });

  const auto& lattice = PidLattice::trivariate();
  bench("isx_redundancies + grads (18 antichains)", 100, [&] {
    sink = isx_redundancies(est.joint, lattice)[0].value;
  });

  std::vector<double> gamma(19, 0.0);
  gamma[2] = 1.0;
  bench("full decompose + goal (per neuron-batch)", 100, [&] {
    sink = goal_value(decompose(est.joint, lattice), gamma).value;
  });

  NetworkConfig config;
  config.n_inputs = 784;
  config.n_classes = 10;
  config.n_hidden = 100;
  config.epochs = 1;
  config.batch_size = 1024;
  config.threads = 1;
  config.hidden_goal = NetworkConfig::heuristic_hidden_goal();
  config.output_goal = NetworkConfig::default_output_goal();
  Network net(config);
  std::vector<double> images(1024 * 784);
  for (auto& v : images) v = rng.uniform();
  std::vector<std::uint8_t> labels(1024);
  for (auto& l : labels) l = static_cast<std::uint8_t>(rng.below(10));

  bench("network forward (batch 1024, N_hid=100)", 20, [&] {
    sink = net.forward(images.data(), 1024, labels.data(), ContextSource::labels, 1)
               .out_prob[0];
  });
  return 0;
}
