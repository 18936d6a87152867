#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "infomorph/errors.hpp"
#include "infomorph/neuron.hpp"
#include "infomorph/rng.hpp"

using namespace infomorph;

TEST_CASE("aggregate computes per-class dot products") {
  NeuronState state;
  state.w_ff = {0.5, -1.0};
  state.w_ctx = {2.0};
  state.w_lat = {1.0, 1.0, 1.0};

  const std::vector<double> ff = {1.0, 0.5};
  const std::vector<double> ctx = {-0.25};
  const std::vector<double> lat = {1.0, -1.0, 1.0};
  const auto agg = aggregate(ff, ctx, lat, state);
  CHECK(agg.ff == doctest::Approx(0.0));
  CHECK(agg.ctx == doctest::Approx(-0.5));
  CHECK(agg.lat == doctest::Approx(1.0));

  SUBCASE("all-zero weights give zero aggregates") {
    NeuronState zero;
    zero.w_ff = {0.0, 0.0};
    zero.w_ctx = {0.0};
    zero.w_lat = {0.0, 0.0, 0.0};
    const auto z = aggregate(ff, ctx, lat, zero);
    CHECK(z.ff == 0.0);
    CHECK(z.ctx == 0.0);
    CHECK(z.lat == 0.0);
  }
  SUBCASE("withheld context yields a zero aggregate") {
    NeuronState no_ctx = state;
    no_ctx.w_ctx.clear();
    const auto z = aggregate(ff, {}, lat, no_ctx);
    CHECK(z.ctx == 0.0);
  }
  SUBCASE("length mismatch is an error") {
    CHECK_THROWS_AS(aggregate(std::vector<double>{1.0}, ctx, lat, state), ConfigError);
  }
}

TEST_CASE("single input times weight") {
  NeuronState state;
  state.w_ff = {0.5};
  const auto agg = aggregate(std::vector<double>{1.0}, {}, {}, state);
  CHECK(agg.ff == doctest::Approx(0.5));
}

TEST_CASE("modulatory activation at zero context and lateral input") {
  const ActivationParams p;
  // sigmoid(0) = 1/2, so A = F * (0.8 + 0.1*0.5 + 0.1*0.5) = 0.9 F
  for (double f : {-3.0, -0.5, 0.7, 12.0}) {
    CHECK(activation(f, 0.0, 0.0, ActivationKind::modulatory, p) ==
          doctest::Approx(0.9 * f).epsilon(1e-14));
  }
}

TEST_CASE("zero feedforward drive silences the modulatory activation") {
  const ActivationParams p;
  for (double ctx : {-5.0, 0.0, 3.0}) {
    for (double lat : {-2.0, 9.0}) {
      CHECK(activation(0.0, ctx, lat, ActivationKind::modulatory, p) == 0.0);
    }
  }
}

TEST_CASE("saturated modulation approaches the raw drive") {
  const ActivationParams p;
  const double a = activation(1.0, 1e6, 1e6, ActivationKind::modulatory, p);
  CHECK(a == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("linear activation form") {
  const ActivationParams p;
  CHECK(activation(1.0, 2.0, -3.0, ActivationKind::linear, p) ==
        doctest::Approx(1.0 + 0.2 - 0.3));
}

TEST_CASE("lateral influence on the activation is bounded by 0.1|F|") {
  Rng64 rng(4);
  const ActivationParams p;
  for (int trial = 0; trial < 200; ++trial) {
    const double f = 30.0 * (rng.uniform() - 0.5);
    const double c = 30.0 * (rng.uniform() - 0.5);
    const double l = 30.0 * (rng.uniform() - 0.5);
    const double with_lat = activation(f, c, l, ActivationKind::modulatory, p);
    const double without_lat = activation(f, c, 0.0, ActivationKind::modulatory, p);
    CHECK(std::abs(with_lat - without_lat) <= 0.1 * std::abs(f) + 1e-12);
    const double bare = activation(f, 0.0, 0.0, ActivationKind::modulatory, p);
    CHECK(std::abs(with_lat - bare) <= 0.2 * std::abs(f) + 1e-12);
  }
}

TEST_CASE("activation partials match finite differences") {
  Rng64 rng(8);
  const ActivationParams p;
  const double h = 1e-5;
  // relative error < 1e-5 wherever the derivative is resolvable by central
  // differences; below that, an absolute bound well above FD roundoff
  auto check = [](double analytic, double fd) {
    if (std::abs(analytic - fd) < 1e-9) return;
    const double scale = std::max(std::abs(fd), std::abs(analytic));
    CHECK(std::abs(analytic - fd) / scale < 1e-5);
  };
  for (ActivationKind kind : {ActivationKind::modulatory, ActivationKind::linear}) {
    for (int trial = 0; trial < 100; ++trial) {
      const double f = 4.0 * (rng.uniform() - 0.5);
      const double c = 4.0 * (rng.uniform() - 0.5);
      const double l = 4.0 * (rng.uniform() - 0.5);
      const auto partials = activation_partials(f, c, l, kind, p);
      const double fd_f =
          (activation(f + h, c, l, kind, p) - activation(f - h, c, l, kind, p)) / (2 * h);
      const double fd_c =
          (activation(f, c + h, l, kind, p) - activation(f, c - h, l, kind, p)) / (2 * h);
      const double fd_l =
          (activation(f, c, l + h, kind, p) - activation(f, c, l - h, kind, p)) / (2 * h);
      check(partials.d_ff, fd_f);
      check(partials.d_ctx, fd_c);
      check(partials.d_lat, fd_l);
    }
  }
}

TEST_CASE("firing probability is the sigmoid of the activation") {
  CHECK(fire(0.0, 0.3).probability == doctest::Approx(0.5));
  CHECK(fire(100.0, 0.999999).probability == doctest::Approx(1.0));
  CHECK(fire(100.0, 0.999999).state == 1);
  CHECK(fire(-100.0, 0.000001).state == -1);
  CHECK(fire_probability(0.0) == doctest::Approx(0.5));
}

TEST_CASE("fire is deterministic given the draw") {
  const double a = 0.37;
  for (double u : {0.0, 0.25, 0.5849, 0.99}) {
    CHECK(fire(a, u).state == fire(a, u).state);
    CHECK(fire(a, u).state == (u < sigmoid(a) ? 1 : -1));
  }
}

TEST_CASE("empirical firing rate matches the probability over many draws") {
  const double p_target = 0.7;
  const double a = std::log(p_target / (1.0 - p_target));
  const int n = 100000;
  int fired = 0;
  for (int i = 0; i < n; ++i) {
    const double u = counter_uniform({99u, static_cast<std::uint64_t>(i)});
    if (fire(a, u).state == 1) ++fired;
  }
  const double rate = static_cast<double>(fired) / n;
  CHECK(std::abs(rate - p_target) < 0.01);
}
