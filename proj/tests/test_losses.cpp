#include <cmath>
#include <random>

#include "doctest.h"
#include "paintlab/adam.hpp"
#include "paintlab/error.hpp"
#include "paintlab/losses.hpp"
#include "paintlab/ops.hpp"
#include "support/finite_difference.hpp"

using namespace paintlab;

namespace {

Tensor random_map(Shape shape, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> v(numel(shape));
  for (double& x : v) x = unit(rng);
  return Tensor(std::move(shape), std::move(v));
}

}  // namespace

TEST_CASE("l1 values and subgradient") {
  const Tensor a = random_map({1, 2, 3, 3}, 1);
  CHECK(l1(a, a).item() == 0.0);
  CHECK(l1(a + 1.0, a).item() == doctest::Approx(1.0).epsilon(1e-14));

  std::vector<double> av{0.5, 0.2, 0.7, 0.3}, bv{0.1, 0.2, 0.9, 0.3};
  Tape tape;
  const Tensor x = tape.variable(Tensor({4}, av));
  tape.backward(l1(x, Tensor({4}, bv)));
  CHECK(tape.grad(x) == std::vector<double>{0.25, 0.0, -0.25, 0.0});
  CHECK_THROWS_AS(l1(Tensor::zeros({2}), Tensor::zeros({3})), ShapeError);
}

TEST_CASE("total variation by enumeration") {
  CHECK(tv(Tensor::full({1, 3, 5, 4}, 0.3)).item() == 0.0);

  // Step of height 1 between columns 1 and 2 of a 4x4 map.
  std::vector<double> step(16);
  for (std::size_t y = 0; y < 4; ++y)
    for (std::size_t x = 0; x < 4; ++x) step[y * 4 + x] = x >= 2 ? 1.0 : 0.0;
  double sum_abs = 0.0;
  for (std::size_t y = 0; y < 4; ++y)
    for (std::size_t x = 0; x < 4; ++x) {
      if (x + 1 < 4) sum_abs += std::abs(step[y * 4 + x + 1] - step[y * 4 + x]);
      if (y + 1 < 4) sum_abs += std::abs(step[(y + 1) * 4 + x] - step[y * 4 + x]);
    }
  const double expected = sum_abs / 16.0;  // H crossings over C*H*W positions
  CHECK(expected == 0.25);
  CHECK(tv(Tensor({1, 1, 4, 4}, step)).item() == doctest::Approx(expected).epsilon(1e-15));

  const Tensor m = random_map({1, 3, 6, 5}, 2);
  CHECK(tv(m + 0.37).item() == doctest::Approx(tv(m).item()).epsilon(1e-12));
  CHECK_THROWS_AS(tv(Tensor::zeros({1, 1, 1, 4})), ShapeError);
}

TEST_CASE("total variation gradient matches finite differences") {
  const Tensor m = random_map({1, 2, 5, 6}, 3);
  Tape tape;
  const Tensor x = tape.variable(m);
  tape.backward(tv(x));
  const auto numeric = testing::numeric_gradient([](const std::vector<Tensor>& l) { return tv(l[0]).item(); }, {m}, 0);
  CHECK(testing::relative_error(tape.grad(x), numeric) < 1e-6);
}

TEST_CASE("schedule windows interpolate linearly and are validated") {
  SdsSchedule s;
  s.total_iters = 101;
  CHECK(s.window(0) == std::pair{0.2, 0.98});
  const auto [lo, hi] = s.window(100);
  CHECK(lo == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(hi == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(s.window(50).first == doctest::Approx(0.25));
  for (std::size_t it = 0; it < 101; ++it) {
    const auto w = s.window(it);
    const SdsDraw d = draw_sds(s, it, 4, 9);
    CHECK(d.t >= w.first);
    CHECK(d.t <= w.second);
  }
  SdsSchedule bad = s;
  bad.t_min_end = 0.6;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = s;
  bad.t_max_start = 1.2;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("noise level vanishes at t = 0 and matches the cosine schedule") {
  CHECK(sds_noise_level(0.0) == 0.0);
  CHECK(sds_noise_level(1e-9) < 1e-8);
  CHECK(sds_noise_level(0.5) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(sds_noise_level(0.98) == doctest::Approx(std::tan(0.49 * 3.14159265358979323846)).epsilon(1e-9));
}

TEST_CASE("surrogate shares one draw across views and reduces to regression without noise") {
  SdsSchedule s;
  s.total_iters = 10;
  const std::vector<Tensor> x{random_map({1, 3, 4, 4}, 4), random_map({1, 3, 4, 4}, 5)};
  const std::vector<Tensor> y{random_map({1, 3, 4, 4}, 6), random_map({1, 3, 4, 4}, 7)};

  const auto g = sds_surrogate(x, y, 3, s, 11);
  const auto again = sds_surrogate(x, y, 3, s, 11);
  CHECK(g == again);
  for (std::size_t i = 0; i < 48; ++i) {
    const double noise0 = g[0][i] - (x[0][i] - y[0][i]);
    const double noise1 = g[1][i] - (x[1][i] - y[1][i]);
    CHECK(noise0 == doctest::Approx(noise1).epsilon(1e-12));
  }
  CHECK(sds_surrogate(x, y, 4, s, 11) != g);

  s.noise_scale = 0.0;
  const std::vector<Tensor> same{x[0], x[0]};
  for (const auto& row : sds_surrogate(same, same, 0, s, 1))
    for (double v : row) CHECK(v == 0.0);

  // Without noise: the gradient of 0.5 * ||x - y||^2.
  const auto plain = sds_surrogate(x, y, 2, s, 5);
  for (std::size_t v = 0; v < 2; ++v) {
    Tape tape;
    const Tensor leaf = tape.variable(x[v]);
    const Tensor d = leaf - y[v];
    tape.backward(sum(d * d) * 0.5);
    const auto ref = tape.grad(leaf);
    for (std::size_t i = 0; i < ref.size(); ++i) CHECK(plain[v][i] == doctest::Approx(ref[i]).epsilon(1e-14));
  }
}

TEST_CASE("adam closed forms") {
  ParameterSet p{{"w", Tensor({2}, {1.0, -2.0})}};
  AdamState s = AdamState::init(p);
  adam_step(s, p, {{1.0, 1.0}});
  CHECK(std::abs(p[0].value[0] - (1.0 - 5e-4)) < 1e-11);
  CHECK(std::abs(p[0].value[1] - (-2.0 - 5e-4)) < 1e-11);

  ParameterSet q{{"still", Tensor({3}, {0.1, 0.2, 0.3})}};
  AdamState sq = AdamState::init(q);
  for (int i = 0; i < 20; ++i) adam_step(sq, q, {{0.0, 0.0, 0.0}});
  CHECK(q[0].value.to_vector() == std::vector<double>{0.1, 0.2, 0.3});
}

TEST_CASE("adam rejects non-finite gradients by name and is reproducible") {
  ParameterSet p{{"layer.weight", Tensor({2}, {1.0, 2.0})}};
  AdamState s = AdamState::init(p);
  try {
    adam_step(s, p, {{1.0, std::nan("")}});
    FAIL("expected NumericalError");
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()).find("layer.weight") != std::string::npos);
  }
  CHECK(p[0].value.to_vector() == std::vector<double>{1.0, 2.0});

  auto run = [] {
    ParameterSet r{{"x", Tensor({3}, {0.5, -0.5, 2.0})}};
    AdamState st = AdamState::init(r, {.lr = 0.1});
    for (int i = 0; i < 50; ++i) {
      const auto v = r[0].value.to_vector();
      adam_step(st, r, {{2 * v[0] - 1, std::sin(v[1]), v[2] * v[2]}});
    }
    return r[0].value.to_vector();
  };
  CHECK(run() == run());
}
