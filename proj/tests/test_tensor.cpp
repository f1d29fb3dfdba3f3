#include <cmath>
#include <vector>

#include "doctest.h"
#include "paintlab/error.hpp"
#include "paintlab/ops.hpp"
#include "paintlab/tensor.hpp"
#include "support/finite_difference.hpp"
#include "support/random_graph.hpp"

using namespace paintlab;

namespace {

Tensor grid3x3() { return Tensor({1, 1, 3, 3}, {1, 2, 3, 4, 5, 6, 7, 8, 9}); }

}  // namespace

TEST_CASE("tensor rejects mismatched shape and data") {
  CHECK_THROWS_AS(Tensor({2, 3}, std::vector<double>(5)), ShapeError);
  CHECK(Tensor::zeros({2, 3}).numel() == 6);
}

TEST_CASE("conv2d identity kernel reproduces the input") {
  std::vector<double> k(9, 0.0);
  k[4] = 1.0;
  const Tensor out = conv2d(grid3x3(), Tensor({1, 1, 3, 3}, k), Tensor::zeros({1}), 1, 1);
  REQUIRE(out.shape() == Shape{1, 1, 3, 3});
  for (std::size_t i = 0; i < 9; ++i) CHECK(out[i] == grid3x3()[i]);
}

TEST_CASE("conv2d all-ones kernel sums the neighbourhood") {
  const Tensor out =
      conv2d(grid3x3(), Tensor::full({1, 1, 3, 3}, 1.0), Tensor::zeros({1}), 1, 1);
  // Brute-force sum of all nine texels.
  const Tensor input = grid3x3();
  double expected = 0.0;
  for (double v : input.data()) expected += v;
  CHECK(out.at(0, 0, 1, 1) == expected);
  CHECK(expected == 45.0);
  // Corner sees the 2x2 block 1+2+4+5.
  CHECK(out.at(0, 0, 0, 0) == 12.0);
}

TEST_CASE("conv2d output size follows the stride formula") {
  const Tensor out =
      conv2d(Tensor::full({1, 1, 4, 4}, 1.0), Tensor::full({1, 1, 3, 3}, 1.0),
             Tensor::zeros({1}), 2, 1);
  CHECK(out.shape() == Shape{1, 1, 2, 2});
}

TEST_CASE("conv2d reports the offending dimension") {
  const Tensor x = Tensor::zeros({1, 2, 4, 4});
  try {
    conv2d(x, Tensor::zeros({1, 3, 3, 3}), Tensor::zeros({1}), 1, 1);
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    CHECK(std::string(e.what()).find("input-channel") != std::string::npos);
  }
  CHECK_THROWS_AS(conv2d(x, Tensor::zeros({1, 2, 2, 2}), Tensor::zeros({1}), 1, 1), ShapeError);
  CHECK_THROWS_AS(conv2d(x, Tensor::zeros({1, 2, 3, 3}), Tensor::zeros({2}), 1, 1), ShapeError);
}

TEST_CASE("upsample_nearest replicates blocks and sums gradients back") {
  const Tensor same = upsample_nearest(grid3x3(), 1);
  for (std::size_t i = 0; i < 9; ++i) CHECK(same[i] == grid3x3()[i]);

  const Tensor up = upsample_nearest(Tensor({1, 1, 1, 1}, {3.0}), 2);
  CHECK(up.shape() == Shape{1, 1, 2, 2});
  for (double v : up.data()) CHECK(v == 3.0);

  Tape tape;
  const Tensor x = tape.variable(Tensor::full({1, 2, 3, 3}, 0.5));
  const Tensor y = upsample_nearest(x, 2);
  tape.backward(sum(y));
  for (double g : tape.grad(x)) CHECK(g == 4.0);
}

TEST_CASE("leaky_relu values and slopes") {
  Tape tape;
  const Tensor x = tape.variable(Tensor({2}, {2.0, -1.0}));
  const Tensor y = leaky_relu(x, 0.2);
  CHECK(y[0] == 2.0);
  CHECK(y[1] == doctest::Approx(-0.2).epsilon(1e-15));
  tape.backward(sum(y));
  const auto g = tape.grad(x);
  CHECK(g[0] == 1.0);
  CHECK(g[1] == 0.2);
  CHECK_THROWS_AS(leaky_relu(x, 1.0), ConfigError);
}

TEST_CASE("elementwise suite basics") {
  CHECK(sigmoid(Tensor::scalar(0.0)).item() == 0.5);

  const Tensor constant = Tensor::full({1, 2, 3, 3}, 4.2);
  const Tensor normed =
      channel_norm(constant, Tensor({2}, {3.0, -1.0}), Tensor({2}, {0.25, 0.5}));
  for (std::size_t y = 0; y < 3; ++y) {
    CHECK(normed.at(0, 0, y, 1) == doctest::Approx(0.25));
    CHECK(normed.at(0, 1, y, 2) == doctest::Approx(0.5));
  }

  const Tensor a = Tensor::full({1, 3, 2, 2}, 1.0);
  const Tensor b = Tensor::full({1, 2, 2, 2}, 2.0);
  const Tensor parts[] = {a, b};
  const Tensor cat = concat_channels(parts);
  REQUIRE(cat.shape() == Shape{1, 5, 2, 2});
  CHECK(cat.at(0, 2, 1, 1) == 1.0);
  CHECK(cat.at(0, 3, 0, 0) == 2.0);

  CHECK_THROWS_AS(div(Tensor::scalar(1.0), Tensor::scalar(1e-13)), NumericalError);
  CHECK_THROWS_AS(add(Tensor::zeros({1, 2, 2, 2}), Tensor::zeros({1, 3, 2, 2})), ShapeError);
}

TEST_CASE("per-channel broadcasting accumulates reduced gradients") {
  Tape tape;
  const Tensor x = tape.variable(Tensor::full({1, 2, 2, 2}, 3.0));
  const Tensor c = tape.variable(Tensor({1, 2, 1, 1}, {2.0, -1.0}));
  tape.backward(sum(x * c));
  const auto gc = tape.grad(c);
  CHECK(gc[0] == 12.0);
  CHECK(gc[1] == 12.0);
  const auto gx = tape.grad(x);
  CHECK(gx[0] == 2.0);
  CHECK(gx[7] == -1.0);
}

TEST_CASE("backward rules: linear readout and L1 sign") {
  Tape tape;
  const Tensor x = Tensor({3}, {0.5, -2.0, 4.0});
  const Tensor w = tape.variable(Tensor({3}, {1.0, 1.0, 1.0}));
  tape.backward(sum(w * x));
  const auto gw = tape.grad(w);
  for (std::size_t i = 0; i < 3; ++i) CHECK(gw[i] == x[i]);

  Tape t2;
  const Tensor a = t2.variable(Tensor({2}, {3.0, 1.0}));
  const Tensor b = Tensor({2}, {1.0, 0.0});
  t2.backward(sum(abs(a - b)));
  for (double g : t2.grad(a)) CHECK(g == 1.0);

  CHECK_THROWS_AS(t2.backward(a), ShapeError);
}

TEST_CASE("untracked tensors contribute no gradient") {
  Tape tape;
  const Tensor w = tape.variable(Tensor::full({2}, 1.0));
  const Tensor constant = Tensor::full({2}, 5.0);
  const Tensor y = constant * 2.0;
  CHECK_FALSE(y.tracked());
  tape.backward(sum(w * y));
  for (double g : tape.grad(w)) CHECK(g == 10.0);
  for (double g : tape.grad(constant)) CHECK(g == 0.0);
}

TEST_CASE("cleared tapes reject stale tensors") {
  Tape tape;
  const Tensor w = tape.variable(Tensor::full({2}, 1.0));
  tape.clear();
  CHECK_THROWS_AS(sum(w * 2.0), Error);
}

TEST_CASE("conv2d and upsample conserve gradient mass under all-ones upstream") {
  // For a linear map y = A x, the input gradient under all-ones upstream is
  // A^T 1, whose total equals the sum of the column sums of A. Enumerate A
  // by pushing unit vectors through the forward map.
  const Tensor w({2, 2, 3, 3}, [] {
    std::vector<double> v(36);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = 0.1 * static_cast<double>(i % 7) - 0.3;
    return v;
  }());
  for (std::size_t stride : {1u, 2u}) {
    Tape tape;
    const Tensor x = tape.variable(Tensor::full({1, 2, 6, 6}, 0.3));
    tape.backward(sum(conv2d(x, w, Tensor::zeros({2}), stride, 1)));
    const auto g = tape.grad(x);
    double total = 0.0;
    for (double v : g) total += v;

    double enumerated = 0.0;
    for (std::size_t i = 0; i < 72; ++i) {
      std::vector<double> e(72, 0.0);
      e[i] = 1.0;
      const Tensor y = conv2d(Tensor({1, 2, 6, 6}, e), w, Tensor::zeros({2}), stride, 1);
      for (double v : y.data()) enumerated += v;
    }
    CHECK(total == doctest::Approx(enumerated).epsilon(1e-12));
  }

  Tape tape;
  const Tensor x = tape.variable(Tensor::full({1, 1, 3, 3}, 1.0));
  const Tensor up = upsample_nearest(x, 3);
  tape.backward(sum(up));
  double total = 0.0;
  for (double v : tape.grad(x)) total += v;
  CHECK(total == static_cast<double>(up.numel()));
}

TEST_CASE("tape replay is bit-identical") {
  auto run = [] {
    testing::RandomGraph graph(77);
    Tape tape;
    std::vector<Tensor> leaves;
    for (const auto& l : graph.leaves()) leaves.push_back(tape.variable(l));
    const Tensor loss = graph.build(leaves);
    tape.backward(loss);
    std::vector<double> all{loss.item()};
    for (const auto& l : leaves)
      for (double g : tape.grad(l)) all.push_back(g);
    return all;
  };
  CHECK(run() == run());
}

TEST_CASE("randomized composite graphs match central finite differences") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    CAPTURE(seed);
    testing::RandomGraph graph(seed);
    Tape tape;
    std::vector<Tensor> leaves;
    for (const auto& l : graph.leaves()) leaves.push_back(tape.variable(l));
    tape.backward(graph.build(leaves));
    for (std::size_t k = 0; k < leaves.size(); ++k) {
      CAPTURE(k);
      const auto numeric = testing::numeric_gradient(
          [&](const std::vector<Tensor>& l) { return graph.evaluate(l); }, graph.leaves(), k);
      CHECK(testing::relative_error(tape.grad(leaves[k]), numeric) < 1e-4);
    }
  }
}
