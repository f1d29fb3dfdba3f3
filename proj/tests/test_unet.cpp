#include <chrono>
#include <cmath>
#include <random>

#include "doctest.h"
#include "paintlab/error.hpp"
#include "paintlab/ops.hpp"
#include "paintlab/texture.hpp"
#include "paintlab/unet.hpp"
#include "support/finite_difference.hpp"

using namespace paintlab;

namespace {

UNetConfig small_config(bool skips = true) {
  UNetConfig cfg;
  cfg.levels = 2;
  cfg.down_channels = {4, 6};
  cfg.skip_channels = {2, 2};
  cfg.seed = 11;
  cfg.skip_enabled = skips;
  return cfg;
}

}  // namespace

TEST_CASE("init is deterministic per seed") {
  UNetConfig cfg;
  cfg.seed = 3;
  const UNet a = UNet::init(cfg, 64, 64);
  const UNet b = UNet::init(cfg, 64, 64);
  REQUIRE(a.parameters().size() == b.parameters().size());
  for (std::size_t i = 0; i < a.parameters().size(); ++i)
    CHECK(a.parameters()[i].value.to_vector() == b.parameters()[i].value.to_vector());
  CHECK(a.input().to_vector() == b.input().to_vector());
  CHECK(a.input().shape() == Shape{1, 3, 64, 64});

  cfg.seed = 4;
  const UNet c = UNet::init(cfg, 64, 64);
  CHECK(c.parameters()[0].value.to_vector() != a.parameters()[0].value.to_vector());
}

TEST_CASE("deepest feature map of a 64x64 five-level net is 2x2") {
  UNetConfig cfg;
  const UNet net = UNet::init(cfg, 64, 64);
  // level4.down2 convolves the deepest map; its input spatial size is not in
  // the weight shape, so push a probe through the encoder chain instead.
  Tensor x = net.input();
  for (std::size_t i = 0; i < cfg.levels; ++i)
    x = conv2d(x, Tensor::zeros({1, x.dim(1), 3, 3}), Tensor::zeros({1}), 2, 1);
  CHECK(x.dim(2) == 2);
  CHECK(x.dim(3) == 2);
}

TEST_CASE("non-divisible texture sizes are rejected with the required multiple") {
  UNetConfig cfg;
  try {
    UNet::init(cfg, 48, 48);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("multiple of 32") != std::string::npos);
  }
  cfg.skip_channels = {4, 4};
  CHECK_THROWS_AS(UNet::init(cfg, 64, 64), ConfigError);
}

TEST_CASE("forward emits eight channels at texture resolution") {
  for (auto cfg : {small_config(), UNetConfig{}}) {
    const UNet net = UNet::init(cfg, 32, 32);
    const Tensor out = net.forward();
    CHECK(out.shape() == Shape{1, 8, 32, 32});
    CHECK(out.to_vector() == net.forward().to_vector());
  }
}

TEST_CASE("disabling skips removes the skip parameters entirely") {
  const UNet with = UNet::init(small_config(true), 16, 16);
  const UNet without = UNet::init(small_config(false), 16, 16);
  CHECK(without.parameter_count() < with.parameter_count());
  for (const auto& p : without.parameters()) CHECK(p.name.find("skip") == std::string::npos);

  UNetConfig full;
  full.skip_enabled = false;
  CHECK(UNet::init(full, 64, 64).parameter_count() <
        UNet::init(UNetConfig{}, 64, 64).parameter_count());
}

TEST_CASE("network gradients match finite differences") {
  const UNet net = UNet::init(small_config(), 8, 8);
  const std::size_t n = net.parameters().size();
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal;
  std::vector<double> probe(8 * 64);
  for (double& v : probe) v = normal(rng);
  const Tensor readout({1, 8, 8, 8}, probe);
  auto loss = [&](const std::vector<Tensor>& p) { return sum(net.forward(p) * readout); };

  Tape tape;
  const auto bound = bind(net.parameters(), tape);
  tape.backward(loss(bound));
  // A head layer, a skip branch, and a deep weight.
  for (std::size_t k : {std::size_t{0}, std::size_t{4}, n / 2, n - 2}) {
    CAPTURE(net.parameters()[k].name);
    const auto numeric = testing::numeric_gradient(
        [&](const std::vector<Tensor>& p) { return loss(p).item(); }, values(net.parameters()), k);
    CHECK(testing::relative_error(tape.grad(bound[k]), numeric) < 1e-4);
  }
}

TEST_CASE("single forward and backward at 64x64 finishes within two seconds") {
  const UNet net = UNet::init(UNetConfig{}, 64, 64);
  const auto start = std::chrono::steady_clock::now();
  Tape tape;
  const auto bound = bind(net.parameters(), tape);
  tape.backward(mean(net.forward(bound)));
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  MESSAGE("forward+backward seconds: " << seconds);
  CHECK(seconds < 2.0);
}

TEST_CASE("decode of a zero head") {
  const TextureSet tex = decode_head(Tensor::zeros({1, 8, 4, 4}));
  for (double v : tex.diffuse.data()) CHECK(v == 0.5);
  for (double v : tex.rough_metal.data()) CHECK(v == 0.5);
  for (std::size_t i = 0; i < 16; ++i) {
    CHECK(tex.normal[i] == 0.0);
    CHECK(tex.normal[16 + i] == 0.0);
    CHECK(tex.normal[32 + i] == doctest::Approx(1.0).epsilon(1e-15));
  }
  validate(tex);

  const TextureSet px = decode_pixels(PixelParams::zeros(4, 4));
  CHECK(px.diffuse.to_vector() == tex.diffuse.to_vector());
  CHECK(px.normal.to_vector() == tex.normal.to_vector());
}

TEST_CASE("normal z channel saturates toward one") {
  std::vector<double> raw(8, 0.0);
  raw[7] = 50.0;
  const TextureSet tex = decode_head(Tensor({1, 8, 1, 1}, raw));
  // Pre-normalization z = 0.9 * sigmoid(50) + 0.1 -> 1.0; x = y = 0.
  CHECK(tex.normal[2] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("decoded normals are unit length for arbitrary heads") {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> normal(0.0, 3.0);
  std::vector<double> raw(8 * 16 * 16);
  for (double& v : raw) v = normal(rng);
  const TextureSet tex = decode_head(Tensor({1, 8, 16, 16}, raw));
  CHECK_NOTHROW(validate(tex, 1e-6));
}

TEST_CASE("pixel decode gradient of L1 to a target matches finite differences") {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> normal;
  std::vector<double> raw(8 * 16), target(3 * 16);
  for (double& v : raw) v = normal(rng);
  std::uniform_real_distribution<double> unit(0.05, 0.95);
  for (double& v : target) v = unit(rng);
  const Tensor goal({1, 3, 4, 4}, target);
  auto loss = [&](const std::vector<Tensor>& l) {
    return mean(abs(decode_pixels({l[0]}).diffuse - goal));
  };
  Tape tape;
  const Tensor leaf = tape.variable(Tensor({1, 8, 4, 4}, raw));
  tape.backward(loss({leaf}));
  const auto numeric = testing::numeric_gradient(
      [&](const std::vector<Tensor>& l) { return loss(l).item(); }, {Tensor({1, 8, 4, 4}, raw)}, 0);
  CHECK(testing::relative_error(tape.grad(leaf), numeric) < 1e-4);
}

TEST_CASE("every interior texture set is reachable by pixel parameters") {
  std::mt19937_64 rng(33);
  std::uniform_real_distribution<double> unit(0.001, 0.999);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 4 * 4;
    std::vector<double> d(3 * n), rm(2 * n), nrm(3 * n);
    for (double& v : d) v = unit(rng);
    for (double& v : rm) v = unit(rng);
    for (std::size_t i = 0; i < n; ++i) {
      // Random direction inside the decodable cone.
      double x = normal(rng), y = normal(rng), z = std::abs(normal(rng)) + 0.3;
      const double peak = std::max({std::abs(x), std::abs(y), z});
      if (peak >= 9.0 * z) x = y = 0.0;
      const double len = std::sqrt(x * x + y * y + z * z);
      nrm[i] = x / len;
      nrm[n + i] = y / len;
      nrm[2 * n + i] = z / len;
    }
    const TextureSet goal{Tensor({1, 3, 4, 4}, d), Tensor({1, 2, 4, 4}, rm),
                          Tensor({1, 3, 4, 4}, nrm)};
    const TextureSet back = decode_pixels({encode_head(goal)});
    CHECK(testing::relative_error(back.diffuse.to_vector(), d, 1.0) < 1e-9);
    CHECK(testing::relative_error(back.rough_metal.to_vector(), rm, 1.0) < 1e-9);
    for (std::size_t i = 0; i < 3 * n; ++i) CHECK(std::abs(back.normal[i] - nrm[i]) < 1e-9);
  }
}
