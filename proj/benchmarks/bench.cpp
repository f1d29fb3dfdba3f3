#include <benchmark/benchmark.h>

#include <random>

#include "paintlab/camera.hpp"
#include "paintlab/ops.hpp"
#include "paintlab/shading.hpp"
#include "paintlab/spectrum.hpp"
#include "paintlab/target.hpp"
#include "paintlab/unet.hpp"

using namespace paintlab;

namespace {

Tensor noise(Shape shape, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  std::vector<double> v(numel(shape));
  for (double& x : v) x = n(rng);
  return Tensor(std::move(shape), std::move(v));
}

void BM_Conv2dForwardBackward(benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0));
  const Tensor x = noise({1, c, 64, 64}, 1), w = noise({c, c, 3, 3}, 2), b = Tensor::zeros({c});
  for (auto _ : state) {
    Tape tape;
    const Tensor tx = tape.variable(x), tw = tape.variable(w);
    tape.backward(sum(conv2d(tx, tw, b, 1, 1)));
    benchmark::DoNotOptimize(tape.grad(tw).data());
  }
}
BENCHMARK(BM_Conv2dForwardBackward)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_UNetForwardBackward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const UNet net = UNet::init(UNetConfig{}, n, n);
  for (auto _ : state) {
    Tape tape;
    const auto bound = paintlab::bind(net.parameters(), tape);
    tape.backward(mean(net.forward(bound)));
    benchmark::DoNotOptimize(tape.grad(bound.front()).data());
  }
}
BENCHMARK(BM_UNetForwardBackward)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_ShadeSphere(benchmark::State& state) {
  const TextureSet tex = builtin_target("natural", 64).texture;
  const GBuffer g = rasterize(make_uv_sphere(), Camera{});
  const EnvLight env = build_env(builtin_env_image("studio", static_cast<std::size_t>(state.range(0)),
                                                   static_cast<std::size_t>(state.range(0)) / 2));
  for (auto _ : state) benchmark::DoNotOptimize(shade(tex, g, env).data());
  state.counters["lights"] = static_cast<double>(env.lights.size());
}
BENCHMARK(BM_ShadeSphere)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_Rasterize(benchmark::State& state) {
  const Mesh sphere = make_uv_sphere();
  for (auto _ : state) benchmark::DoNotOptimize(rasterize(sphere, Camera{}).mask.data());
}
BENCHMARK(BM_Rasterize)->Unit(benchmark::kMillisecond);

void BM_BandEnergies(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Tensor map = noise({1, 3, n, n}, 3);
  for (auto _ : state) benchmark::DoNotOptimize(band_energies(map));
}
BENCHMARK(BM_BandEnergies)->Arg(64)->Arg(256);

}  // namespace

BENCHMARK_MAIN();
