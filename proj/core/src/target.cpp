#include "paintlab/target.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "paintlab/error.hpp"

namespace paintlab {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Integer frequency nearest the middle of band k, leaning toward a 40 degree
// direction so the waves are not axis aligned.
Wave pick_wave(std::size_t k, std::size_t n) {
  const double rho_max = static_cast<double>(n) / 2.0 * std::numbers::sqrt2;
  const double want = (static_cast<double>(k) + 0.5) * rho_max / kBands;
  Wave best{0, 0};
  double best_cost = std::numeric_limits<double>::infinity();
  const int limit = static_cast<int>(n / 2) - 1;
  for (int fx = 1; fx <= limit; ++fx)
    for (int fy = 1; fy <= limit; ++fy) {
      const double rho = std::hypot(fx, fy);
      const double cost = std::abs(rho - want) + 1e-3 * std::abs(std::atan2(fy, fx) - 0.7);
      if (cost < best_cost) {
        best_cost = cost;
        best = {fx, fy};
      }
    }
  const std::size_t half = n / 2;
  if (band_index(half + static_cast<std::size_t>(best.fy), half + static_cast<std::size_t>(best.fx), n, n) != k)
    throw ConfigError("texture size " + std::to_string(n) + " is too small for a wave in every band");
  return best;
}

}  // namespace

SyntheticTarget make_synthetic_target(std::size_t size, const std::array<double, kBands>& amplitudes) {
  if (size < 16 || (size & (size - 1)) != 0) throw ConfigError("synthetic target size must be a power of two >= 16");
  double total = 0.0;
  for (double a : amplitudes) total += std::abs(a);
  if (total >= 0.5) throw ConfigError("synthetic target amplitudes must sum below 0.5");

  SyntheticTarget t;
  for (std::size_t k = 0; k < kBands; ++k) t.waves[k] = pick_wave(k, size);

  const std::size_t n = size, plane = n * n;
  const double nn = static_cast<double>(n);
  std::vector<double> d(3 * plane), rm(2 * plane), nrm(3 * plane);
  for (std::size_t y = 0; y < n; ++y) {
    for (std::size_t x = 0; x < n; ++x) {
      const double fxn = static_cast<double>(x) / nn, fyn = static_cast<double>(y) / nn;
      const std::size_t i = y * n + x;
      for (std::size_t c = 0; c < 3; ++c) {
        double v = 0.5;
        for (std::size_t k = 0; k < kBands; ++k) {
          const double phase = kTwoPi * static_cast<double>((k + 1) * (c + 1)) / 7.0;
          v += amplitudes[k] * std::cos(kTwoPi * (t.waves[k].fx * fxn + t.waves[k].fy * fyn) + phase);
        }
        d[c * plane + i] = v;
      }
      rm[i] = 0.5 + 0.1 * std::cos(kTwoPi * fxn);
      rm[plane + i] = 0.15 + 0.05 * std::cos(kTwoPi * fyn);
      const double nx = 0.1 * std::sin(kTwoPi * fxn), ny = 0.1 * std::sin(kTwoPi * fyn);
      const double len = std::sqrt(nx * nx + ny * ny + 1.0);
      nrm[i] = nx / len;
      nrm[plane + i] = ny / len;
      nrm[2 * plane + i] = 1.0 / len;
    }
  }
  t.texture = {Tensor({1, 3, n, n}, d), Tensor({1, 2, n, n}, rm), Tensor({1, 3, n, n}, nrm)};

  // Each wave puts |a HW / 2|^2 into each of its two bins; DC is (0.5 HW)^2.
  const double hw = static_cast<double>(plane);
  t.diffuse_energy = {};
  t.diffuse_energy[0] = 3.0 * (0.5 * hw) * (0.5 * hw);
  for (std::size_t k = 0; k < kBands; ++k) t.diffuse_energy[k] += 3.0 * amplitudes[k] * amplitudes[k] * hw * hw / 2.0;
  return t;
}

SyntheticTarget builtin_target(const std::string& name, std::size_t size) {
  if (name == "multiband") return make_synthetic_target(size, kFlatAmplitudes);
  if (name == "natural") return make_synthetic_target(size, kNaturalAmplitudes);
  throw ConfigError("unknown builtin target '" + name + "' (expected multiband or natural)");
}

}  // namespace paintlab
