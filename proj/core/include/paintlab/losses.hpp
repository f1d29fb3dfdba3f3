#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "paintlab/tensor.hpp"

namespace paintlab {

/// Mean absolute difference; the subgradient at ties is 0.
Tensor l1(const Tensor& a, const Tensor& b);

/// Anisotropic total variation of a [1,C,H,W] map: the sum of |horizontal|
/// and |vertical| neighbor differences divided by C*H*W.
Tensor tv(const Tensor& k);

/// Linear narrowing of the timestep window from [t_min_start, t_max_start]
/// at the first iteration to [t_min_end, t_max_end] at the last.
struct SdsSchedule {
  double t_min_start = 0.2;
  double t_max_start = 0.98;
  double t_min_end = 0.3;
  double t_max_end = 0.5;
  std::size_t total_iters = 1;
  /// Multiplier on the noise term; 0 turns the surrogate into plain regression.
  double noise_scale = 1.0;

  /// Throws ConfigError naming the offending endpoint.
  void validate() const;
  /// [t_min, t_max] at `iter`, clamped to the last iteration.
  std::pair<double, double> window(std::size_t iter) const;
};

/// Noise level s(t) = sqrt(1 - abar) / sqrt(abar) with abar = cos^2(pi t / 2).
double sds_noise_level(double t);

/// The timestep and noise image shared by every view of one iteration.
struct SdsDraw {
  double t = 0.0;
  double level = 0.0;            // s(t)
  std::vector<double> epsilon;  // N(0, 1), image-shaped
};

/// Deterministic in (seed, iter).
SdsDraw draw_sds(const SdsSchedule& sched, std::size_t iter, std::size_t count, std::uint64_t seed);

/// g_v = (x_v - target_v) + noise_scale * s(t) * eps with one (t, eps) shared
/// by all views. The result is meant to be injected as the upstream gradient
/// of x_v.
std::vector<std::vector<double>> sds_surrogate(std::span<const Tensor> images, std::span<const Tensor> targets,
                                               std::size_t iter, const SdsSchedule& sched, std::uint64_t seed);

/// Same, reusing an existing draw.
std::vector<std::vector<double>> sds_surrogate(std::span<const Tensor> images, std::span<const Tensor> targets,
                                               const SdsDraw& draw, double noise_scale);

}  // namespace paintlab
