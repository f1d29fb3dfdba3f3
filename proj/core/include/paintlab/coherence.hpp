#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "paintlab/losses.hpp"
#include "paintlab/mesh.hpp"
#include "paintlab/shading.hpp"
#include "paintlab/texture.hpp"

namespace paintlab {

/// Eigenvalues of a symmetric row-major n x n matrix by cyclic Jacobi
/// rotations, sorted descending.
std::vector<double> symmetric_eigenvalues(std::vector<double> a, std::size_t n);

/// Singular values of the N x F matrix with the given rows, from the
/// eigenvalues of the N x N Gram matrix (negative round-off clamped to 0).
std::vector<double> singular_values(const std::vector<std::vector<double>>& rows);

struct CoherenceReport {
  std::vector<double> singular_values;  // descending
  std::vector<double> ratios;           // sigma_i / sigma_min; empty when rank deficient
  bool rank_deficient = false;          // sigma_min < 1e-12 sigma_max
  bool high_rank = false;               // full rank and sigma_max / sigma_min < 10
};

CoherenceReport coherence_report(const std::vector<std::vector<double>>& rows);

struct CoherenceConfig {
  std::size_t views = 5;
  std::uint64_t seed = 0;
  SdsSchedule schedule;   // the draw uses iteration 0 of this schedule
  bool repeat_view = false;  // every row from the first sampled camera
  Camera camera;             // base camera (distance, fov, resolution)
};

struct CoherenceResult {
  CoherenceReport report;
  std::vector<std::vector<double>> gradients;  // one row per view, w.r.t. the diffuse map
  std::vector<Tensor> renders;                 // display-space views of `current`
};

/// Adjacent-view surrogate gradients of `current` toward renders of
/// `reference`, one shared (t, eps), stacked and analyzed.
CoherenceResult gradient_coherence(const Mesh& mesh, const EnvLight& env, const TextureSet& reference,
                                   const TextureSet& current, const CoherenceConfig& cfg);

}  // namespace paintlab
