#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <limits>
#include <ostream>
#include <span>
#include <vector>

#include "paintlab/tensor.hpp"

namespace paintlab {

inline constexpr std::size_t kBands = 5;
using BandEnergies = std::array<double, kBands>;

/// Unnormalized 2-D DFT of a row-major H x W real map by row-column radix-2
/// FFT. With `centered`, the spectrum is shifted so DC sits at (H/2, W/2).
/// Throws ShapeError unless H and W are powers of two.
std::vector<std::complex<double>> fft2(std::span<const double> map, std::size_t height, std::size_t width,
                                       bool centered = true);

/// Zero-based band of the centered bin (y, x): min(4, floor(5 rho / rho_max))
/// with rho_max = (min(H, W) / 2) * sqrt(2).
std::size_t band_index(std::size_t y, std::size_t x, std::size_t height, std::size_t width);

/// Squared-magnitude energy per band, summed over the channels of a [1,C,H,W] map.
BandEnergies band_energies(const Tensor& map);

/// Energies of a map at a sequence of snapshot iterations.
struct BandTrace {
  std::vector<std::size_t> iterations;
  std::vector<BandEnergies> energies;

  void push(std::size_t iter, const BandEnergies& e) {
    iterations.push_back(iter);
    energies.push_back(e);
  }
  std::size_t size() const { return iterations.size(); }
  /// Header `iter,E1,E2,E3,E4,E5`, energies with 17 significant digits.
  void write_csv(std::ostream& out) const;
};

inline constexpr std::size_t kNeverConverged = std::numeric_limits<std::size_t>::max();

/// Per band, the first snapshot iteration from which |E_k - target_k| stays
/// within tol * max(target_k, eps_abs) for the rest of the trace; kNeverConverged
/// if there is none.
std::array<std::size_t, kBands> convergence_iterations(const BandTrace& trace, const BandEnergies& target,
                                                       double tol = 0.1, double eps_abs = 1e-12);

/// (t_5 - t_1) / total with kNeverConverged read as `total`.
double convergence_spread(const std::array<std::size_t, kBands>& t, std::size_t total);

/// Spearman rank correlation with average ranks for ties. Returns 0 when
/// either side is constant.
double spearman(std::span<const double> a, std::span<const double> b);

}  // namespace paintlab
