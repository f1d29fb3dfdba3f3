#pragma once

#include <array>
#include <cstddef>
#include <string>

#include "paintlab/spectrum.hpp"
#include "paintlab/texture.hpp"

namespace paintlab {

/// Equal amplitude in every band.
inline constexpr std::array<double, kBands> kFlatAmplitudes{0.08, 0.08, 0.08, 0.08, 0.08};
/// Amplitude falling with frequency, closer to natural textures.
inline constexpr std::array<double, kBands> kNaturalAmplitudes{0.16, 0.1, 0.06, 0.04, 0.03};

struct Wave {
  int fx;  // cycles across the width
  int fy;  // cycles down the height
};

/// Procedural PBR texture whose diffuse map is 0.5 plus one plane wave per
/// frequency band (integer frequencies, so no spectral leakage).
struct SyntheticTarget {
  TextureSet texture;
  std::array<Wave, kBands> waves;
  BandEnergies diffuse_energy;  // closed form, summed over the three channels
};

/// `size` must be a power of two >= 16.
SyntheticTarget make_synthetic_target(std::size_t size, const std::array<double, kBands>& amplitudes);

/// "multiband" (flat amplitudes) or "natural".
SyntheticTarget builtin_target(const std::string& name, std::size_t size);

}  // namespace paintlab
