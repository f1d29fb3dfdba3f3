#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "paintlab/tensor.hpp"

namespace paintlab {

struct Parameter {
  std::string name;
  Tensor value;
};

using ParameterSet = std::vector<Parameter>;

std::size_t count_scalars(const ParameterSet& params);

/// Registers every parameter on `tape` and returns the tracked handles, in order.
std::vector<Tensor> bind(const ParameterSet& params, Tape& tape);
/// Untracked handles, in order.
std::vector<Tensor> values(const ParameterSet& params);

/// Encoder-decoder hyperparameters. Decoder widths mirror `down_channels`.
struct UNetConfig {
  std::size_t levels = 5;
  std::vector<std::size_t> down_channels{16, 32, 64, 128, 128};
  std::vector<std::size_t> skip_channels{4, 4, 4, 4, 4};
  std::size_t kernel = 3;
  double slope = 0.2;
  std::uint64_t seed = 0;
  bool skip_enabled = true;
  std::size_t input_channels = 3;
  std::size_t output_channels = 8;

  /// Throws ConfigError when the lists do not match `levels` or when the
  /// texture extents are not multiples of 2^levels.
  void validate(std::size_t height, std::size_t width) const;
};

/// Randomly initialized hourglass network with optional skip branches that
/// maps a frozen noise image to the 8-channel texture head.
///
/// Each level runs: stride-2 conv, norm, activation, conv, norm, activation;
/// then recurses; then nearest upsampling, concatenation with the skip branch
/// (1x1 conv, norm, activation of the level input), norm, conv, norm,
/// activation, 1x1 conv, norm, activation. A final 1x1 conv emits the head.
class UNet {
 public:
  /// He-uniform weights from `cfg.seed`; the input noise is standard normal
  /// from `cfg.seed + 1` and never registered as a tape variable.
  static UNet init(const UNetConfig& cfg, std::size_t height, std::size_t width);

  const UNetConfig& config() const { return cfg_; }
  const ParameterSet& parameters() const { return params_; }
  ParameterSet& parameters() { return params_; }
  const Tensor& input() const { return z_; }
  std::size_t parameter_count() const { return count_scalars(params_); }

  /// Raw head [1, output_channels, H, W] computed with the given parameter
  /// handles (same order as `parameters()`), tracked or not.
  Tensor forward(std::span<const Tensor> params) const;
  Tensor forward() const;

 private:
  UNet() = default;

  UNetConfig cfg_;
  ParameterSet params_;
  Tensor z_;
};

}  // namespace paintlab
