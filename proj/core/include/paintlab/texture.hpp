#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "paintlab/tensor.hpp"
#include "paintlab/unet.hpp"

namespace paintlab {

inline constexpr std::size_t kHeadChannels = 8;

/// The PBR triple in texel space, channel-first:
/// diffuse [1,3,H,W] in [0,1]; rough_metal [1,2,H,W] in [0,1] with channel 0
/// roughness and channel 1 metalness; normal [1,3,H,W] unit tangent-space
/// vectors with positive z. Tensors may be tracked.
struct TextureSet {
  Tensor diffuse;
  Tensor rough_metal;
  Tensor normal;

  std::size_t height() const { return diffuse.dim(2); }
  std::size_t width() const { return diffuse.dim(3); }
  TextureSet detach() const { return {diffuse.detach(), rough_metal.detach(), normal.detach()}; }
};

/// Throws NumericalError if a texture invariant is violated.
void validate(const TextureSet& tex, double normal_tolerance = 1e-6);

/// All eight channels stacked as [1,8,H,W] (diffuse, rough_metal, normal).
Tensor stack_channels(const TextureSet& tex);

/// Maps the unconstrained 8-channel head to texture maps:
/// sigmoid for diffuse and rough_metal; the normal is the normalized
/// (2s5-1, 2s6-1, 0.9 s7 + 0.1) where s = sigmoid of the channel.
TextureSet decode_head(const Tensor& raw);

/// Raw per-texel parameters optimized directly, decoded like the network head.
struct PixelParams {
  Tensor raw;  // [1,8,H,W]

  static PixelParams zeros(std::size_t height, std::size_t width);
};

TextureSet decode_pixels(const PixelParams& params);

/// Analytic inverse of the decode mapping. Diffuse and rough_metal must lie
/// strictly inside (0,1); each normal must satisfy max(|x|,|y|,z) < 10 z.
Tensor encode_head(const TextureSet& tex);

/// Something that produces a raw texture head from a list of parameters.
class TextureParameterization {
 public:
  virtual ~TextureParameterization() = default;
  virtual ParameterSet& parameters() = 0;
  virtual const ParameterSet& parameters() const = 0;
  virtual Tensor raw_head(std::span<const Tensor> params) const = 0;

  TextureSet decode(std::span<const Tensor> params) const { return decode_head(raw_head(params)); }
  TextureSet current() const;
};

class PixelParameterization final : public TextureParameterization {
 public:
  explicit PixelParameterization(PixelParams init);
  ParameterSet& parameters() override { return params_; }
  const ParameterSet& parameters() const override { return params_; }
  Tensor raw_head(std::span<const Tensor> params) const override;

 private:
  ParameterSet params_;
};

class NetworkParameterization final : public TextureParameterization {
 public:
  explicit NetworkParameterization(UNet net) : net_(std::move(net)) {}
  ParameterSet& parameters() override { return net_.parameters(); }
  const ParameterSet& parameters() const override { return net_.parameters(); }
  Tensor raw_head(std::span<const Tensor> params) const override { return net_.forward(params); }
  const UNet& network() const { return net_; }

 private:
  UNet net_;
};

}  // namespace paintlab
