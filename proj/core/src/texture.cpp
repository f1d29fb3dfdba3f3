#include "paintlab/texture.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "paintlab/error.hpp"
#include "paintlab/ops.hpp"

namespace paintlab {

void validate(const TextureSet& tex, double normal_tolerance) {
  auto check_unit_range = [](const Tensor& t, const char* name) {
    for (double v : t.data()) {
      if (!(v >= 0.0 && v <= 1.0)) {
        throw NumericalError(std::string(name) + " texel " + std::to_string(v) +
                             " outside [0,1]");
      }
    }
  };
  check_unit_range(tex.diffuse, "diffuse");
  check_unit_range(tex.rough_metal, "rough_metal");
  const std::size_t plane = tex.normal.dim(2) * tex.normal.dim(3);
  const auto n = tex.normal.data();
  for (std::size_t i = 0; i < plane; ++i) {
    const double x = n[i], y = n[plane + i], z = n[2 * plane + i];
    const double len = std::sqrt(x * x + y * y + z * z);
    if (!(std::abs(len - 1.0) <= normal_tolerance) || !(z > 0.0)) {
      throw NumericalError("normal texel " + std::to_string(i) + " has length " +
                           std::to_string(len) + " and z " + std::to_string(z));
    }
  }
}

Tensor stack_channels(const TextureSet& tex) {
  const Tensor parts[] = {tex.diffuse, tex.rough_metal, tex.normal};
  return concat_channels(parts);
}

TextureSet decode_head(const Tensor& raw) {
  if (raw.rank() != 4 || raw.dim(1) != kHeadChannels) {
    throw ShapeError("texture head must be [1,8,H,W], got " + to_string(raw.shape()));
  }
  TextureSet tex;
  tex.diffuse = sigmoid(slice_channels(raw, 0, 3));
  tex.rough_metal = sigmoid(slice_channels(raw, 3, 2));
  const Tensor xy = sigmoid(slice_channels(raw, 5, 2)) * 2.0 - 1.0;
  const Tensor z = sigmoid(slice_channels(raw, 7, 1)) * 0.9 + 0.1;
  const Tensor parts[] = {xy, z};
  const Tensor n = concat_channels(parts);
  tex.normal = n / sqrt(sum_channels(n * n));
  return tex;
}

PixelParams PixelParams::zeros(std::size_t height, std::size_t width) {
  return {Tensor::zeros({1, kHeadChannels, height, width})};
}

TextureSet decode_pixels(const PixelParams& params) { return decode_head(params.raw); }

Tensor encode_head(const TextureSet& tex) {
  const std::size_t h = tex.height(), w = tex.width(), plane = h * w;
  std::vector<double> raw(kHeadChannels * plane);
  auto logit = [](double p, const char* what) {
    if (!(p > 0.0 && p < 1.0)) {
      throw ConfigError(std::string(what) + " value " + std::to_string(p) +
                        " is not strictly inside (0,1)");
    }
    return std::log(p / (1.0 - p));
  };
  const auto d = tex.diffuse.data();
  const auto rm = tex.rough_metal.data();
  const auto n = tex.normal.data();
  for (std::size_t i = 0; i < 3 * plane; ++i) raw[i] = logit(d[i], "diffuse");
  for (std::size_t i = 0; i < 2 * plane; ++i) raw[3 * plane + i] = logit(rm[i], "rough_metal");
  for (std::size_t i = 0; i < plane; ++i) {
    const double x = n[i], y = n[plane + i], z = n[2 * plane + i];
    const double peak = std::max({std::abs(x), std::abs(y), z});
    // Any scale in (0.1/z, 1/peak) maps the direction into the decoder's range.
    const double lo = 0.1 / z, hi = 1.0 / peak;
    if (!(z > 0.0) || !(lo < hi)) {
      throw ConfigError("normal texel " + std::to_string(i) + " is outside the decodable cone");
    }
    const double s = std::sqrt(lo * hi);
    raw[5 * plane + i] = logit((s * x + 1.0) / 2.0, "normal x");
    raw[6 * plane + i] = logit((s * y + 1.0) / 2.0, "normal y");
    raw[7 * plane + i] = logit((s * z - 0.1) / 0.9, "normal z");
  }
  return Tensor({1, kHeadChannels, h, w}, std::move(raw));
}

TextureSet TextureParameterization::current() const {
  const auto v = values(parameters());
  return decode(v);
}

PixelParameterization::PixelParameterization(PixelParams init) {
  params_.push_back({"pixels", init.raw.detach()});
}

Tensor PixelParameterization::raw_head(std::span<const Tensor> params) const {
  if (params.size() != 1) throw ShapeError("pixel parameterization expects one tensor");
  return params[0];
}

}  // namespace paintlab
