#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

#include "paintlab/tensor.hpp"
#include "paintlab/texture.hpp"

namespace paintlab {

/// Interleaved (row, column, channel) image of doubles, row 0 at the top.
struct Image {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t channels = 0;
  std::vector<double> data;

  Image() = default;
  Image(std::size_t w, std::size_t h, std::size_t c, double fill = 0.0)
      : width(w), height(h), channels(c), data(w * h * c, fill) {}

  double& at(std::size_t y, std::size_t x, std::size_t c) { return data[(y * width + x) * channels + c]; }
  double at(std::size_t y, std::size_t x, std::size_t c) const {
    return data[(y * width + x) * channels + c];
  }
};

/// [1,C,H,W] tensor <-> interleaved image.
Image to_image(const Tensor& t);
Tensor to_tensor(const Image& img);

/// 8-bit PNG with 1-4 channels; values are clamped to [0,1] and rounded.
void write_png(const std::filesystem::path& path, const Image& img);
/// Values scaled to [0,1]; grey/alpha layouts are expanded to RGB and alpha dropped.
Image read_png(const std::filesystem::path& path);

/// Lat-long environment map, linearized from display gamma 2.2.
Image load_env_png(const std::filesystem::path& path);

/// Writes diffuse.png (RGB), rough_metal.png (R roughness, G metalness, B 0)
/// and normal.png ((n+1)/2) into `dir`.
void write_texture_set(const std::filesystem::path& dir, const TextureSet& tex);
/// Reads the triplet back; normals are renormalized after quantization.
TextureSet read_texture_set(const std::filesystem::path& dir);

/// Side-by-side strip of equally sized images.
Image hstack(const std::vector<Image>& images);

}  // namespace paintlab
