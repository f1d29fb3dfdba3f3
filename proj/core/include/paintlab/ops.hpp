#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "paintlab/tensor.hpp"

namespace paintlab {

// Differentiable primitives. Each returns an untracked tensor when none of its
// inputs is tracked. Image-like tensors are [batch, channels, height, width].

/// Direct cross-correlation. Kernel extents must be odd.
Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias, std::size_t stride,
              std::size_t padding);

/// Replicates each texel into a factor x factor block.
Tensor upsample_nearest(const Tensor& input, std::size_t factor);

Tensor leaky_relu(const Tensor& x, double slope);

// Binary ops broadcast a scalar against any tensor, or tensors of equal rank
// whose extents agree or are 1 (per-channel against spatial maps and back).
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
/// Throws NumericalError when a denominator magnitude falls below 1e-12.
Tensor div(const Tensor& a, const Tensor& b);

Tensor scale(const Tensor& x, double factor);
Tensor shift(const Tensor& x, double offset);
Tensor pow(const Tensor& x, double exponent);
Tensor sigmoid(const Tensor& x);
Tensor tanh(const Tensor& x);
Tensor sqrt(const Tensor& x);
/// Subgradient at zero is zero.
Tensor abs(const Tensor& x);
/// Gradient passes only strictly inside (lo, hi).
Tensor clamp(const Tensor& x, double lo, double hi);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
/// [B,C,H,W] -> [B,1,H,W].
Tensor sum_channels(const Tensor& x);

Tensor concat_channels(std::span<const Tensor> parts);
Tensor slice_channels(const Tensor& x, std::size_t begin, std::size_t count);
/// Spatial window [y0, y0+height) x [x0, x0+width).
Tensor crop(const Tensor& x, std::size_t y0, std::size_t height, std::size_t x0,
            std::size_t width);

inline constexpr double kChannelNormEps = 1e-5;

/// Normalizes every channel of every batch item to zero mean and unit variance
/// over its spatial extent, then applies per-channel `gain` and `bias` ([C]).
Tensor channel_norm(const Tensor& x, const Tensor& gain, const Tensor& bias,
                    double eps = kChannelNormEps);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
inline Tensor operator/(const Tensor& a, const Tensor& b) { return div(a, b); }
inline Tensor operator*(const Tensor& a, double c) { return scale(a, c); }
inline Tensor operator*(double c, const Tensor& a) { return scale(a, c); }
inline Tensor operator+(const Tensor& a, double c) { return shift(a, c); }
inline Tensor operator-(const Tensor& a, double c) { return shift(a, -c); }

}  // namespace paintlab
