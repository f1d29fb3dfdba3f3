#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "paintlab/camera.hpp"
#include "paintlab/image.hpp"
#include "paintlab/tensor.hpp"
#include "paintlab/texture.hpp"
#include "paintlab/vec.hpp"

namespace paintlab {

using Rgb = std::array<double, 3>;

struct Light {
  Vec3 direction;  // unit, toward the light
  Rgb radiance;
  double weight;  // solid angle
};

struct EnvLight {
  std::vector<Light> lights;
  std::size_t clamped = 0;  // texel channels that were negative or non-finite

  /// Same directions and weights, radiance multiplied by `factor`.
  EnvLight scaled(double factor) const;
};

/// One directional light per texel center. Row 0 is the zenith (+y); column
/// centers sweep azimuth from +z toward +x. Weights are the exact texel solid
/// angles. Texels with zero radiance are dropped.
EnvLight build_env(const Image& latlong);

/// "studio" (sky gradient, warm key light, dim ground), "white" (uniform 1)
/// or "black". Generated at the given lat-long resolution.
Image builtin_env_image(const std::string& name, std::size_t width = 16, std::size_t height = 8);

/// A single light of the given radiance and unit weight.
EnvLight directional_light(Vec3 direction, Rgb radiance);

// Cook-Torrance pieces, exposed for checks.
double ggx_distribution(double n_dot_h, double alpha);
double schlick_fresnel(double ks, double h_dot_v);
/// Separable Smith with the Schlick-GGX G1(x) = x / (x(1-k) + k), k = alpha/2.
double smith_geometry(double n_dot_v, double n_dot_l, double alpha);
Rgb specular_color(const Rgb& diffuse, double metalness);

/// Texture sample point of (u, v): clamp-to-edge bilinear with texel centers
/// at ((x + 0.5)/W, 1 - (y + 0.5)/H).
struct BilinearTaps {
  std::array<std::size_t, 4> index;
  std::array<double, 4> weight;
};
BilinearTaps bilinear_taps(Vec2 uv, std::size_t height, std::size_t width);

/// Differentiable linear-radiance render [1,3,R,R] of the texture maps
/// under `env`. Gradients flow to whichever of the three maps are tracked.
/// Throws NumericalError naming the pixel if any output is non-finite.
Tensor shade(const TextureSet& tex, const GBuffer& g, const EnvLight& env, double background = 0.0);

/// Elementwise clamp at 0, Reinhard x/(1+x), then gamma 1/2.2.
Tensor tonemap(const Tensor& linear);
double tonemap(double linear);

}  // namespace paintlab
