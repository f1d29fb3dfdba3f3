#include "paintlab/shading.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "paintlab/error.hpp"
#include "paintlab/parallel.hpp"

namespace paintlab {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr std::size_t kInputs = 8;  // kd rgb, roughness, metalness, tangent-space normal

// Forward-mode dual number carrying the derivative with respect to the eight
// sampled texture channels of one pixel.
struct Dual {
  double v = 0.0;
  std::array<double, kInputs> d{};

  Dual() = default;
  Dual(double value) : v(value) {}  // NOLINT: implicit constants
  static Dual input(double value, std::size_t slot) {
    Dual x(value);
    x.d[slot] = 1.0;
    return x;
  }
};

inline Dual operator+(const Dual& a, const Dual& b) {
  Dual r(a.v + b.v);
  for (std::size_t i = 0; i < kInputs; ++i) r.d[i] = a.d[i] + b.d[i];
  return r;
}
inline Dual operator-(const Dual& a, const Dual& b) {
  Dual r(a.v - b.v);
  for (std::size_t i = 0; i < kInputs; ++i) r.d[i] = a.d[i] - b.d[i];
  return r;
}
inline Dual operator*(const Dual& a, const Dual& b) {
  Dual r(a.v * b.v);
  for (std::size_t i = 0; i < kInputs; ++i) r.d[i] = a.d[i] * b.v + a.v * b.d[i];
  return r;
}
inline Dual operator*(const Dual& a, double s) {
  Dual r(a.v * s);
  for (std::size_t i = 0; i < kInputs; ++i) r.d[i] = a.d[i] * s;
  return r;
}
inline Dual operator*(double s, const Dual& a) { return a * s; }
inline Dual operator+(const Dual& a, double s) {
  Dual r = a;
  r.v += s;
  return r;
}
inline Dual operator+(double s, const Dual& a) { return a + s; }
inline Dual operator-(double s, const Dual& a) {
  Dual r(s - a.v);
  for (std::size_t i = 0; i < kInputs; ++i) r.d[i] = -a.d[i];
  return r;
}
inline Dual operator/(const Dual& a, const Dual& b) {
  const double inv = 1.0 / b.v;
  Dual r(a.v * inv);
  for (std::size_t i = 0; i < kInputs; ++i) r.d[i] = (a.d[i] - r.v * b.d[i]) * inv;
  return r;
}
inline Dual& operator+=(Dual& a, const Dual& b) {
  a.v += b.v;
  for (std::size_t i = 0; i < kInputs; ++i) a.d[i] += b.d[i];
  return a;
}
inline Dual sqrt(const Dual& a) {
  Dual r(std::sqrt(a.v));
  const double k = 0.5 / r.v;
  for (std::size_t i = 0; i < kInputs; ++i) r.d[i] = a.d[i] * k;
  return r;
}

inline double value(double x) { return x; }
inline double value(const Dual& x) { return x.v; }
using std::sqrt;

template <class T>
struct Vec3T {
  T x, y, z;
};

template <class T>
T dot(const Vec3T<T>& a, const Vec3& b) {
  return a.x * b.x + a.y * b.y + a.z * b.z;
}

template <class T>
T ggx(const T& n_dot_h, const T& a2) {
  const T q = n_dot_h * n_dot_h * (a2 - 1.0) + 1.0;
  return a2 / (kPi * q * q);
}

template <class T>
T schlick_g1(const T& x, const T& k) {
  return x / (x * (1.0 - k) + k);
}

// Linear radiance of one pixel from its eight bilinearly sampled channels.
template <class T>
std::array<T, 3> shade_texel(const std::array<T, kInputs>& s, const Vec3& tan, const Vec3& bit,
                             const Vec3& nrm, const Vec3& view, const EnvLight& env) {
  const T mx = s[5] * tan.x + s[6] * bit.x + s[7] * nrm.x;
  const T my = s[5] * tan.y + s[6] * bit.y + s[7] * nrm.y;
  const T mz = s[5] * tan.z + s[6] * bit.z + s[7] * nrm.z;
  const T inv_len = 1.0 / sqrt(mx * mx + my * my + mz * mz);
  const Vec3T<T> n{mx * inv_len, my * inv_len, mz * inv_len};

  T n_dot_v = dot(n, view);
  if (value(n_dot_v) < 0.0) n_dot_v = T(0.0);
  const T& roughness = s[3];
  const T& metal = s[4];
  const T alpha = roughness * roughness;
  const T a2 = alpha * alpha;
  const T k = alpha * 0.5;
  const T g1_view = schlick_g1(n_dot_v, k);

  std::array<T, 3> diffuse, ks;
  for (std::size_t c = 0; c < 3; ++c) {
    diffuse[c] = s[c] * (1.0 - metal) * (1.0 / kPi);
    ks[c] = 0.04 * (1.0 - metal) + metal * s[c];
  }

  std::array<T, 3> out{T(0.0), T(0.0), T(0.0)};
  for (const Light& light : env.lights) {
    const T n_dot_l = dot(n, light.direction);
    if (!(value(n_dot_l) > 0.0)) continue;
    const Vec3 h = normalize(view + light.direction);
    T n_dot_h = dot(n, h);
    if (value(n_dot_h) < 0.0) n_dot_h = T(0.0);
    const double f5 = std::pow(1.0 - std::max(paintlab::dot(view, h), 0.0), 5.0);
    const T common = ggx(n_dot_h, a2) * g1_view * schlick_g1(n_dot_l, k) /
                     (4.0 * n_dot_v * n_dot_l + 1e-6);
    for (std::size_t c = 0; c < 3; ++c) {
      const T fresnel = ks[c] + (1.0 - ks[c]) * f5;
      out[c] += (diffuse[c] + common * fresnel) * n_dot_l * (light.weight * light.radiance[c]);
    }
  }
  return out;
}

}  // namespace

EnvLight EnvLight::scaled(double factor) const {
  EnvLight e = *this;
  for (Light& l : e.lights)
    for (double& c : l.radiance) c *= factor;
  return e;
}

EnvLight build_env(const Image& latlong) {
  if (latlong.width < 2 || latlong.height < 1 || latlong.channels != 3)
    throw ConfigError("environment map must be RGB and at least 2x1");
  EnvLight env;
  const double dphi = 2.0 * kPi / static_cast<double>(latlong.width);
  for (std::size_t y = 0; y < latlong.height; ++y) {
    const double hh = static_cast<double>(latlong.height);
    const double t0 = kPi * static_cast<double>(y) / hh;
    const double t1 = kPi * static_cast<double>(y + 1) / hh;
    const double tc = kPi * (static_cast<double>(y) + 0.5) / hh;
    const double weight = dphi * (std::cos(t0) - std::cos(t1));
    for (std::size_t x = 0; x < latlong.width; ++x) {
      const double phi = dphi * (static_cast<double>(x) + 0.5);
      Light l;
      l.direction = {std::sin(tc) * std::sin(phi), std::cos(tc), std::sin(tc) * std::cos(phi)};
      l.weight = weight;
      bool lit = false;
      for (std::size_t c = 0; c < 3; ++c) {
        double v = latlong.at(y, x, c);
        if (!(v >= 0.0)) {
          ++env.clamped;
          v = 0.0;
        }
        l.radiance[c] = v;
        lit = lit || v > 0.0;
      }
      if (lit) env.lights.push_back(l);
    }
  }
  return env;
}

Image builtin_env_image(const std::string& name, std::size_t width, std::size_t height) {
  if (name != "studio" && name != "white" && name != "black")
    throw ConfigError("unknown builtin environment '" + name + "' (expected studio, white or black)");
  Image img(width, height, 3, name == "white" ? 1.0 : 0.0);
  if (name != "studio") return img;
  const Vec3 key = normalize(Vec3{0.6, 0.7, 0.8});
  for (std::size_t y = 0; y < height; ++y) {
    const double theta = kPi * (static_cast<double>(y) + 0.5) / static_cast<double>(height);
    for (std::size_t x = 0; x < width; ++x) {
      const double phi = 2.0 * kPi * (static_cast<double>(x) + 0.5) / static_cast<double>(width);
      const Vec3 d{std::sin(theta) * std::sin(phi), std::cos(theta), std::sin(theta) * std::cos(phi)};
      Rgb c;
      if (d.y > 0.0) {
        const double sky = 0.5 + 0.5 * d.y;
        c = {0.55 * sky, 0.6 * sky, 0.7 * sky};
      } else {
        c = {0.12, 0.1, 0.08};
      }
      const double lobe = std::pow(std::max(paintlab::dot(d, key), 0.0), 8.0);
      c[0] += 3.0 * lobe;
      c[1] += 2.8 * lobe;
      c[2] += 2.5 * lobe;
      for (std::size_t k = 0; k < 3; ++k) img.at(y, x, k) = c[k];
    }
  }
  return img;
}

EnvLight directional_light(Vec3 direction, Rgb radiance) {
  EnvLight env;
  env.lights.push_back({normalize(direction), radiance, 1.0});
  return env;
}

double ggx_distribution(double n_dot_h, double alpha) { return ggx(n_dot_h, alpha * alpha); }

double schlick_fresnel(double ks, double h_dot_v) { return ks + (1.0 - ks) * std::pow(1.0 - h_dot_v, 5.0); }

double smith_geometry(double n_dot_v, double n_dot_l, double alpha) {
  return schlick_g1(n_dot_v, alpha / 2.0) * schlick_g1(n_dot_l, alpha / 2.0);
}

Rgb specular_color(const Rgb& diffuse, double metalness) {
  Rgb ks;
  for (std::size_t c = 0; c < 3; ++c) ks[c] = 0.04 * (1.0 - metalness) + metalness * diffuse[c];
  return ks;
}

BilinearTaps bilinear_taps(Vec2 uv, std::size_t height, std::size_t width) {
  const double fx = uv.x * static_cast<double>(width) - 0.5;
  const double fy = (1.0 - uv.y) * static_cast<double>(height) - 0.5;
  const double x0f = std::floor(fx), y0f = std::floor(fy);
  const double ax = fx - x0f, ay = fy - y0f;
  const auto clampi = [](double v, std::size_t n) {
    return static_cast<std::size_t>(std::clamp(v, 0.0, static_cast<double>(n - 1)));
  };
  const std::size_t x0 = clampi(x0f, width), x1 = clampi(x0f + 1.0, width);
  const std::size_t y0 = clampi(y0f, height), y1 = clampi(y0f + 1.0, height);
  return {{y0 * width + x0, y0 * width + x1, y1 * width + x0, y1 * width + x1},
          {(1 - ax) * (1 - ay), ax * (1 - ay), (1 - ax) * ay, ax * ay}};
}

Tensor shade(const TextureSet& tex, const GBuffer& g, const EnvLight& env, double background) {
  const std::size_t th = tex.height(), tw = tex.width();
  if (tex.diffuse.shape() != Shape{1, 3, th, tw} || tex.rough_metal.shape() != Shape{1, 2, th, tw} ||
      tex.normal.shape() != Shape{1, 3, th, tw})
    throw ShapeError("shade: texture maps must be [1,3,H,W], [1,2,H,W], [1,3,H,W]");
  const std::size_t res = g.resolution, pixels = g.pixels();
  const std::size_t texels = th * tw;
  const auto kd = tex.diffuse.data(), rm = tex.rough_metal.data(), nm = tex.normal.data();

  // Per pixel: taps and the 3x8 Jacobian of its color w.r.t. the sampled channels.
  struct PixelRecord {
    BilinearTaps taps;
    std::array<std::array<double, kInputs>, 3> jacobian;
  };
  auto records = std::make_shared<std::vector<PixelRecord>>(pixels);
  std::vector<double> out(3 * pixels, background);

  parallel_for(res, [&](std::size_t row_begin, std::size_t row_end) {
    for (std::size_t p = row_begin * res; p < row_end * res; ++p) {
      if (!g.mask[p]) continue;
      PixelRecord& rec = (*records)[p];
      rec.taps = bilinear_taps(g.uv[p], th, tw);
      std::array<Dual, kInputs> s;
      for (std::size_t ch = 0; ch < kInputs; ++ch) {
        const double* src = ch < 3 ? &kd[ch * texels] : ch < 5 ? &rm[(ch - 3) * texels] : &nm[(ch - 5) * texels];
        double v = 0.0;
        for (std::size_t k = 0; k < 4; ++k) v += rec.taps.weight[k] * src[rec.taps.index[k]];
        s[ch] = Dual::input(v, ch);
      }
      const auto color = shade_texel(s, g.tangent[p], g.bitangent[p], g.normal[p], g.view[p], env);
      for (std::size_t c = 0; c < 3; ++c) {
        if (!std::isfinite(color[c].v)) {
          std::ostringstream msg;
          msg << "non-finite shading at pixel (x=" << p % res << ", y=" << p / res << ")";
          throw NumericalError(msg.str());
        }
        out[c * pixels + p] = color[c].v;
        rec.jacobian[c] = color[c].d;
      }
    }
  });

  Tensor result({1, 3, res, res}, std::move(out));
  return Tape::record(
      std::move(result), {&tex.diffuse, &tex.rough_metal, &tex.normal},
      [records, mask = g.mask, pixels, texels, d = tex.diffuse, r = tex.rough_metal, n = tex.normal](
          std::span<const double> go, Tape& tape) {
        const std::span<double> gd = tape.grad_slot(d), gr = tape.grad_slot(r), gn = tape.grad_slot(n);
        for (std::size_t p = 0; p < pixels; ++p) {
          if (!mask[p]) continue;
          const PixelRecord& rec = (*records)[p];
          std::array<double, kInputs> g8{};
          for (std::size_t c = 0; c < 3; ++c)
            for (std::size_t k = 0; k < kInputs; ++k) g8[k] += go[c * pixels + p] * rec.jacobian[c][k];
          for (std::size_t ch = 0; ch < kInputs; ++ch) {
            const std::span<double> slot = ch < 3 ? gd : ch < 5 ? gr : gn;
            if (slot.empty()) continue;
            const std::size_t base = (ch < 3 ? ch : ch < 5 ? ch - 3 : ch - 5) * texels;
            for (std::size_t k = 0; k < 4; ++k) slot[base + rec.taps.index[k]] += rec.taps.weight[k] * g8[ch];
          }
        }
      });
}

double tonemap(double x) {
  if (!(x > 0.0)) return 0.0;
  return std::pow(x / (1.0 + x), 1.0 / 2.2);
}

Tensor tonemap(const Tensor& linear) {
  std::vector<double> y(linear.numel());
  const auto x = linear.data();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = tonemap(x[i]);
  Tensor out(linear.shape(), y);
  return Tape::record(std::move(out), {&linear}, [linear, y = std::move(y)](std::span<const double> go, Tape& tape) {
    const std::span<double> gi = tape.grad_slot(linear);
    const auto x = linear.data();
    for (std::size_t i = 0; i < gi.size(); ++i) {
      if (!(x[i] > 0.0)) continue;
      // d/dx (x/(1+x))^(1/2.2) = y / (2.2 x (1+x))
      gi[i] += go[i] * y[i] / (2.2 * x[i] * (1.0 + x[i]));
    }
  });
}

}  // namespace paintlab
