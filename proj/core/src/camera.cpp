#include "paintlab/camera.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "paintlab/error.hpp"

namespace paintlab {
namespace {

struct View {
  Vec3 eye, right, up, forward;
  double focal;  // 1 / tan(fov / 2)
};

View make_view(const Camera& cam) {
  View v;
  v.eye = cam.position();
  v.forward = normalize(-v.eye);
  v.right = normalize(cross(v.forward, Vec3{0, 1, 0}));
  v.up = cross(v.right, v.forward);
  v.focal = 1.0 / std::tan(cam.fov / 2.0);
  return v;
}

struct Projected {
  double x, y, depth;  // pixel coordinates and camera-space depth
};

constexpr double kNear = 1e-3;
constexpr double kEdgeSlack = 1e-9;

}  // namespace

void Camera::validate() const {
  if (!(distance > 0.0)) throw ConfigError("camera distance must be positive");
  if (!(fov > 0.0 && fov < std::numbers::pi)) throw ConfigError("camera fov must lie in (0, pi)");
  if (resolution == 0) throw ConfigError("camera resolution must be positive");
}

Vec3 Camera::position() const {
  return Vec3{std::cos(elevation) * std::sin(azimuth), std::sin(elevation),
              std::cos(elevation) * std::cos(azimuth)} *
         distance;
}

std::vector<Camera> sample_cameras(std::size_t n, PoseRule rule, std::uint64_t seed,
                                   const Camera& base) {
  if (n == 0) throw ConfigError("sample_cameras needs n >= 1");
  std::mt19937_64 rng(seed);
  const double pi = std::numbers::pi;
  std::uniform_real_distribution<double> elev(-pi / 3.0, pi / 3.0), azim(0.0, 2.0 * pi);
  std::uniform_real_distribution<double> jitter(-2.0 * pi / 180.0, 2.0 * pi / 180.0);
  std::vector<Camera> out;
  for (std::size_t i = 0; i < n; ++i) {
    Camera c = base;
    if (rule == PoseRule::full_body) {
      c.elevation = elev(rng);
      c.azimuth = azim(rng);
    } else {
      c.elevation = jitter(rng);
      c.azimuth = jitter(rng);
    }
    out.push_back(c);
  }
  return out;
}

std::size_t GBuffer::covered() const {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
}

GBuffer rasterize(const Mesh& mesh, const Camera& cam) {
  mesh.validate();
  cam.validate();
  if (mesh.tangents.size() != mesh.positions.size()) throw ConfigError("mesh has no tangents");
  const View view = make_view(cam);
  const std::size_t res = cam.resolution;
  const double half = static_cast<double>(res) / 2.0;

  GBuffer g;
  g.resolution = res;
  const std::size_t n = res * res;
  g.mask.assign(n, 0);
  g.uv.assign(n, {});
  g.normal.assign(n, {});
  g.tangent.assign(n, {});
  g.bitangent.assign(n, {});
  g.view.assign(n, {});
  std::vector<double> zbuf(n, std::numeric_limits<double>::infinity());

  std::vector<Projected> proj(mesh.positions.size());
  for (std::size_t i = 0; i < proj.size(); ++i) {
    const Vec3 q = mesh.positions[i] - view.eye;
    const double depth = dot(q, view.forward);
    const double inv = depth > kNear ? view.focal / depth : 0.0;
    proj[i] = {(dot(q, view.right) * inv + 1.0) * half, (1.0 - dot(q, view.up) * inv) * half, depth};
  }

  for (const auto& tri : mesh.triangles) {
    const Vec3& p0 = mesh.positions[tri[0]];
    if (length(cross(mesh.positions[tri[1]] - p0, mesh.positions[tri[2]] - p0)) < 1e-14) {
      ++g.degenerate_triangles;
      continue;
    }
    const Projected& a = proj[tri[0]];
    const Projected& b = proj[tri[1]];
    const Projected& c = proj[tri[2]];
    if (a.depth <= kNear || b.depth <= kNear || c.depth <= kNear) continue;
    const double area = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
    if (area == 0.0) continue;  // edge-on: covers no pixel centers

    const auto lo = [](double v) { return static_cast<std::ptrdiff_t>(std::floor(v - 0.5)); };
    const auto hi = [](double v) { return static_cast<std::ptrdiff_t>(std::ceil(v - 0.5)); };
    const std::ptrdiff_t last = static_cast<std::ptrdiff_t>(res) - 1;
    const std::ptrdiff_t x0 = std::max<std::ptrdiff_t>(0, lo(std::min({a.x, b.x, c.x})));
    const std::ptrdiff_t x1 = std::min(last, hi(std::max({a.x, b.x, c.x})));
    const std::ptrdiff_t y0 = std::max<std::ptrdiff_t>(0, lo(std::min({a.y, b.y, c.y})));
    const std::ptrdiff_t y1 = std::min(last, hi(std::max({a.y, b.y, c.y})));

    for (std::ptrdiff_t py = y0; py <= y1; ++py) {
      const double sy = static_cast<double>(py) + 0.5;
      for (std::ptrdiff_t px = x0; px <= x1; ++px) {
        const double sx = static_cast<double>(px) + 0.5;
        const double w0 = ((b.x - sx) * (c.y - sy) - (b.y - sy) * (c.x - sx)) / area;
        const double w1 = ((c.x - sx) * (a.y - sy) - (c.y - sy) * (a.x - sx)) / area;
        const double w2 = 1.0 - w0 - w1;
        // Slack so pixel centers on a shared edge are not lost to rounding on
        // both sides; the depth test settles the double hit.
        if (w0 < -kEdgeSlack || w1 < -kEdgeSlack || w2 < -kEdgeSlack) continue;
        // Perspective-correct weights.
        const double q0 = w0 / a.depth, q1 = w1 / b.depth, q2 = w2 / c.depth;
        const double qs = q0 + q1 + q2;
        const double depth = 1.0 / qs;
        const std::size_t idx = static_cast<std::size_t>(py) * res + static_cast<std::size_t>(px);
        if (!(depth < zbuf[idx])) continue;
        zbuf[idx] = depth;
        const double l0 = q0 / qs, l1 = q1 / qs, l2 = q2 / qs;

        const Vec2 &u0 = mesh.uvs[tri[0]], &u1 = mesh.uvs[tri[1]], &u2 = mesh.uvs[tri[2]];
        g.uv[idx] = {u0.x * l0 + u1.x * l1 + u2.x * l2, u0.y * l0 + u1.y * l1 + u2.y * l2};
        const Vec3 nrm = normalize(mesh.normals[tri[0]] * l0 + mesh.normals[tri[1]] * l1 +
                                   mesh.normals[tri[2]] * l2);
        Vec3 tan = mesh.tangents[tri[0]] * l0 + mesh.tangents[tri[1]] * l1 + mesh.tangents[tri[2]] * l2;
        tan = tan - nrm * dot(nrm, tan);
        if (length(tan) < 1e-9) {
          const Vec3 axis = std::abs(nrm.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
          tan = axis - nrm * dot(nrm, axis);
        }
        tan = normalize(tan);
        const Vec3 world = mesh.positions[tri[0]] * l0 + mesh.positions[tri[1]] * l1 +
                           mesh.positions[tri[2]] * l2;
        g.mask[idx] = 1;
        g.normal[idx] = nrm;
        g.tangent[idx] = tan;
        g.bitangent[idx] = cross(nrm, tan);
        g.view[idx] = normalize(view.eye - world);
      }
    }
  }
  return g;
}

}  // namespace paintlab
