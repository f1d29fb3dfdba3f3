#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <numbers>
#include <random>
#include <sstream>

#include "doctest.h"
#include "paintlab/camera.hpp"
#include "paintlab/error.hpp"
#include "paintlab/image.hpp"
#include "paintlab/mesh.hpp"
#include "paintlab/ops.hpp"
#include "paintlab/shading.hpp"
#include "support/finite_difference.hpp"

using namespace paintlab;

namespace {

constexpr double kPi = std::numbers::pi;

TextureSet constant_texture(std::size_t size, Rgb kd, double roughness, double metal) {
  const std::size_t n = size * size;
  std::vector<double> d(3 * n), rm(2 * n), nrm(3 * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < 3; ++c) d[c * n + i] = kd[c];
    rm[i] = roughness;
    rm[n + i] = metal;
    nrm[2 * n + i] = 1.0;
  }
  return {Tensor({1, 3, size, size}, d), Tensor({1, 2, size, size}, rm), Tensor({1, 3, size, size}, nrm)};
}

TextureSet random_texture(std::size_t size, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<double> raw(8 * size * size);
  for (double& v : raw) v = normal(rng);
  return decode_head(Tensor({1, 8, size, size}, raw));
}

// One covered pixel whose surface faces +z, seen from +z.
GBuffer single_pixel() {
  GBuffer g;
  g.resolution = 1;
  g.mask = {1};
  g.uv = {{0.5, 0.5}};
  g.normal = {{0, 0, 1}};
  g.tangent = {{1, 0, 0}};
  g.bitangent = {{0, 1, 0}};
  g.view = {{0, 0, 1}};
  return g;
}

double angle_between(const Vec3& a, const Vec3& b) {
  return std::acos(std::clamp(dot(normalize(a), normalize(b)), -1.0, 1.0));
}

}  // namespace

TEST_CASE("quad coverage matches its analytic projected area") {
  const Mesh quad = make_plane(2.0);
  Camera cam;
  cam.resolution = 128;
  const GBuffer g = rasterize(quad, cam);
  // Corners at (+-1, +-1, 0), eye at (0, 0, 3): pinhole projection by hand.
  const double half_extent = 1.0 / (3.0 * std::tan(cam.fov / 2.0));  // in NDC
  const double side_px = half_extent * static_cast<double>(cam.resolution);
  const double expected = side_px * side_px;
  const double got = static_cast<double>(g.covered());
  CHECK(std::abs(got - expected) / expected < 0.02);
  CHECK(g.degenerate_triangles == 0);
}

TEST_CASE("front-facing sphere center normal points at the camera") {
  Camera cam;
  cam.resolution = 65;  // odd, so a pixel center sits on the optical axis
  const GBuffer g = rasterize(make_uv_sphere(), cam);
  const std::size_t center = 32 * 65 + 32;
  REQUIRE(g.mask[center] == 1);
  CHECK(std::abs(g.normal[center].x) < 1e-2);
  CHECK(std::abs(g.normal[center].y) < 1e-2);
  CHECK(std::abs(g.normal[center].z - 1.0) < 1e-2);
}

TEST_CASE("identical cameras give bit-identical gbuffers") {
  Camera cam;
  cam.elevation = 0.3;
  cam.azimuth = 1.1;
  const Mesh sphere = make_uv_sphere();
  const GBuffer a = rasterize(sphere, cam), b = rasterize(sphere, cam);
  CHECK(a.mask == b.mask);
  for (std::size_t i = 0; i < a.pixels(); ++i) {
    CHECK(std::memcmp(&a.uv[i], &b.uv[i], sizeof(Vec2)) == 0);
    CHECK(std::memcmp(&a.normal[i], &b.normal[i], sizeof(Vec3)) == 0);
    CHECK(std::memcmp(&a.tangent[i], &b.tangent[i], sizeof(Vec3)) == 0);
  }
}

TEST_CASE("tangent frames are right-handed and orthonormal") {
  for (const auto& mesh : {make_uv_sphere(), make_plane(2.0)}) {
    Camera cam;
    cam.elevation = 0.4;
    cam.azimuth = 0.7;
    const GBuffer g = rasterize(mesh, cam);
    REQUIRE(g.covered() > 0);
    for (std::size_t i = 0; i < g.pixels(); ++i) {
      if (!g.mask[i]) {
        CHECK(length(g.normal[i]) == 0.0);
        continue;
      }
      const Vec3 &t = g.tangent[i], &b = g.bitangent[i], &n = g.normal[i];
      CHECK(std::abs(length(t) - 1.0) < 1e-4);
      CHECK(std::abs(length(b) - 1.0) < 1e-4);
      CHECK(std::abs(length(n) - 1.0) < 1e-4);
      CHECK(std::abs(dot(t, n)) < 1e-4);
      CHECK(std::abs(dot(t, b)) < 1e-4);
      CHECK(length(cross(t, b) - n) < 1e-4);
    }
  }
}

TEST_CASE("degenerate triangles are skipped and counted") {
  Mesh m = make_plane(2.0);
  m.triangles.push_back({0, 0, 1});
  CHECK(rasterize(m, Camera{}).degenerate_triangles == 1);
}

TEST_CASE("obj import triangulates quads and resolves relative indices") {
  std::istringstream obj(
      "# quad\n"
      "v -1 -1 0\nv 1 -1 0\nv 1 1 0\nv -1 1 0\n"
      "vt 0 0\nvt 1 0\nvt 1 1\nvt 0 1\n"
      "f 1/1 2/2 3/3 -1/-1\n");
  const Mesh m = parse_obj(obj);
  CHECK(m.triangles.size() == 2);
  CHECK(m.positions.size() == 4);
  for (const Vec3& n : m.normals) CHECK(n.z == doctest::Approx(1.0));
  CHECK(std::abs(m.tangents[0].x - 1.0) < 1e-12);

  std::istringstream no_uv("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n");
  CHECK_THROWS_AS(parse_obj(no_uv), ConfigError);
  std::istringstream bad("v 0 0 0\nvt 0 0\nf 1/1 2/1 3/1\n");
  CHECK_THROWS_AS(parse_obj(bad), ConfigError);
}

TEST_CASE("uniform lat-long map weights integrate the sphere") {
  const EnvLight env = build_env(Image(16, 8, 3, 1.0));
  double total = 0.0;
  for (const Light& l : env.lights) {
    total += l.weight;
    CHECK(std::abs(length(l.direction) - 1.0) < 1e-12);
  }
  CHECK(env.lights.size() == 128);
  CHECK(std::abs(total - 4.0 * kPi) < 1e-3);
}

TEST_CASE("upper-hemisphere map only yields upward lights") {
  Image img(16, 8, 3, 0.0);
  for (std::size_t y = 0; y < 4; ++y)
    for (std::size_t x = 0; x < 16; ++x)
      for (std::size_t c = 0; c < 3; ++c) img.at(y, x, c) = 1.0;
  const EnvLight env = build_env(img);
  CHECK(env.lights.size() == 64);
  for (const Light& l : env.lights) CHECK(l.direction.y >= 0.0);
}

TEST_CASE("single-texel map is a pure directional setup; negatives are clamped") {
  Image img(8, 4, 3, 0.0);
  img.at(1, 2, 0) = img.at(1, 2, 1) = img.at(1, 2, 2) = 1.0;
  img.at(3, 3, 1) = -0.5;
  const EnvLight env = build_env(img);
  REQUIRE(env.lights.size() == 1);
  CHECK(env.clamped == 1);
  CHECK(env.lights[0].radiance == Rgb{1.0, 1.0, 1.0});
  CHECK_THROWS_AS(build_env(Image(1, 1, 3, 1.0)), ConfigError);
}

TEST_CASE("lambert term is exactly one over pi") {
  const GBuffer g = single_pixel();
  const EnvLight env = directional_light({0, 0, 1}, {1, 1, 1});
  const Tensor lit = shade(constant_texture(2, {1, 1, 1}, 1.0, 0.0), g, env);
  const Tensor dark = shade(constant_texture(2, {0, 0, 0}, 1.0, 0.0), g, env);
  // Specular depends on k^s = 0.04 only, so it cancels in the difference.
  for (std::size_t c = 0; c < 3; ++c) CHECK(std::abs(lit[c] - dark[c] - 1.0 / kPi) < 1e-12);
}

TEST_CASE("specular color, distribution and fresnel closed forms") {
  const Rgb kd{0.2, 0.5, 0.9};
  CHECK(specular_color(kd, 0.0) == Rgb{0.04, 0.04, 0.04});
  CHECK(specular_color(kd, 1.0) == kd);
  for (double alpha : {0.05, 0.3, 1.0}) CHECK(ggx_distribution(1.0, alpha) == doctest::Approx(1.0 / (kPi * alpha * alpha)));
  for (double ks : {0.04, 0.5, 0.9}) CHECK(schlick_fresnel(ks, 0.0) == 1.0);
  CHECK(smith_geometry(1.0, 1.0, 0.5) == doctest::Approx(1.0));
}

TEST_CASE("tonemap values and monotonicity") {
  CHECK(tonemap(0.0) == 0.0);
  CHECK(tonemap(-3.0) == 0.0);
  CHECK(std::abs(tonemap(1.0) - std::pow(0.5, 1.0 / 2.2)) < 1e-15);
  CHECK(std::abs(tonemap(1.0) - 0.7297) < 1e-4);
  CHECK(tonemap(1e9) > 0.999);
  double prev = 0.0;
  for (double x = 0.0; x < 50.0; x += 0.01) {
    CHECK(tonemap(x) >= prev);
    prev = tonemap(x);
  }
}

TEST_CASE("tonemap gradient matches finite differences and vanishes at zero") {
  const std::vector<double> xs{-1.0, 0.0, 0.3, 1.0, 4.0};
  Tape tape;
  const Tensor x = tape.variable(Tensor({5}, xs));
  tape.backward(sum(tonemap(x)));
  const auto g = tape.grad(x);
  CHECK(g[0] == 0.0);
  CHECK(g[1] == 0.0);
  for (std::size_t i = 2; i < xs.size(); ++i) {
    const double h = 1e-6;
    const double fd = (tonemap(xs[i] + h) - tonemap(xs[i] - h)) / (2 * h);
    CHECK(std::abs(g[i] - fd) < 1e-7);
  }
}

TEST_CASE("camera sampling is seeded and adjacent views stay within four degrees") {
  const auto a = sample_cameras(8, PoseRule::adjacent, 7);
  const auto b = sample_cameras(8, PoseRule::adjacent, 7);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].elevation == b[i].elevation);
    CHECK(a[i].azimuth == b[i].azimuth);
    for (std::size_t j = 0; j < a.size(); ++j) {
      CHECK(std::abs(a[i].elevation - a[j].elevation) < 4.0 * kPi / 180.0);
      CHECK(std::abs(a[i].azimuth - a[j].azimuth) < 4.0 * kPi / 180.0);
      // Both angles together still keep the views within 4 * sqrt(2) degrees.
      CHECK(angle_between(a[i].position(), a[j].position()) < 4.0 * std::sqrt(2.0) * kPi / 180.0);
    }
  }
  for (const Camera& c : sample_cameras(100, PoseRule::full_body, 3)) {
    CHECK(std::abs(c.elevation) <= kPi / 3.0);
    CHECK(c.azimuth >= 0.0);
    CHECK(c.azimuth < 2.0 * kPi);
  }
  CHECK_THROWS_AS(sample_cameras(0, PoseRule::full_body, 1), ConfigError);
}

TEST_CASE("shading gradients match finite differences at random texels") {
  const std::size_t size = 16;
  const TextureSet base = random_texture(size, 4);
  Camera cam;
  cam.resolution = 32;
  cam.elevation = 0.2;
  const GBuffer g = rasterize(make_uv_sphere(), cam);
  const EnvLight env = build_env(builtin_env_image("studio", 8, 4));

  Tape tape;
  const TextureSet tracked{tape.variable(base.diffuse), tape.variable(base.rough_metal),
                           tape.variable(base.normal)};
  tape.backward(sum(shade(tracked, g, env)));
  const std::vector<std::vector<double>> analytic{tape.grad(tracked.diffuse), tape.grad(tracked.rough_metal),
                                                  tape.grad(tracked.normal)};

  // The front half of the sphere maps to u in [0.25, 0.75]; sample texels there.
  // Only texels seen by the camera carry gradient; sample 10 of them.
  std::vector<std::size_t> seen;
  for (std::size_t t = 0; t < size * size; ++t)
    if (analytic[0][t] != 0.0) seen.push_back(t);
  std::mt19937_64 rng(12);
  std::shuffle(seen.begin(), seen.end(), rng);
  std::vector<double> got, want;
  for (int k = 0; k < 10; ++k) {
    const std::size_t texel = seen.at(static_cast<std::size_t>(k));
    for (std::size_t map = 0; map < 3; ++map) {
      const std::size_t channels = map == 1 ? 2 : 3;
      for (std::size_t c = 0; c < channels; ++c) {
        const std::size_t idx = c * size * size + texel;
        auto eval = [&](double delta) {
          std::vector<Tensor> maps{base.diffuse, base.rough_metal, base.normal};
          auto v = maps[map].to_vector();
          v[idx] += delta;
          maps[map] = Tensor(maps[map].shape(), v);
          return sum(shade({maps[0], maps[1], maps[2]}, g, env)).item();
        };
        const double h = 1e-6;
        want.push_back((eval(h) - eval(-h)) / (2 * h));
        got.push_back(analytic[map][idx]);
      }
    }
  }
  REQUIRE(seen.size() >= 10);
  CHECK(testing::relative_error(got, want) < 1e-3);
  double norm = 0.0;
  for (double v : want) norm += v * v;
  CHECK(norm > 1e-6);
}

TEST_CASE("shading is linear in light radiance") {
  const TextureSet tex = random_texture(16, 8);
  const GBuffer g = rasterize(make_uv_sphere(), Camera{});
  const EnvLight env = build_env(builtin_env_image("studio", 8, 4));
  const Tensor base = shade(tex, g, env);
  const Tensor scaled = shade(tex, g, env.scaled(3.5));
  for (std::size_t i = 0; i < base.numel(); ++i)
    CHECK(std::abs(scaled[i] - 3.5 * base[i]) <= 1e-12 * std::abs(3.5 * base[i]));
}

TEST_CASE("dielectric rough sphere under white light keeps the diffuse chroma") {
  const Rgb kd{0.6, 0.4, 0.3};
  const TextureSet tex = constant_texture(8, kd, 1.0, 0.0);
  const GBuffer g = rasterize(make_uv_sphere(), Camera{});
  const Tensor img = shade(tex, g, build_env(Image(16, 8, 3, 1.0)));
  const std::size_t n = g.pixels();
  const double kd_sum = kd[0] + kd[1] + kd[2];
  double worst = 0.0;
  for (std::size_t p = 0; p < n; ++p) {
    if (!g.mask[p]) continue;
    const double s = img[p] + img[n + p] + img[2 * n + p];
    for (std::size_t c = 0; c < 3; ++c) worst = std::max(worst, std::abs(img[c * n + p] / s - kd[c] / kd_sum));
  }
  MESSAGE("worst chroma deviation: " << worst);
  CHECK(worst < 0.02);
}

TEST_CASE("zero-coverage view renders the background and no gradient") {
  Mesh off = make_plane(1.0);
  for (Vec3& p : off.positions) p.x += 50.0;
  const GBuffer g = rasterize(off, Camera{});
  CHECK(g.covered() == 0);
  Tape tape;
  const TextureSet base = random_texture(8, 2);
  const TextureSet tracked{tape.variable(base.diffuse), tape.variable(base.rough_metal),
                           tape.variable(base.normal)};
  const Tensor img = shade(tracked, g, build_env(Image(16, 8, 3, 1.0)));
  for (double v : img.data()) CHECK(v == 0.0);
  tape.backward(sum(img));
  for (double v : tape.grad(tracked.diffuse)) CHECK(v == 0.0);
  for (double v : tape.grad(tracked.normal)) CHECK(v == 0.0);
}

TEST_CASE("non-finite shading reports the pixel") {
  TextureSet tex = constant_texture(2, {0.5, 0.5, 0.5}, 0.5, 0.0);
  tex.diffuse = Tensor::full({1, 3, 2, 2}, std::nan(""));
  try {
    shade(tex, single_pixel(), directional_light({0, 0, 1}, {1, 1, 1}));
    FAIL("expected NumericalError");
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()).find("x=0, y=0") != std::string::npos);
  }
}

TEST_CASE("texture triplets survive a png round trip within quantization") {
  const TextureSet tex = random_texture(8, 5);
  const auto dir = std::filesystem::temp_directory_path() / "paintlab_test_triplet";
  std::filesystem::remove_all(dir);
  write_texture_set(dir, tex);
  const TextureSet back = read_texture_set(dir);
  CHECK(back.rough_metal.shape() == tex.rough_metal.shape());
  for (std::size_t i = 0; i < tex.diffuse.numel(); ++i) CHECK(std::abs(back.diffuse[i] - tex.diffuse[i]) <= 0.5 / 255 + 1e-12);
  for (std::size_t i = 0; i < tex.rough_metal.numel(); ++i)
    CHECK(std::abs(back.rough_metal[i] - tex.rough_metal[i]) <= 0.5 / 255 + 1e-12);
  for (std::size_t i = 0; i < tex.normal.numel(); ++i) CHECK(std::abs(back.normal[i] - tex.normal[i]) < 0.02);
  const Image rm = read_png(dir / "rough_metal.png");
  for (std::size_t p = 0; p < 64; ++p) CHECK(rm.data[p * 3 + 2] == 0.0);

  Image env(4, 2, 3, 0.5);
  write_png(dir / "env.png", env);
  const Image lin = load_env_png(dir / "env.png");
  CHECK(std::abs(lin.data[0] - std::pow(128.0 / 255.0, 2.2)) < 1e-12);
  std::filesystem::remove_all(dir);
}
