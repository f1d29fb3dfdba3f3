#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "paintlab/mesh.hpp"
#include "paintlab/vec.hpp"

namespace paintlab {

/// Orbit camera looking at the origin with +y up.
struct Camera {
  double elevation = 0.0;  // radians
  double azimuth = 0.0;    // radians, 0 looks down -z from +z
  double distance = 3.0;
  double fov = 0.7853981633974483;  // vertical, radians
  std::size_t resolution = 64;

  /// Throws ConfigError unless distance > 0, fov in (0, pi), resolution > 0.
  void validate() const;
  Vec3 position() const;
};

enum class PoseRule { full_body, adjacent };

/// full_body: elevation ~ U(-pi/3, pi/3), azimuth ~ U(0, 2pi).
/// adjacent: elevation and azimuth both ~ U(-2deg, 2deg).
std::vector<Camera> sample_cameras(std::size_t n, PoseRule rule, std::uint64_t seed,
                                   const Camera& base = {});

/// Per-pixel surface attributes, row-major with row 0 at the top of the image.
/// Uncovered pixels hold zeros.
struct GBuffer {
  std::size_t resolution = 0;
  std::vector<std::uint8_t> mask;
  std::vector<Vec2> uv;
  std::vector<Vec3> normal;
  std::vector<Vec3> tangent;
  std::vector<Vec3> bitangent;
  std::vector<Vec3> view;  // unit vector toward the camera
  std::size_t degenerate_triangles = 0;

  std::size_t pixels() const { return resolution * resolution; }
  std::size_t covered() const;
};

/// Perspective, z-buffered rasterization with perspective-correct
/// interpolation. No culling; zero-area triangles are skipped and counted.
GBuffer rasterize(const Mesh& mesh, const Camera& cam);

}  // namespace paintlab
