#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <string>
#include <vector>

#include "paintlab/vec.hpp"

namespace paintlab {

/// Indexed triangle mesh with per-vertex position, normal, UV and tangent.
/// UV seams are represented by duplicated vertices.
struct Mesh {
  std::vector<Vec3> positions;
  std::vector<Vec3> normals;
  std::vector<Vec2> uvs;
  std::vector<Vec3> tangents;
  std::vector<std::array<std::uint32_t, 3>> triangles;

  /// Per-vertex tangents from UV derivatives, Gram-Schmidt orthonormalized
  /// against the vertex normal.
  void compute_tangents();

  /// Throws ConfigError on out-of-range indices, mismatched attribute
  /// arrays, or non-finite UVs.
  void validate() const;
};

/// Latitude-longitude sphere. u follows azimuth, v runs from the south pole
/// (0) to the north pole (1).
Mesh make_uv_sphere(std::size_t rings = 32, std::size_t segments = 64, double radius = 1.0);

/// Square of side `size` in the z = 0 plane, facing +z, UVs covering [0,1]^2.
Mesh make_plane(double size = 1.0);

/// "sphere" or "plane".
Mesh builtin_mesh(const std::string& name);

/// Wavefront OBJ subset: v, vt, vn and polygonal f records (fan-triangulated).
/// Missing normals are computed from faces; missing UVs are an error.
Mesh parse_obj(std::istream& in);
Mesh load_obj(const std::filesystem::path& path);

}  // namespace paintlab
