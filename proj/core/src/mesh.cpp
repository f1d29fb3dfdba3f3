#include "paintlab/mesh.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <tuple>

#include "paintlab/error.hpp"

namespace paintlab {

void Mesh::compute_tangents() {
  std::vector<Vec3> accum(positions.size());
  for (const auto& tri : triangles) {
    const Vec3 e1 = positions[tri[1]] - positions[tri[0]];
    const Vec3 e2 = positions[tri[2]] - positions[tri[0]];
    const double du1 = uvs[tri[1]].x - uvs[tri[0]].x, dv1 = uvs[tri[1]].y - uvs[tri[0]].y;
    const double du2 = uvs[tri[2]].x - uvs[tri[0]].x, dv2 = uvs[tri[2]].y - uvs[tri[0]].y;
    const double det = du1 * dv2 - du2 * dv1;
    if (std::abs(det) < 1e-20) continue;
    const Vec3 t = (e1 * dv2 - e2 * dv1) * (1.0 / det);
    for (std::uint32_t v : tri) accum[v] += t;
  }
  tangents.resize(positions.size());
  for (std::size_t i = 0; i < positions.size(); ++i) {
    const Vec3& n = normals[i];
    Vec3 t = accum[i] - n * dot(n, accum[i]);
    if (length(t) < 1e-12) {
      // No usable UV gradient (e.g. a pole): any direction orthogonal to n.
      const Vec3 axis = std::abs(n.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
      t = axis - n * dot(n, axis);
    }
    tangents[i] = normalize(t);
  }
}

void Mesh::validate() const {
  const std::size_t n = positions.size();
  if (normals.size() != n || uvs.size() != n) {
    throw ConfigError("mesh attribute arrays differ in length");
  }
  if (!tangents.empty() && tangents.size() != n) throw ConfigError("mesh tangent count mismatch");
  for (std::size_t t = 0; t < triangles.size(); ++t) {
    for (std::uint32_t v : triangles[t]) {
      if (v >= n) {
        throw ConfigError("triangle " + std::to_string(t) + " references vertex " +
                          std::to_string(v) + " of " + std::to_string(n));
      }
      if (!std::isfinite(uvs[v].x) || !std::isfinite(uvs[v].y)) {
        throw ConfigError("triangle " + std::to_string(t) + " has a non-finite UV");
      }
    }
  }
}

Mesh make_uv_sphere(std::size_t rings, std::size_t segments, double radius) {
  if (rings < 2 || segments < 3) throw ConfigError("uv sphere needs rings >= 2, segments >= 3");
  Mesh m;
  const double pi = std::numbers::pi;
  for (std::size_t i = 0; i <= rings; ++i) {
    const double theta = pi * static_cast<double>(i) / static_cast<double>(rings);
    for (std::size_t j = 0; j <= segments; ++j) {
      const double phi = 2.0 * pi * static_cast<double>(j) / static_cast<double>(segments);
      const Vec3 n{std::sin(theta) * std::sin(phi), std::cos(theta), std::sin(theta) * std::cos(phi)};
      m.positions.push_back(n * radius);
      m.normals.push_back(n);
      m.uvs.push_back({static_cast<double>(j) / static_cast<double>(segments),
                       1.0 - static_cast<double>(i) / static_cast<double>(rings)});
    }
  }
  const auto index = [segments](std::size_t i, std::size_t j) {
    return static_cast<std::uint32_t>(i * (segments + 1) + j);
  };
  for (std::size_t i = 0; i < rings; ++i) {
    for (std::size_t j = 0; j < segments; ++j) {
      const auto a = index(i, j), b = index(i + 1, j), c = index(i + 1, j + 1), d = index(i, j + 1);
      // Pole rows collapse to one triangle per segment.
      if (i == 0) {
        m.triangles.push_back({a, b, c});
      } else if (i + 1 == rings) {
        m.triangles.push_back({a, b, d});
      } else {
        m.triangles.push_back({a, b, d});
        m.triangles.push_back({d, b, c});
      }
    }
  }
  m.compute_tangents();
  return m;
}

Mesh make_plane(double size) {
  Mesh m;
  const double h = size / 2.0;
  m.positions = {{-h, -h, 0}, {h, -h, 0}, {h, h, 0}, {-h, h, 0}};
  m.normals.assign(4, Vec3{0, 0, 1});
  m.uvs = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  m.triangles = {{0, 1, 2}, {0, 2, 3}};
  m.compute_tangents();
  return m;
}

Mesh builtin_mesh(const std::string& name) {
  if (name == "sphere") return make_uv_sphere();
  if (name == "plane") return make_plane(2.0);
  throw ConfigError("unknown builtin mesh '" + name + "' (expected sphere or plane)");
}

Mesh parse_obj(std::istream& in) {
  std::vector<Vec3> v, vn;
  std::vector<Vec2> vt;
  Mesh m;
  std::map<std::tuple<long, long, long>, std::uint32_t> remap;
  bool need_normals = false;

  auto resolve = [](long idx, std::size_t count, const char* what, std::size_t line) -> long {
    if (idx < 0) idx = static_cast<long>(count) + idx + 1;
    if (idx < 1 || idx > static_cast<long>(count)) {
      throw ConfigError(std::string("obj line ") + std::to_string(line) + ": " + what +
                        " index out of range");
    }
    return idx - 1;
  };

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag) || tag[0] == '#') continue;
    if (tag == "v") {
      Vec3 p;
      ls >> p.x >> p.y >> p.z;
      v.push_back(p);
    } else if (tag == "vt") {
      Vec2 t;
      ls >> t.x >> t.y;
      vt.push_back(t);
    } else if (tag == "vn") {
      Vec3 n;
      ls >> n.x >> n.y >> n.z;
      vn.push_back(normalize(n));
    } else if (tag == "f") {
      std::vector<std::uint32_t> corners;
      std::string token;
      while (ls >> token) {
        long iv = 0, it = 0, in_ = 0;
        std::size_t first = token.find('/');
        iv = std::stol(token.substr(0, first));
        if (first != std::string::npos) {
          std::size_t second = token.find('/', first + 1);
          const std::string ts = token.substr(first + 1, second == std::string::npos
                                                              ? std::string::npos
                                                              : second - first - 1);
          if (!ts.empty()) it = std::stol(ts);
          if (second != std::string::npos && second + 1 < token.size())
            in_ = std::stol(token.substr(second + 1));
        }
        if (it == 0) {
          throw ConfigError("obj line " + std::to_string(line_no) +
                            ": face corner without UV; meshes must ship UVs");
        }
        const long pv = resolve(iv, v.size(), "vertex", line_no);
        const long pt = resolve(it, vt.size(), "uv", line_no);
        const long pn = in_ == 0 ? -1 : resolve(in_, vn.size(), "normal", line_no);
        if (pn < 0) need_normals = true;
        const auto key = std::make_tuple(pv, pt, pn);
        auto found = remap.find(key);
        if (found == remap.end()) {
          const auto id = static_cast<std::uint32_t>(m.positions.size());
          m.positions.push_back(v[static_cast<std::size_t>(pv)]);
          m.uvs.push_back(vt[static_cast<std::size_t>(pt)]);
          m.normals.push_back(pn < 0 ? Vec3{} : vn[static_cast<std::size_t>(pn)]);
          found = remap.emplace(key, id).first;
        }
        corners.push_back(found->second);
      }
      if (corners.size() < 3) throw ConfigError("obj line " + std::to_string(line_no) + ": face with < 3 corners");
      for (std::size_t k = 1; k + 1 < corners.size(); ++k)
        m.triangles.push_back({corners[0], corners[k], corners[k + 1]});
    }
  }
  if (need_normals) {
    std::vector<Vec3> accum(m.positions.size());
    for (const auto& tri : m.triangles) {
      const Vec3 fn = cross(m.positions[tri[1]] - m.positions[tri[0]],
                            m.positions[tri[2]] - m.positions[tri[0]]);
      for (std::uint32_t k : tri) accum[k] += fn;
    }
    for (std::size_t i = 0; i < m.normals.size(); ++i)
      if (length(m.normals[i]) == 0.0) m.normals[i] = normalize(accum[i]);
  }
  m.compute_tangents();
  m.validate();
  return m;
}

Mesh load_obj(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open mesh file " + path.string());
  return parse_obj(in);
}

}  // namespace paintlab
