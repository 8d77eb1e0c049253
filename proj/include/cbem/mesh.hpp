#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <functional>
#include <cstdint>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cbem/errors.hpp"

namespace cbem {

using Vec3 = Eigen::Vector3d;

/// Closed, watertight, consistently oriented triangle mesh.
/// Lengths are in units of the exterior wavelength.
class TriangleMesh {
 public:
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;

  // derived, filled by finalize()
  std::vector<Vec3> normals;
  std::vector<double> areas;
  std::vector<Vec3> centroids;
  std::vector<int> component_of;  // per triangle
  int num_components = 0;

  int num_triangles() const { return static_cast<int>(triangles.size()); }

  Vec3 vertex(int t, int local) const { return vertices[triangles[t][local]]; }

  /// Validates manifoldness, orients each component outward, and caches
  /// per-triangle data. Throws NonManifold / DegenerateTriangle.
  void finalize() {
    check_indices();
    build_components_and_check_manifold();
    orient_outward();
    cache_triangle_data();
  }

  double signed_volume(int component = -1) const {
    double v = 0.0;
    for (int t = 0; t < num_triangles(); ++t) {
      if (component >= 0 && component_of[t] != component) continue;
      const Vec3& a = vertices[triangles[t][0]];
      const Vec3& b = vertices[triangles[t][1]];
      const Vec3& c = vertices[triangles[t][2]];
      v += a.dot(b.cross(c)) / 6.0;
    }
    return v;
  }

  Vec3 bbox_min() const {
    Vec3 m = vertices.at(0);
    for (const auto& v : vertices) m = m.cwiseMin(v);
    return m;
  }
  Vec3 bbox_max() const {
    Vec3 m = vertices.at(0);
    for (const auto& v : vertices) m = m.cwiseMax(v);
    return m;
  }

 private:
  void check_indices() const {
    const int nv = static_cast<int>(vertices.size());
    if (triangles.empty()) throw ParseError("mesh has no triangles");
    for (const auto& t : triangles)
      for (int k = 0; k < 3; ++k)
        if (t[k] < 0 || t[k] >= nv)
          throw ParseError("triangle vertex index out of range");
  }

  void build_components_and_check_manifold() {
    const int nt = num_triangles();
    // undirected edge -> incident triangles
    std::map<std::pair<int, int>, std::vector<int>> edge_tris;
    std::map<std::pair<int, int>, int> directed_count;
    for (int t = 0; t < nt; ++t) {
      for (int k = 0; k < 3; ++k) {
        int a = triangles[t][k], b = triangles[t][(k + 1) % 3];
        if (a == b) throw DegenerateTriangle("repeated vertex in triangle");
        edge_tris[{std::min(a, b), std::max(a, b)}].push_back(t);
        directed_count[{a, b}]++;
      }
    }
    for (const auto& [e, ts] : edge_tris)
      if (ts.size() != 2)
        throw NonManifold("edge with " + std::to_string(ts.size()) +
                          " incident triangles");
    for (const auto& [e, c] : directed_count)
      if (c != 1)
        throw NonManifold("inconsistent triangle winding at a shared edge");

    // union-find over triangles sharing edges
    std::vector<int> parent(nt);
    for (int i = 0; i < nt; ++i) parent[i] = i;
    std::function<int(int)> find = [&](int x) {
      while (parent[x] != x) x = parent[x] = parent[parent[x]];
      return x;
    };
    for (const auto& [e, ts] : edge_tris) {
      int a = find(ts[0]), b = find(ts[1]);
      if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
    component_of.assign(nt, -1);
    std::map<int, int> label;
    for (int t = 0; t < nt; ++t) {
      int r = find(t);
      auto [it, fresh] = label.insert({r, static_cast<int>(label.size())});
      component_of[t] = it->second;
    }
    num_components = static_cast<int>(label.size());
  }

  void orient_outward() {
    for (int c = 0; c < num_components; ++c) {
      if (signed_volume(c) < 0.0) {
        for (int t = 0; t < num_triangles(); ++t)
          if (component_of[t] == c) std::swap(triangles[t][1], triangles[t][2]);
      }
    }
  }

  void cache_triangle_data() {
    const int nt = num_triangles();
    normals.resize(nt);
    areas.resize(nt);
    centroids.resize(nt);
    for (int t = 0; t < nt; ++t) {
      const Vec3& a = vertices[triangles[t][0]];
      const Vec3& b = vertices[triangles[t][1]];
      const Vec3& c = vertices[triangles[t][2]];
      Vec3 n = (b - a).cross(c - a);
      double n2 = n.norm();
      double scale = std::max({(b - a).norm(), (c - a).norm(), (c - b).norm()});
      if (!(n2 > 1e-14 * scale * scale))
        throw DegenerateTriangle("triangle with zero area");
      normals[t] = n / n2;
      areas[t] = 0.5 * n2;
      centroids[t] = (a + b + c) / 3.0;
    }
  }
};

// ---------------------------------------------------------------- file I/O

inline TriangleMesh load_mesh_obj(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  TriangleMesh m;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::string tag;
    ss >> tag;
    if (tag == "v") {
      Vec3 v;
      if (!(ss >> v.x() >> v.y() >> v.z())) throw ParseError("bad vertex line");
      m.vertices.push_back(v);
    } else if (tag == "f") {
      std::vector<int> idx;
      std::string tok;
      while (ss >> tok) {
        // "i", "i/j", "i/j/k" forms; only the vertex index is used
        idx.push_back(std::stoi(tok.substr(0, tok.find('/'))));
      }
      if (idx.size() != 3) throw ParseError("non-triangular face in OBJ");
      m.triangles.push_back({idx[0] - 1, idx[1] - 1, idx[2] - 1});
    }
  }
  m.finalize();
  return m;
}

inline TriangleMesh load_mesh_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ParseError(std::string("JSON parse failure: ") + e.what());
  }
  TriangleMesh m;
  try {
    for (const auto& v : j.at("vertices"))
      m.vertices.push_back(Vec3(v.at(0).get<double>(), v.at(1).get<double>(),
                                v.at(2).get<double>()));
    for (const auto& t : j.at("triangles"))
      m.triangles.push_back(
          {t.at(0).get<int>(), t.at(1).get<int>(), t.at(2).get<int>()});
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad mesh JSON: ") + e.what());
  }
  m.finalize();
  return m;
}

inline TriangleMesh load_mesh(const std::string& path,
                              const std::string& format) {
  if (format == "obj") return load_mesh_obj(path);
  if (format == "json") return load_mesh_json(path);
  throw InvalidParam("unknown mesh format: " + format);
}

inline nlohmann::json mesh_to_json(const TriangleMesh& m) {
  nlohmann::json j;
  j["vertices"] = nlohmann::json::array();
  for (const auto& v : m.vertices)
    j["vertices"].push_back({v.x(), v.y(), v.z()});
  j["triangles"] = nlohmann::json::array();
  for (const auto& t : m.triangles) j["triangles"].push_back({t[0], t[1], t[2]});
  return j;
}

inline void save_mesh_json(const TriangleMesh& m, const std::string& path) {
  std::ofstream out(path);
  out << mesh_to_json(m).dump(1) << "\n";
}

// -------------------------------------------------------------- generators

/// Icosahedron subdivided `subdivisions` times, vertices projected to the
/// sphere. 320 faces (960 unknowns) at subdivisions = 2.
inline TriangleMesh generate_sphere(double diameter, int subdivisions,
                                    const Vec3& center = Vec3::Zero()) {
  if (!(diameter > 0.0)) throw InvalidParam("sphere diameter must be positive");
  if (subdivisions < 0) throw InvalidParam("subdivisions must be >= 0");
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> verts = {
      {-1, phi, 0}, {1, phi, 0}, {-1, -phi, 0}, {1, -phi, 0},
      {0, -1, phi}, {0, 1, phi}, {0, -1, -phi}, {0, 1, -phi},
      {phi, 0, -1}, {phi, 0, 1}, {-phi, 0, -1}, {-phi, 0, 1}};
  std::vector<std::array<int, 3>> faces = {
      {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
      {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
      {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
      {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  const double r = diameter / 2.0;
  for (auto& v : verts) v = v.normalized();
  for (int level = 0; level < subdivisions; ++level) {
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
      auto key = std::make_pair(std::min(a, b), std::max(a, b));
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      Vec3 p = (verts[a] + verts[b]).normalized();
      verts.push_back(p);
      int id = static_cast<int>(verts.size()) - 1;
      midpoint[key] = id;
      return id;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(faces.size() * 4);
    for (const auto& f : faces) {
      int ab = mid(f[0], f[1]), bc = mid(f[1], f[2]), ca = mid(f[2], f[0]);
      next.push_back({f[0], ab, ca});
      next.push_back({f[1], bc, ab});
      next.push_back({f[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    faces = std::move(next);
  }
  TriangleMesh m;
  for (const auto& v : verts) m.vertices.push_back(center + r * v);
  m.triangles = faces;
  m.finalize();
  return m;
}

/// Axis-aligned cube of given side centered at `center`, each face an
/// n x n grid of quads split into triangles.
inline TriangleMesh generate_cube(double side, int n,
                                  const Vec3& center = Vec3::Zero()) {
  if (!(side > 0.0)) throw InvalidParam("cube side must be positive");
  if (n < 1) throw InvalidParam("cube divisions must be >= 1");
  TriangleMesh m;
  std::map<std::array<int, 3>, int> vid;  // lattice coords 0..n
  auto vertex = [&](int i, int j, int k) {
    auto it = vid.find({i, j, k});
    if (it != vid.end()) return it->second;
    Vec3 p = center + side * (Vec3(i, j, k) / double(n) -
                              Vec3(0.5, 0.5, 0.5));
    m.vertices.push_back(p);
    int id = static_cast<int>(m.vertices.size()) - 1;
    vid[{i, j, k}] = id;
    return id;
  };
  // face(axis, at): axis-normal face with lattice coordinate `at` in {0,n};
  // (u,v) are the other two axes.
  auto face = [&](int axis, int at) {
    int ua = (axis + 1) % 3, va = (axis + 2) % 3;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        auto at_uv = [&](int u, int v) {
          std::array<int, 3> c{};
          c[axis] = at;
          c[ua] = u;
          c[va] = v;
          return vertex(c[0], c[1], c[2]);
        };
        int a = at_uv(i, j), b = at_uv(i + 1, j), c = at_uv(i + 1, j + 1),
            d = at_uv(i, j + 1);
        if (at == 0) {  // flip so windings agree across the whole surface
          m.triangles.push_back({a, c, b});
          m.triangles.push_back({a, d, c});
        } else {
          m.triangles.push_back({a, b, c});
          m.triangles.push_back({a, c, d});
        }
      }
    }
  };
  for (int axis = 0; axis < 3; ++axis) {
    face(axis, 0);
    face(axis, n);
  }
  m.finalize();  // winding fixed by the outward orientation pass
  return m;
}

/// z-axis cylinder with fan caps, centered at `center`.
inline TriangleMesh generate_cylinder(double radius, double height, int n_circ,
                                      int n_axial,
                                      const Vec3& center = Vec3::Zero()) {
  if (!(radius > 0.0) || !(height > 0.0))
    throw InvalidParam("cylinder radius/height must be positive");
  if (n_circ < 3 || n_axial < 1)
    throw InvalidParam("cylinder needs n_circ >= 3, n_axial >= 1");
  TriangleMesh m;
  auto ring_id = [&](int i, int j) { return j * n_circ + (i % n_circ); };
  for (int j = 0; j <= n_axial; ++j) {
    double z = -height / 2.0 + height * j / n_axial;
    for (int i = 0; i < n_circ; ++i) {
      double a = 2.0 * std::numbers::pi * i / n_circ;
      m.vertices.push_back(center +
                           Vec3(radius * std::cos(a), radius * std::sin(a), z));
    }
  }
  int bottom = static_cast<int>(m.vertices.size());
  m.vertices.push_back(center + Vec3(0, 0, -height / 2.0));
  int top = static_cast<int>(m.vertices.size());
  m.vertices.push_back(center + Vec3(0, 0, height / 2.0));
  for (int j = 0; j < n_axial; ++j) {
    for (int i = 0; i < n_circ; ++i) {
      int a = ring_id(i, j), b = ring_id(i + 1, j), c = ring_id(i + 1, j + 1),
          d = ring_id(i, j + 1);
      m.triangles.push_back({a, b, c});
      m.triangles.push_back({a, c, d});
    }
  }
  for (int i = 0; i < n_circ; ++i) {
    m.triangles.push_back({bottom, ring_id(i + 1, 0), ring_id(i, 0)});
    m.triangles.push_back({top, ring_id(i, n_axial), ring_id(i + 1, n_axial)});
  }
  m.finalize();
  return m;
}

/// Replicates `unit` on a regular nx x ny x nz lattice with the given
/// center-to-center spacing. A 1x1x1 array is the unit itself.
inline TriangleMesh replicate_array(const TriangleMesh& unit, int nx, int ny,
                                    int nz, double spacing) {
  if (nx < 1 || ny < 1 || nz < 1)
    throw InvalidParam("array counts must be >= 1");
  if (!(spacing > 0.0) && nx * ny * nz > 1)
    throw InvalidParam("array spacing must be positive");
  TriangleMesh m;
  for (int ix = 0; ix < nx; ++ix)
    for (int iy = 0; iy < ny; ++iy)
      for (int iz = 0; iz < nz; ++iz) {
        Vec3 off = spacing * Vec3(ix, iy, iz);
        int base = static_cast<int>(m.vertices.size());
        for (const auto& v : unit.vertices) m.vertices.push_back(v + off);
        for (const auto& t : unit.triangles)
          m.triangles.push_back({t[0] + base, t[1] + base, t[2] + base});
      }
  m.finalize();
  return m;
}

}  // namespace cbem
