#pragma once

#include <Eigen/Dense>
#include <array>
#include <map>
#include <vector>

#include "cbem/errors.hpp"
#include "cbem/mesh.hpp"

namespace cbem {

/// One RWG basis function, attached to an interior mesh edge.
/// f_n(r) = +l/(2A+) (r - p+) on the plus triangle,
///          -l/(2A-) (r - p-) on the minus triangle,
/// div f_n = +l/A+ resp. -l/A-.
struct RwgEdge {
  int v0, v1;          // shared edge endpoints (v0 < v1 not guaranteed)
  int tri_plus, tri_minus;
  int opp_plus, opp_minus;  // free vertex index on each triangle
  double length;
};

/// Div-conforming edge basis over a closed mesh (one basis per edge).
class RwgBasisSet {
 public:
  struct TriEdgeRef {
    int edge;     // global edge index
    double sign;  // +1 on the plus triangle, -1 on the minus triangle
    int opp;      // free vertex index
  };

  const TriangleMesh* mesh = nullptr;
  std::vector<RwgEdge> edges;
  std::vector<std::array<TriEdgeRef, 3>> tri_edges;  // per triangle

  explicit RwgBasisSet(const TriangleMesh& m) : mesh(&m) {
    const int nt = m.num_triangles();
    std::map<std::pair<int, int>, int> edge_id;
    tri_edges.resize(nt);
    for (int t = 0; t < nt; ++t) {
      for (int k = 0; k < 3; ++k) {
        int a = m.triangles[t][k], b = m.triangles[t][(k + 1) % 3];
        int opp = m.triangles[t][(k + 2) % 3];
        auto key = std::make_pair(std::min(a, b), std::max(a, b));
        auto it = edge_id.find(key);
        if (it == edge_id.end()) {
          RwgEdge e;
          e.v0 = a;
          e.v1 = b;
          e.tri_plus = t;
          e.tri_minus = -1;
          e.opp_plus = opp;
          e.opp_minus = -1;
          e.length = (m.vertices[a] - m.vertices[b]).norm();
          edges.push_back(e);
          it = edge_id.insert({key, static_cast<int>(edges.size()) - 1}).first;
          tri_edges[t][k] = {it->second, +1.0, opp};
        } else {
          RwgEdge& e = edges[it->second];
          if (e.tri_minus != -1) throw NonManifold("edge used three times");
          e.tri_minus = t;
          e.opp_minus = opp;
          tri_edges[t][k] = {it->second, -1.0, opp};
        }
      }
    }
    for (const auto& e : edges)
      if (e.tri_minus == -1)
        throw NonManifold("open edge; RWG set requires a closed mesh");
  }

  int size() const { return static_cast<int>(edges.size()); }

  /// sign * l / (2A) on the given triangle; 0 if the edge does not live there.
  double coefficient(int n, int tri) const {
    const RwgEdge& e = edges[n];
    if (tri == e.tri_plus) return e.length / (2.0 * mesh->areas[tri]);
    if (tri == e.tri_minus) return -e.length / (2.0 * mesh->areas[tri]);
    return 0.0;
  }

  Vec3 value(int n, int tri, const Vec3& r) const {
    const RwgEdge& e = edges[n];
    if (tri == e.tri_plus)
      return coefficient(n, tri) * (r - mesh->vertices[e.opp_plus]);
    if (tri == e.tri_minus)
      return coefficient(n, tri) * (r - mesh->vertices[e.opp_minus]);
    return Vec3::Zero();
  }

  double divergence(int n, int tri) const { return 2.0 * coefficient(n, tri); }
};

/// Disjoint, exhaustive assignment of RWG edges to CBFM cells.
struct CellPartition {
  std::vector<std::vector<int>> cells;  // edge indices per cell, ascending
  std::vector<int> cell_of;             // per edge

  int num_cells() const { return static_cast<int>(cells.size()); }
};

/// One cell per closed connected component.
inline CellPartition partition_per_component(const RwgBasisSet& basis,
                                             const TriangleMesh& mesh) {
  CellPartition p;
  p.cells.resize(mesh.num_components);
  p.cell_of.resize(basis.size());
  for (int n = 0; n < basis.size(); ++n) {
    int c = mesh.component_of[basis.edges[n].tri_plus];
    p.cells[c].push_back(n);
    p.cell_of[n] = c;
  }
  return p;
}

/// Cubic lattice cells of the given side; each edge is assigned by its
/// midpoint, so a basis function is never split. Empty cells are dropped.
/// The default origin is the mesh bounding-box corner.
inline CellPartition partition_lattice(const RwgBasisSet& basis,
                                       const TriangleMesh& mesh, double side,
                                       const Vec3* origin_opt = nullptr) {
  if (!(side > 0.0)) throw InvalidParam("cell side must be positive");
  // nudge so edges exactly on the corner stay in the first cell
  Vec3 origin = origin_opt ? *origin_opt
                           : (mesh.bbox_min() - Vec3::Constant(1e-9 * side));
  std::map<std::array<long, 3>, std::vector<int>> buckets;
  for (int n = 0; n < basis.size(); ++n) {
    const RwgEdge& e = basis.edges[n];
    Vec3 mid = 0.5 * (mesh.vertices[e.v0] + mesh.vertices[e.v1]);
    Vec3 q = (mid - origin) / side;
    buckets[{static_cast<long>(std::floor(q.x())),
             static_cast<long>(std::floor(q.y())),
             static_cast<long>(std::floor(q.z()))}]
        .push_back(n);
  }
  CellPartition p;
  p.cell_of.resize(basis.size());
  for (auto& [key, edges] : buckets) {  // map order fixes cell numbering
    int c = p.num_cells();
    for (int n : edges) p.cell_of[n] = c;
    p.cells.push_back(std::move(edges));
  }
  return p;
}

}  // namespace cbem
