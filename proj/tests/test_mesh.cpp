#include <doctest.h>

#include <cbem/errors.hpp>
#include <cbem/mesh.hpp>
#include <cbem/rwg.hpp>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <set>

using namespace cbem;

namespace {

TriangleMesh tetrahedron() {
  TriangleMesh m;
  m.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  m.triangles = {{0, 2, 1}, {0, 1, 3}, {0, 3, 2}, {1, 2, 3}};
  m.finalize();
  return m;
}

int count_edges(const TriangleMesh& m) {
  std::set<std::pair<int, int>> e;
  for (const auto& t : m.triangles)
    for (int k = 0; k < 3; ++k) {
      int a = t[k], b = t[(k + 1) % 3];
      e.insert({std::min(a, b), std::max(a, b)});
    }
  return static_cast<int>(e.size());
}

double total_area(const TriangleMesh& m) {
  double s = 0.0;
  for (double a : m.areas) s += a;
  return s;
}

}  // namespace

TEST_CASE("tetrahedron basics") {
  TriangleMesh m = tetrahedron();
  CHECK(m.num_triangles() == 4);
  CHECK(m.num_components == 1);
  CHECK(m.signed_volume() == doctest::Approx(1.0 / 6.0).epsilon(1e-14));
  // outward normals: (centroid - interior point) . normal > 0
  Vec3 inside(0.2, 0.2, 0.2);
  for (int t = 0; t < 4; ++t)
    CHECK((m.centroids[t] - inside).dot(m.normals[t]) > 0.0);
}

TEST_CASE("finalize flips an inward-oriented component") {
  TriangleMesh m;
  m.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  // all four faces wound inward
  m.triangles = {{0, 1, 2}, {0, 3, 1}, {0, 2, 3}, {1, 3, 2}};
  m.finalize();
  CHECK(m.signed_volume() > 0.0);
}

TEST_CASE("manifold violations are rejected") {
  TriangleMesh open_mesh;
  open_mesh.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  open_mesh.triangles = {{0, 1, 2}};
  CHECK_THROWS_AS(open_mesh.finalize(), NonManifold);

  TriangleMesh bad_index;
  bad_index.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  bad_index.triangles = {{0, 1, 7}};
  CHECK_THROWS_AS(bad_index.finalize(), ParseError);

  TriangleMesh degenerate;
  degenerate.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  degenerate.triangles = {{0, 1, 1}};
  CHECK_THROWS_AS(degenerate.finalize(), DegenerateTriangle);
}

TEST_CASE("icosphere counts and measures") {
  TriangleMesh m = generate_sphere(1.0 / 3.0, 2);
  CHECK(m.num_triangles() == 320);
  CHECK(count_edges(m) == 480);
  CHECK(m.num_components == 1);
  const double r = 1.0 / 6.0;
  double vol = 4.0 / 3.0 * std::numbers::pi * r * r * r;
  double area = 4.0 * std::numbers::pi * r * r;
  // inscribed polyhedron: slightly below the smooth values
  CHECK(m.signed_volume() < vol);
  CHECK(m.signed_volume() == doctest::Approx(vol).epsilon(0.02));
  CHECK(total_area(m) < area);
  CHECK(total_area(m) == doctest::Approx(area).epsilon(0.02));
  for (const auto& v : m.vertices)
    CHECK(v.norm() == doctest::Approx(r).epsilon(1e-13));
}

TEST_CASE("cube counts and exact measures") {
  TriangleMesh m = generate_cube(0.5, 6, Vec3(1.0, 2.0, 3.0));
  CHECK(m.num_triangles() == 432);
  CHECK(count_edges(m) == 648);
  CHECK(m.signed_volume() == doctest::Approx(0.125).epsilon(1e-13));
  CHECK(total_area(m) == doctest::Approx(6 * 0.25).epsilon(1e-13));
  CHECK((m.bbox_min() - Vec3(0.75, 1.75, 2.75)).norm() < 1e-14);
  CHECK((m.bbox_max() - Vec3(1.25, 2.25, 3.25)).norm() < 1e-14);
}

TEST_CASE("cylinder counts and measure convergence") {
  TriangleMesh m = generate_cylinder(0.8, 3.0, 16, 14);
  CHECK(m.num_triangles() == 480);
  CHECK(count_edges(m) == 720);
  double vol = std::numbers::pi * 0.8 * 0.8 * 3.0;
  CHECK(m.signed_volume() < vol);
  CHECK(m.signed_volume() == doctest::Approx(vol).epsilon(0.03));
}

TEST_CASE("replicated array keeps components separate") {
  TriangleMesh unit = generate_sphere(1.0 / 3.0, 1);
  TriangleMesh arr = replicate_array(unit, 2, 2, 1, 0.5);
  CHECK(arr.num_triangles() == 4 * unit.num_triangles());
  CHECK(arr.num_components == 4);
  CHECK(arr.signed_volume() ==
        doctest::Approx(4.0 * unit.signed_volume()).epsilon(1e-12));
}

TEST_CASE("OBJ load, including slash-forms") {
  const char* path = "tmp_mesh_test.obj";
  {
    std::ofstream f(path);
    f << "# comment\n";
    f << "v 0 0 0\nv 1 0 0\nv 0 1 0\nv 0 0 1\n";
    f << "f 1/1 3/2 2/3\nf 1/1/1 2 4\nf 1 4 3\nf 2/2 3 4\n";
  }
  TriangleMesh m = load_mesh_obj(path);
  CHECK(m.num_triangles() == 4);
  CHECK(m.signed_volume() == doctest::Approx(1.0 / 6.0));
  std::remove(path);
  CHECK_THROWS_AS(load_mesh_obj("does_not_exist.obj"), ParseError);
}

TEST_CASE("JSON roundtrip") {
  TriangleMesh m = tetrahedron();
  const char* path = "tmp_mesh_test.json";
  save_mesh_json(m, path);
  TriangleMesh back = load_mesh_json(path);
  CHECK(back.num_triangles() == m.num_triangles());
  CHECK(back.signed_volume() == doctest::Approx(m.signed_volume()));
  std::remove(path);
  CHECK_THROWS_AS(load_mesh("x", "stl"), InvalidParam);
}

TEST_CASE("RWG edges on the tetrahedron") {
  TriangleMesh m = tetrahedron();
  RwgBasisSet basis(m);
  CHECK(basis.size() == 6);
  for (const auto& e : basis.edges) {
    CHECK(e.tri_minus >= 0);
    CHECK(e.length > 0.0);
  }
  // each triangle touches exactly its three edges, consistent signs
  for (int t = 0; t < m.num_triangles(); ++t)
    for (const auto& ref : basis.tri_edges[t]) {
      const auto& e = basis.edges[ref.edge];
      CHECK(((ref.sign > 0 && e.tri_plus == t) ||
             (ref.sign < 0 && e.tri_minus == t)));
    }
}

TEST_CASE("RWG normal continuity across each edge") {
  // the component of f_n normal to the shared edge is continuous: evaluate at
  // the edge midpoint from both sides
  TriangleMesh m = generate_sphere(0.5, 1);
  RwgBasisSet basis(m);
  for (int n = 0; n < basis.size(); n += 7) {
    const auto& e = basis.edges[n];
    Vec3 mid = 0.5 * (m.vertices[e.v0] + m.vertices[e.v1]);
    Vec3 fp = basis.value(n, e.tri_plus, mid);
    Vec3 fm = basis.value(n, e.tri_minus, mid);
    Vec3 t = (m.vertices[e.v1] - m.vertices[e.v0]).normalized();
    // in-plane normal components agree (project out the edge direction)
    CHECK((fp - fp.dot(t) * t).norm() ==
          doctest::Approx((fm - fm.dot(t) * t).norm()).epsilon(1e-10));
    // and both equal l/(2A) * distance-from-opposite-vertex scaling
    CHECK(basis.divergence(n, e.tri_plus) ==
          doctest::Approx(2.0 * basis.coefficient(n, e.tri_plus)));
  }
}

TEST_CASE("per-component partition") {
  TriangleMesh unit = generate_sphere(1.0 / 3.0, 1);
  TriangleMesh arr = replicate_array(unit, 2, 1, 1, 0.5);
  RwgBasisSet basis(arr);
  CellPartition p = partition_per_component(basis, arr);
  CHECK(p.num_cells() == 2);
  CHECK(p.cells[0].size() == p.cells[1].size());
  int covered = 0;
  for (const auto& c : p.cells) covered += static_cast<int>(c.size());
  CHECK(covered == basis.size());
  for (int n = 0; n < basis.size(); ++n) {
    bool found = false;
    for (int c : p.cells[p.cell_of[n]])
      if (c == n) found = true;
    CHECK(found);
  }
}

TEST_CASE("lattice partition is disjoint and exhaustive") {
  TriangleMesh m = generate_cylinder(0.8, 3.0, 12, 8);
  RwgBasisSet basis(m);
  CellPartition p = partition_lattice(basis, m, 1.25);
  CHECK(p.num_cells() >= 4);
  std::set<int> seen;
  for (const auto& cell : p.cells) {
    CHECK(!cell.empty());
    for (int n : cell) CHECK(seen.insert(n).second);
  }
  CHECK(static_cast<int>(seen.size()) == basis.size());
  // every edge midpoint lies inside its cell's lattice box
  Vec3 origin = m.bbox_min() - Vec3::Constant(1e-9 * 1.25);
  for (int n = 0; n < basis.size(); ++n) {
    const auto& e = basis.edges[n];
    Vec3 mid = 0.5 * (m.vertices[e.v0] + m.vertices[e.v1]);
    (void)mid;
    CHECK(p.cell_of[n] >= 0);
    CHECK(p.cell_of[n] < p.num_cells());
  }
  CHECK_THROWS_AS(partition_lattice(basis, m, 0.0), InvalidParam);
}
