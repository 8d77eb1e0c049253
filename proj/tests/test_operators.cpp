#include <doctest.h>

#include <cbem/em.hpp>
#include <cbem/gmres.hpp>
#include <cbem/mesh.hpp>
#include <cbem/operators.hpp>
#include <cbem/rwg.hpp>
#include <random>

#include "support/oracles.hpp"

using namespace cbem;
using Eigen::MatrixXcd;
using Eigen::VectorXcd;

namespace {

// independent nested-quadrature evaluation of one [T] / [K] entry
// (valid for separated supports only)
cplx naive_T(const TriangleMesh& m, const RwgBasisSet& basis, cplx k, int em,
             int en, int depth) {
  cplx total = 0.0;
  const auto& ea = basis.edges[em];
  const auto& eb = basis.edges[en];
  for (int ta : {ea.tri_plus, ea.tri_minus})
    for (int tb : {eb.tri_plus, eb.tri_minus}) {
      auto outer = [&](const Vec3& r) {
        return oracle::integrate_triangle(
            m.vertex(tb, 0), m.vertex(tb, 1), m.vertex(tb, 2),
            [&](const Vec3& rp) {
              cplx g = green(k, r, rp);
              cplx vec = basis.value(em, ta, r).dot(basis.value(en, tb, rp));
              cplx scal = basis.divergence(em, ta) * basis.divergence(en, tb);
              return J1C * k * vec * g - (J1C / k) * scal * g;
            },
            depth);
      };
      total += oracle::integrate_triangle(m.vertex(ta, 0), m.vertex(ta, 1),
                                          m.vertex(ta, 2), outer, depth);
    }
  return total;
}

cplx naive_K(const TriangleMesh& m, const RwgBasisSet& basis, cplx k, int em,
             int en, int depth) {
  cplx total = 0.0;
  const auto& ea = basis.edges[em];
  const auto& eb = basis.edges[en];
  for (int ta : {ea.tri_plus, ea.tri_minus})
    for (int tb : {eb.tri_plus, eb.tri_minus}) {
      auto outer = [&](const Vec3& r) {
        return oracle::integrate_triangle(
            m.vertex(tb, 0), m.vertex(tb, 1), m.vertex(tb, 2),
            [&](const Vec3& rp) {
              Vec3 D = r - rp;
              double R = D.norm();
              cplx gg = -(1.0 + J1C * k * R) * std::exp(-J1C * k * R) /
                        (4.0 * std::numbers::pi * R * R * R);
              Vec3 cross = D.cross(basis.value(en, tb, rp));
              return gg * cplx(basis.value(em, ta, r).dot(cross));
            },
            depth);
      };
      total += oracle::integrate_triangle(m.vertex(ta, 0), m.vertex(ta, 1),
                                          m.vertex(ta, 2), outer, depth);
    }
  return total;
}

}  // namespace

TEST_CASE("separated entries match brute-force nested quadrature") {
  TriangleMesh unit = generate_sphere(1.0 / 3.0, 0);
  TriangleMesh two = replicate_array(unit, 2, 1, 1, 2.0);
  RwgBasisSet basis(two);
  REQUIRE(basis.size() == 60);
  cplx k = Medium(3.0, 1.0).k();
  OperatorMatrices op = assemble_operators(two, basis, k);
  AssemblyOptions fine;
  fine.regular_points = 12;
  OperatorMatrices op12 = assemble_operators(two, basis, k, fine);

  CellPartition part = partition_per_component(basis, two);
  int em = part.cells[0][3];
  for (int en : {part.cells[1][0], part.cells[1][17]}) {
    CAPTURE(em);
    CAPTURE(en);
    cplx tref = naive_T(two, basis, k, em, en, 2);
    cplx kref = naive_K(two, basis, k, em, en, 2);
    // default rule: quadrature-limited accuracy on the oscillatory kernel
    CHECK(std::abs(op.T(em, en) - tref) < 2e-3 * std::abs(tref));
    CHECK(std::abs(op.K(em, en) - kref) < 2e-2 * std::abs(kref));
    // refined rule converges toward the brute-force value
    CHECK(std::abs(op12.T(em, en) - tref) < 1e-4 * std::abs(tref));
    CHECK(std::abs(op12.K(em, en) - kref) < 1e-3 * std::abs(kref));
    CHECK(std::abs(op12.T(em, en) - tref) <
          0.5 * std::abs(op.T(em, en) - tref));
  }
}

TEST_CASE("assembled operators are exactly symmetric") {
  TriangleMesh m = generate_sphere(1.0 / 3.0, 1);
  RwgBasisSet basis(m);
  OperatorMatrices op = assemble_operators(m, basis, Medium(2.0, 1.0).k());
  CHECK((op.T - op.T.transpose()).norm() == 0.0);
  CHECK((op.K - op.K.transpose()).norm() == 0.0);
  CHECK(op.T.allFinite());
  CHECK(op.K.allFinite());
}

TEST_CASE("singular-subtraction path agrees with the regular path") {
  // force the subtraction path everywhere vs. only where triangles touch;
  // intermediate-distance pairs are computed both ways and must agree
  TriangleMesh m = generate_sphere(1.0 / 3.0, 1);
  RwgBasisSet basis(m);
  cplx k = Medium(3.0, 1.0).k();
  AssemblyOptions touch_only;
  touch_only.near_ratio = 0.0;
  AssemblyOptions always;
  always.near_ratio = 1e9;
  OperatorMatrices a = assemble_operators(m, basis, k, touch_only);
  OperatorMatrices b = assemble_operators(m, basis, k, always);
  CHECK((a.T - b.T).norm() / b.T.norm() < 2e-5);
  CHECK((a.K - b.K).norm() / b.K.norm() < 2e-4);
}

TEST_CASE("operator matrices converge with quadrature refinement") {
  TriangleMesh m = generate_sphere(1.0 / 3.0, 1);
  RwgBasisSet basis(m);
  cplx k = Medium(3.0, 1.0).k();
  AssemblyOptions coarse;
  coarse.regular_points = 3;
  coarse.singular_outer_points = 6;
  coarse.singular_inner_points = 6;
  AssemblyOptions fine;  // defaults
  OperatorMatrices a = assemble_operators(m, basis, k, coarse);
  OperatorMatrices b = assemble_operators(m, basis, k, fine);
  CHECK((a.T - b.T).norm() / b.T.norm() < 5e-2);
  CHECK((a.K - b.K).norm() / b.K.norm() < 5e-2);
}

TEST_CASE("gram matrix: oracle entries, exact antisymmetry, zero diagonal") {
  TriangleMesh m = generate_sphere(1.0 / 3.0, 0);
  RwgBasisSet basis(m);
  Eigen::SparseMatrix<double> g = assemble_gram(m, basis);
  MatrixXcd gd = MatrixXcd(g.cast<cplx>());
  CHECK((gd + gd.transpose()).norm() == 0.0);
  for (int i = 0; i < basis.size(); ++i) CHECK(gd(i, i) == cplx(0.0));

  // compare a few entries against brute-force integration
  std::mt19937 rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    int i = static_cast<int>(rng() % basis.size());
    int j = static_cast<int>(rng() % basis.size());
    if (i == j) continue;
    double ref = 0.0;
    for (int t = 0; t < m.num_triangles(); ++t) {
      if (basis.coefficient(i, t) == 0.0 || basis.coefficient(j, t) == 0.0)
        continue;
      ref += oracle::integrate_triangle(
          m.vertex(t, 0), m.vertex(t, 1), m.vertex(t, 2),
          [&](const Vec3& r) {
            return m.normals[t]
                .cross(basis.value(i, t, r))
                .dot(basis.value(j, t, r));
          },
          1);
    }
    CAPTURE(i);
    CAPTURE(j);
    CHECK(gd(i, j).real() == doctest::Approx(ref).epsilon(1e-10).scale(1e-6));
  }
}

TEST_CASE("field projection matches brute-force integration") {
  TriangleMesh m = generate_sphere(1.0 / 3.0, 0);
  RwgBasisSet basis(m);
  Medium ext(1.0, 1.0);
  PlaneWave wave(40.0, 70.0, 1);
  VectorXcd v = project_field(m, basis, [&](const Vec3& r) {
    return plane_wave_fields(wave, ext, r).first;
  });
  for (int n : {0, 9, 23}) {
    cplx ref = 0.0;
    const auto& e = basis.edges[n];
    for (int t : {e.tri_plus, e.tri_minus})
      ref += oracle::integrate_triangle(
          m.vertex(t, 0), m.vertex(t, 1), m.vertex(t, 2),
          [&](const Vec3& r) {
            CVec3 E = plane_wave_fields(wave, ext, r).first;
            return detail::cdot(E, basis.value(n, t, r));
          },
          3);
    CHECK(std::abs(v(n) - ref) < 1e-4 * std::abs(ref));
  }
}

TEST_CASE("excitation signs: vE projects E, vH projects -H") {
  TriangleMesh m = generate_sphere(1.0 / 3.0, 0);
  RwgBasisSet basis(m);
  Medium ext(1.0, 1.0);
  PlaneWave wave(10.0, 20.0, 0);
  Excitation ex = assemble_excitation(m, basis, wave, ext);
  VectorXcd ve = project_field(m, basis, [&](const Vec3& r) {
    return plane_wave_fields(wave, ext, r).first;
  });
  VectorXcd vh = project_field(m, basis, [&](const Vec3& r) {
    return plane_wave_fields(wave, ext, r).second;
  });
  CHECK((ex.vE - ve).norm() == 0.0);
  CHECK((ex.vH + vh).norm() == 0.0);
}

TEST_CASE("coupled system block structure and orderings") {
  TriangleMesh m = generate_sphere(1.0 / 3.0, 1);
  RwgBasisSet basis(m);
  Medium ext(1.0, 1.0), in(3.0, 1.0);
  PmchwtSystem sys = assemble_pmchwt(m, basis, ext, in);
  const int n = sys.n;
  REQUIRE(n == basis.size());

  // the two orderings are column-block swaps of each other
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(-1, 1);
  VectorXcd x(2 * n);
  for (int i = 0; i < 2 * n; ++i) x(i) = cplx(u(rng), u(rng));
  VectorXcd swapped(2 * n);
  swapped.head(n) = x.tail(n);
  swapped.tail(n) = x.head(n);
  CHECK((sys.apply_kdiag(x) - sys.apply_tdiag(swapped)).norm() == 0.0);

  // dense forms agree with the matrix-free application
  CHECK((sys.dense_kdiag() * x - sys.apply_kdiag(x)).norm() < 1e-10);
  CHECK((sys.dense_tdiag() * x - sys.apply_tdiag(x)).norm() < 1e-10);

  // diagonal of the T-diagonal ordering
  VectorXcd d = sys.tdiag_diagonal();
  MatrixXcd zt = sys.dense_tdiag();
  CHECK((d - zt.diagonal()).norm() == 0.0);

  // submatrix extraction
  std::vector<int> cell = {0, 2, 5, n - 1};
  MatrixXcd sub = sys.tdiag_submatrix(cell);
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) {
      CHECK(sub(a, b) == sys.B(cell[a], cell[b]));
      CHECK(sub(a, 4 + b) == sys.A(cell[a], cell[b]));
      CHECK(sub(4 + a, b) == sys.A(cell[a], cell[b]));
      CHECK(sub(4 + a, 4 + b) == -sys.C(cell[a], cell[b]));
    }

  CHECK_THROWS_AS(sys.apply_kdiag(VectorXcd::Zero(n)), DimensionMismatch);
}

TEST_CASE("vacuum interior doubles the single-medium operators") {
  TriangleMesh m = generate_sphere(1.0 / 3.0, 0);
  RwgBasisSet basis(m);
  Medium vac(1.0, 1.0);
  PmchwtSystem sys = assemble_pmchwt(m, basis, vac, vac);
  OperatorMatrices op = assemble_operators(m, basis, vac.k());
  CHECK((sys.A - 2.0 * op.K).norm() < 1e-12 * op.K.norm());
  CHECK((sys.B - 2.0 * op.T).norm() < 1e-12 * op.T.norm());
  CHECK((sys.C - 2.0 * op.T).norm() < 1e-12 * op.T.norm());
}
