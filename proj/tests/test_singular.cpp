#include <doctest.h>

#include <cbem/singular.hpp>
#include <cmath>
#include <numbers>

#include "support/oracles.hpp"

using namespace cbem;

namespace {

const Vec3 V0(0.0, 0.0, 0.0);
const Vec3 V1(0.3, 0.0, 0.0);
const Vec3 V2(0.1, 0.25, 0.0);

double oracle_I0(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& r,
                 int depth) {
  return oracle::integrate_triangle(
      a, b, c, [&](const Vec3& rp) { return 1.0 / (r - rp).norm(); }, depth);
}

}  // namespace

TEST_CASE("I0 and I1 match brute-force quadrature off the plane") {
  for (const Vec3& r : {Vec3(0.1, 0.1, 0.2), Vec3(0.15, 0.05, -0.15),
                        Vec3(0.6, -0.3, 0.08), Vec3(0.13, 0.08, 0.03)}) {
    TrianglePotentials p = triangle_potentials(V0, V1, V2, r);
    CAPTURE(r.transpose());
    CHECK(p.I0 == doctest::Approx(oracle_I0(V0, V1, V2, r, 8)).epsilon(1e-6));
    for (int comp = 0; comp < 3; ++comp) {
      double ref = oracle::integrate_triangle(
          V0, V1, V2,
          [&](const Vec3& rp) {
            return (rp(comp) - p.rho(comp)) / (r - rp).norm();
          },
          8);
      CHECK(p.I1(comp) == doctest::Approx(ref).epsilon(1e-6).scale(0.1));
    }
  }
}

TEST_CASE("in-plane exterior observation point") {
  Vec3 r(0.7, 0.4, 0.0);
  TrianglePotentials p = triangle_potentials(V0, V1, V2, r);
  CHECK(p.d == doctest::Approx(0.0));
  CHECK(p.I0 == doctest::Approx(oracle_I0(V0, V1, V2, r, 9)).epsilon(1e-6));
  // gradient lies in the plane
  CHECK(std::abs(p.gradI0(2)) < 1e-12);
}

TEST_CASE("interior in-plane value: equilateral analytic formula") {
  double a = 0.4;
  Vec3 e0(0, 0, 0), e1(a, 0, 0), e2(a / 2, a * std::sqrt(3.0) / 2, 0);
  Vec3 centroid = (e0 + e1 + e2) / 3.0;
  TrianglePotentials p = triangle_potentials(e0, e1, e2, centroid);
  double exact = std::sqrt(3.0) * a * std::log(2.0 + std::sqrt(3.0));
  CHECK(p.I0 == doctest::Approx(exact).epsilon(1e-12));
  // symmetry: I1 and the in-plane gradient vanish at the centroid
  CHECK(p.I1.norm() < 1e-12);
  CHECK(p.gradI0.norm() < 1e-12);
}

TEST_CASE("gradI0 equals the finite-difference gradient of I0") {
  const double h = 1e-6;
  for (const Vec3& r : {Vec3(0.1, 0.1, 0.2), Vec3(0.12, 0.07, -0.1),
                        Vec3(0.5, 0.4, 0.05), Vec3(0.11, 0.09, 0.004)}) {
    TrianglePotentials p = triangle_potentials(V0, V1, V2, r);
    CAPTURE(r.transpose());
    for (int c = 0; c < 3; ++c) {
      Vec3 dr = Vec3::Zero();
      dr(c) = h;
      double fd = (triangle_potentials(V0, V1, V2, r + dr).I0 -
                   triangle_potentials(V0, V1, V2, r - dr).I0) /
                  (2.0 * h);
      CHECK(p.gradI0(c) == doctest::Approx(fd).epsilon(2e-4).scale(1.0));
    }
  }
}

TEST_CASE("normal derivative approaches the interior solid angle") {
  Vec3 above = Vec3(0.12, 0.08, 1e-7);  // just above an interior point
  TrianglePotentials p = triangle_potentials(V0, V1, V2, above);
  CHECK(p.gradI0(2) == doctest::Approx(-2.0 * std::numbers::pi).epsilon(1e-4));
  Vec3 below = Vec3(0.12, 0.08, -1e-7);
  TrianglePotentials q = triangle_potentials(V0, V1, V2, below);
  CHECK(q.gradI0(2) == doctest::Approx(2.0 * std::numbers::pi).epsilon(1e-4));
}

TEST_CASE("rigid-motion covariance") {
  // rotate + translate everything: I0 invariant, vectors rotate
  Eigen::Matrix3d R =
      Eigen::AngleAxisd(0.83, Vec3(1, 2, -1).normalized()).toRotationMatrix();
  Vec3 t(0.4, -1.2, 2.0);
  Vec3 r(0.2, 0.05, 0.15);
  TrianglePotentials p = triangle_potentials(V0, V1, V2, r);
  TrianglePotentials q =
      triangle_potentials(R * V0 + t, R * V1 + t, R * V2 + t, R * r + t);
  CHECK(q.I0 == doctest::Approx(p.I0).epsilon(1e-12));
  CHECK((q.I1 - R * p.I1).norm() < 1e-12);
  CHECK((q.gradI0 - R * p.gradI0).norm() < 1e-10);
  CHECK(std::abs(std::abs(q.d) - std::abs(p.d)) < 1e-12);
}

TEST_CASE("vertex-order invariance") {
  Vec3 r(0.15, 0.1, 0.12);
  TrianglePotentials p = triangle_potentials(V0, V1, V2, r);
  TrianglePotentials q = triangle_potentials(V1, V2, V0, r);
  TrianglePotentials s = triangle_potentials(V0, V2, V1, r);  // flipped
  CHECK(q.I0 == doctest::Approx(p.I0).epsilon(1e-13));
  CHECK((q.gradI0 - p.gradI0).norm() < 1e-12);
  CHECK(s.I0 == doctest::Approx(p.I0).epsilon(1e-13));
  CHECK((s.gradI0 - p.gradI0).norm() < 1e-12);
}
