#include <doctest.h>

#include <cbem/em.hpp>
#include <cbem/errors.hpp>
#include <cmath>
#include <numbers>

using namespace cbem;

TEST_CASE("medium wavenumber and impedance") {
  Medium vac(1.0, 1.0);
  CHECK(vac.k().real() == doctest::Approx(2.0 * std::numbers::pi));
  CHECK(vac.k().imag() == doctest::Approx(0.0));
  CHECK(vac.eta().real() == doctest::Approx(1.0));

  Medium diel(3.0, 1.0);
  CHECK(diel.k().real() ==
        doctest::Approx(2.0 * std::numbers::pi * std::sqrt(3.0)));
  CHECK(diel.eta().real() == doctest::Approx(1.0 / std::sqrt(3.0)));

  Medium magnetic(2.0, 3.0);
  CHECK(magnetic.eta().real() == doctest::Approx(std::sqrt(1.5)));

  CHECK_THROWS_AS(Medium(-1.0, 1.0), InvalidParam);
  CHECK_THROWS_AS(Medium(1.0, cplx(0.0, 1.0)), InvalidParam);
}

TEST_CASE("kernel value and reciprocity") {
  Vec3 r(0.3, -0.1, 0.2), rp(0.0, 0.4, -0.2);
  cplx k = Medium(2.0, 1.0).k();
  double R = (r - rp).norm();
  cplx g = green(k, r, rp);
  CHECK(std::abs(g) ==
        doctest::Approx(1.0 / (4.0 * std::numbers::pi * R)).epsilon(1e-13));
  CHECK(std::arg(g) == doctest::Approx(std::arg(std::exp(-J1C * k * R))));
  CHECK(green(k, rp, r) == g);
  CHECK_THROWS_AS(green(k, r, r), CoincidentPoints);
}

TEST_CASE("spherical frame is orthonormal and right-handed") {
  for (double th : {0.1, 1.0, 2.4})
    for (double ph : {0.0, 0.7, 3.5}) {
      Vec3 er = spherical_unit_r(th, ph);
      Vec3 et = spherical_unit_theta(th, ph);
      Vec3 ep = spherical_unit_phi(th, ph);
      CHECK(er.norm() == doctest::Approx(1.0));
      CHECK(std::abs(er.dot(et)) < 1e-14);
      CHECK(std::abs(er.dot(ep)) < 1e-14);
      CHECK((et.cross(ep) - er).norm() < 1e-14);
    }
}

TEST_CASE("plane wave geometry and conventions") {
  // incidence from theta = 0: propagates along -z, theta-pol E along -x
  PlaneWave w0(0.0, 0.0, 0);
  CHECK((w0.khat - Vec3(0, 0, -1)).norm() < 1e-14);
  CHECK((w0.ehat - Vec3(-1, 0, 0)).norm() < 1e-14);

  PlaneWave w0p(0.0, 0.0, 1);
  CHECK((w0p.ehat - Vec3(0, 1, 0)).norm() < 1e-14);

  // incidence from theta = 90, phi = 0: propagates along -x
  PlaneWave w90(90.0, 0.0, 0);
  CHECK((w90.khat - Vec3(-1, 0, 0)).norm() < 1e-14);
  CHECK(std::abs(w90.ehat.dot(w90.khat)) < 1e-14);

  for (int pol : {0, 1}) {
    PlaneWave w(37.0, 122.0, pol);
    CHECK(w.khat.norm() == doctest::Approx(1.0));
    CHECK(w.ehat.norm() == doctest::Approx(1.0));
    CHECK(std::abs(w.khat.dot(w.ehat)) < 1e-14);
  }
}

TEST_CASE("complex cross product does not conjugate") {
  CVec3 a(cplx(1, 2), cplx(0, -1), cplx(3, 0.5));
  CVec3 b(cplx(0, 1), cplx(2, 0), cplx(-1, 1));
  CVec3 c = cross_c(a, b);
  CVec3 manual(a(1) * b(2) - a(2) * b(1), a(2) * b(0) - a(0) * b(2),
               a(0) * b(1) - a(1) * b(0));
  CHECK((c - manual).norm() == 0.0);
  // and is antisymmetric with zero self-cross
  CHECK((cross_c(b, a) + c).norm() == 0.0);
  CHECK(cross_c(a, a).norm() == 0.0);
}

TEST_CASE("plane wave fields satisfy the impedance relation") {
  Medium med(3.0, 1.0);
  PlaneWave w(25.0, 310.0, 1);
  Vec3 r(0.2, -0.7, 0.4);
  auto [E, H] = plane_wave_fields(w, med, r);
  CHECK(std::abs(E.norm() - 1.0) < 1e-13);
  CHECK(std::abs(H.norm() - std::abs(1.0 / med.eta())) < 1e-13);
  // H = khat x E / eta, and both are transverse
  CVec3 khc = w.khat.cast<cplx>();
  CHECK((H - cross_c(khc, E) / med.eta()).norm() < 1e-13);
  CHECK(std::abs(khc.dot(E)) < 1e-13);
  // closed form: H = (khat x ehat)/eta times the same phase factor as E
  cplx phase = std::exp(-J1C * med.k() * w.khat.dot(r));
  CVec3 h_exact = (w.khat.cross(w.ehat)).cast<cplx>() * (phase / med.eta());
  CHECK((H - h_exact).norm() < 1e-13);
  // phase advances as e^{-jk khat.r} in both fields
  Vec3 r2 = r + 0.01 * w.khat;
  auto [E2, H2] = plane_wave_fields(w, med, r2);
  cplx step = std::exp(-J1C * med.k() * 0.01);
  CHECK(std::abs(E2(0) / E(0) - step) < 1e-12);
  CHECK(std::abs(H2(2) / H(2) - step) < 1e-12);
}

TEST_CASE("direction grid ordering") {
  auto g = direction_grid(0.0, 30.0, 12, 0.0, 30.0, 6, {0, 1});
  CHECK(g.size() == 144);
  CHECK(g[0].theta_deg == doctest::Approx(0.0));
  CHECK(g[0].pol == 0);
  CHECK(g[1].pol == 1);               // polarization innermost
  CHECK(g[2].phi_deg == doctest::Approx(30.0));  // then phi
  CHECK(g[12].theta_deg == doctest::Approx(30.0));  // theta outermost
  CHECK(g.back().theta_deg == doctest::Approx(330.0));
  CHECK(g.back().phi_deg == doctest::Approx(150.0));
  CHECK(g.back().pol == 1);
  CHECK_THROWS_AS(direction_grid(0, 1, 0, 0, 1, 1, {0}), InvalidParam);
}
