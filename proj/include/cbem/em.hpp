#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "cbem/errors.hpp"
#include "cbem/mesh.hpp"

namespace cbem {

using cplx = std::complex<double>;
using CVec3 = Eigen::Vector3cd;

inline constexpr cplx J1C{0.0, 1.0};
inline constexpr double K0 = 2.0 * std::numbers::pi;  // lambda_1 = 1, eta_0 = 1

/// Homogeneous medium in normalized units (k0 = 2*pi, eta0 = 1).
struct Medium {
  cplx eps_r{1.0, 0.0};
  cplx mu_r{1.0, 0.0};

  Medium() = default;
  Medium(cplx eps, cplx mu) : eps_r(eps), mu_r(mu) {
    if (!(eps_r.real() > 0.0) || !(mu_r.real() > 0.0))
      throw InvalidParam("medium requires Re(eps_r) > 0 and Re(mu_r) > 0");
  }

  cplx k() const { return K0 * std::sqrt(eps_r * mu_r); }
  cplx eta() const { return std::sqrt(mu_r / eps_r); }
};

/// Helmholtz kernel e^{-jkR} / (4 pi R), time convention e^{+j omega t}.
inline cplx green(cplx k, const Vec3& r, const Vec3& rp) {
  double R = (r - rp).norm();
  if (!(R > 0.0)) throw CoincidentPoints("green: coincident points");
  return std::exp(-J1C * k * R) / (4.0 * std::numbers::pi * R);
}

/// Plain cross product of complex 3-vectors. Eigen's cross() conjugates its
/// complex result, which is never what the field expressions here want.
inline CVec3 cross_c(const CVec3& a, const CVec3& b) {
  return {a(1) * b(2) - a(2) * b(1), a(2) * b(0) - a(0) * b(2),
          a(0) * b(1) - a(1) * b(0)};
}

inline Vec3 spherical_unit_r(double theta, double phi) {
  return {std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi),
          std::cos(theta)};
}
inline Vec3 spherical_unit_theta(double theta, double phi) {
  return {std::cos(theta) * std::cos(phi), std::cos(theta) * std::sin(phi),
          -std::sin(theta)};
}
inline Vec3 spherical_unit_phi(double /*theta*/, double phi) {
  return {-std::sin(phi), std::cos(phi), 0.0};
}

/// Unit plane wave arriving from the direction (theta, phi): it propagates
/// along k_hat = -r_hat(theta, phi). Polarization "theta" carries
/// e_hat = -theta_hat(theta, phi) (so the theta-polarized wave incident from
/// theta = 0 has E || -x at the origin), "phi" carries e_hat = phi_hat.
struct PlaneWave {
  double theta_deg = 0.0, phi_deg = 0.0;
  int pol = 0;  // 0: theta, 1: phi
  Vec3 khat;    // propagation direction
  Vec3 ehat;    // polarization, |e| = 1, e . k = 0

  PlaneWave(double theta_degrees, double phi_degrees, int polarization)
      : theta_deg(theta_degrees), phi_deg(phi_degrees), pol(polarization) {
    double th = theta_deg * std::numbers::pi / 180.0;
    double ph = phi_deg * std::numbers::pi / 180.0;
    khat = -spherical_unit_r(th, ph);
    ehat = (pol == 0) ? Vec3(-spherical_unit_theta(th, ph))
                      : spherical_unit_phi(th, ph);
  }
};

/// E and H of a plane wave in the given medium at point r.
inline std::pair<CVec3, CVec3> plane_wave_fields(const PlaneWave& w,
                                                 const Medium& medium,
                                                 const Vec3& r) {
  cplx phase = std::exp(-J1C * medium.k() * w.khat.dot(r));
  CVec3 E = w.ehat.cast<cplx>() * phase;
  CVec3 H = cross_c(w.khat.cast<cplx>(), E) / medium.eta();
  return {E, H};
}

/// Row-major grid of incident waves: theta outer, phi inner, polarization
/// innermost. Angles in degrees; pols is a subset of {0, 1}.
inline std::vector<PlaneWave> direction_grid(double theta_s, double dtheta,
                                             int n_theta, double phi_s,
                                             double dphi, int n_phi,
                                             const std::vector<int>& pols) {
  if (n_theta < 1 || n_phi < 1 || pols.empty())
    throw InvalidParam("direction_grid: counts must be >= 1");
  std::vector<PlaneWave> waves;
  waves.reserve(static_cast<std::size_t>(n_theta) * n_phi * pols.size());
  for (int it = 0; it < n_theta; ++it)
    for (int ip = 0; ip < n_phi; ++ip)
      for (int p : pols)
        waves.emplace_back(theta_s + it * dtheta, phi_s + ip * dphi, p);
  return waves;
}

}  // namespace cbem
