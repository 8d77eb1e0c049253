#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "cbem/mesh.hpp"

namespace cbem {

/// Closed-form static potential integrals over a flat triangle T with
/// observation point r (Wilton et al. line-integral formulas):
///   I0     = int_T 1/R dA'
///   I1     = int_T (rho' - rho)/R dA'   (rho = in-plane projection of r)
///   gradI0 = grad_r int_T 1/R dA'
struct TrianglePotentials {
  double I0 = 0.0;
  Vec3 I1 = Vec3::Zero();
  Vec3 gradI0 = Vec3::Zero();
  Vec3 rho = Vec3::Zero();  // projection of r onto the triangle plane
  double d = 0.0;           // signed height of r above the plane
};

inline TrianglePotentials triangle_potentials(const Vec3& v0, const Vec3& v1,
                                              const Vec3& v2, const Vec3& r) {
  TrianglePotentials out;
  Vec3 n = (v1 - v0).cross(v2 - v0);
  const double scale = std::sqrt(n.norm());
  n.normalize();
  out.d = n.dot(r - v0);
  out.rho = r - out.d * n;
  const double ad = std::abs(out.d);
  const double eps = 1e-13 * std::max(scale, 1.0);

  const Vec3 verts[3] = {v0, v1, v2};
  double beta_sum = 0.0;
  for (int i = 0; i < 3; ++i) {
    const Vec3& a = verts[i];
    const Vec3& b = verts[(i + 1) % 3];
    Vec3 s_hat = (b - a).normalized();
    Vec3 u_hat = s_hat.cross(n);  // outward in-plane edge normal
    double lm = (a - out.rho).dot(s_hat);
    double lp = (b - out.rho).dot(s_hat);
    double P0 = (a - out.rho).dot(u_hat);
    double Rm = (r - a).norm();
    double Rp = (r - b).norm();
    double R0sq = P0 * P0 + out.d * out.d;

    // log term; both forms are equal, pick the numerically safe one.
    // On the edge line (R0sq ~ 0) every use of L carries a vanishing factor.
    double L = 0.0;
    if (R0sq > eps * eps) {
      if (lp + Rp >= lm + Rm)
        L = std::log((Rp + lp) / (Rm + lm));
      else
        L = std::log((Rm - lm) / (Rp - lp));
    }

    double bp = std::atan2(P0 * lp, R0sq + ad * Rp);
    double bm = std::atan2(P0 * lm, R0sq + ad * Rm);
    double beta = bp - bm;

    out.I0 += P0 * L - ad * beta;
    out.I1 += 0.5 * (R0sq * L + lp * Rp - lm * Rm) * u_hat;
    out.gradI0 -= L * u_hat;
    beta_sum += beta;
  }
  if (out.d > 0.0)
    out.gradI0 -= beta_sum * n;
  else if (out.d < 0.0)
    out.gradI0 += beta_sum * n;
  // d == 0: the normal part of gradI0 vanishes in the principal-value sense
  return out;
}

}  // namespace cbem
