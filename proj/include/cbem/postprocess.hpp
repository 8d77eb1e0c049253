#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "cbem/em.hpp"
#include "cbem/errors.hpp"
#include "cbem/mesh.hpp"
#include "cbem/operators.hpp"
#include "cbem/quadrature.hpp"
#include "cbem/rwg.hpp"

namespace cbem {

/// Far-zone scattered field in direction (theta, phi), with the spherical
/// spreading factor e^{-jkr}/r suppressed. Built from the radiation vectors
///   N = int J e^{+jk rhat.r'} dG,   L = int M e^{+jk rhat.r'} dG,
///   E_theta = -(jk/4pi)(eta N_theta + L_phi)
///   E_phi   = -(jk/4pi)(eta N_phi   - L_theta).
struct FarField {
  cplx e_theta = 0.0, e_phi = 0.0;

  double rcs() const {  // 4 pi |E|^2 for a unit-amplitude incident wave
    return 4.0 * std::numbers::pi * (std::norm(e_theta) + std::norm(e_phi));
  }
};

inline FarField far_field(const TriangleMesh& mesh, const RwgBasisSet& basis,
                          const Eigen::VectorXcd& alpha_j,
                          const Eigen::VectorXcd& alpha_m, const Medium& ext,
                          double theta, double phi, int npoints = 6) {
  if (alpha_j.size() != basis.size() || alpha_m.size() != basis.size())
    throw DimensionMismatch("far_field: coefficient vector length != edges");
  const cplx k = ext.k();
  const cplx eta = ext.eta();
  const Vec3 rhat = spherical_unit_r(theta, phi);
  const auto& rule = triangle_rule(npoints);
  auto loc = detail::local_bases(mesh, basis);

  CVec3 N = CVec3::Zero(), L = CVec3::Zero();
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles[t];
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const auto& bc = rule.points[q];
      Vec3 x = bc[0] * mesh.vertices[tri[0]] + bc[1] * mesh.vertices[tri[1]] +
               bc[2] * mesh.vertices[tri[2]];
      cplx ph = rule.weights[q] * mesh.areas[t] *
                std::exp(J1C * k * rhat.dot(x));
      for (int a = 0; a < 3; ++a) {
        CVec3 f = (loc[t].coeff[a] * (x - loc[t].p[a])).cast<cplx>() * ph;
        N += alpha_j(loc[t].edge[a]) * f;
        L += alpha_m(loc[t].edge[a]) * f;
      }
    }
  }

  const Vec3 th = spherical_unit_theta(theta, phi);
  const Vec3 pp = spherical_unit_phi(theta, phi);
  const cplx scale = -J1C * k / (4.0 * std::numbers::pi);
  FarField out;
  out.e_theta = scale * (eta * detail::cdot(N, th) + detail::cdot(L, pp));
  out.e_phi = scale * (eta * detail::cdot(N, pp) - detail::cdot(L, th));
  return out;
}

inline double db10(double x) { return 10.0 * std::log10(x); }

/// Error between two RCS patterns, both already in dB:
///   10 log10( rms(computed - reference) / (max(reference) - min(reference)) )
/// Returns -infinity for an exact match.
inline double rcs_rmse_db(const std::vector<double>& computed_db,
                          const std::vector<double>& reference_db) {
  if (computed_db.size() != reference_db.size())
    throw MismatchedSweep("rcs_rmse_db: pattern lengths differ");
  if (computed_db.empty()) throw MismatchedSweep("rcs_rmse_db: empty pattern");
  double lo = reference_db[0], hi = reference_db[0], mse = 0.0;
  for (std::size_t i = 0; i < reference_db.size(); ++i) {
    lo = std::min(lo, reference_db[i]);
    hi = std::max(hi, reference_db[i]);
    double d = computed_db[i] - reference_db[i];
    mse += d * d;
  }
  if (!(hi > lo))
    throw DegenerateRange("rcs_rmse_db: reference dynamic range is zero");
  mse /= static_cast<double>(reference_db.size());
  if (mse == 0.0) return -std::numeric_limits<double>::infinity();
  return db10(std::sqrt(mse) / (hi - lo));
}

}  // namespace cbem
