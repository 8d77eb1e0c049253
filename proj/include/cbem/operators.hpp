#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "cbem/em.hpp"
#include "cbem/errors.hpp"
#include "cbem/mesh.hpp"
#include "cbem/quadrature.hpp"
#include "cbem/rwg.hpp"
#include "cbem/singular.hpp"

namespace cbem {

/// Galerkin discretization of the single-medium boundary operators over RWG
/// functions, kernel g = e^{-jkR}/(4 pi R):
///   [T]_mn = jk   int int f_m . f_n g
///          - j/k  int int (div f_m)(div f_n) g      (mixed-potential form)
///   [K]_mn = int int f_m . (grad_r g x f_n)          (principal value)
/// Touching and near triangle pairs use singularity subtraction: the static
/// 1/(4 pi R) part in closed form, the smooth remainder by regular quadrature.
struct AssemblyOptions {
  int regular_points = 6;         // inner and outer rule for separated pairs
  int singular_outer_points = 12; // outer rule on the observation triangle
  int singular_inner_points = 12; // rule for the smooth remainder
  double near_ratio = 1.5;        // centroid gap vs. radius sum threshold
};

namespace detail {

inline constexpr double PI4 = 4.0 * std::numbers::pi;

inline cplx cdot(const CVec3& a, const Vec3& b) {
  return a(0) * b(0) + a(1) * b(1) + a(2) * b(2);
}

inline CVec3 ccross(const CVec3& a, const Vec3& b) {
  return {a(1) * b(2) - a(2) * b(1), a(2) * b(0) - a(0) * b(2),
          a(0) * b(1) - a(1) * b(0)};
}

/// (e^{-u} - 1)/u, stable for small |u| (including u = 0).
inline cplx expm1_over_u(cplx u) {
  if (std::abs(u) < 1e-4)
    return -1.0 + u * (0.5 + u * (-1.0 / 6.0 + u * (1.0 / 24.0)));
  return (std::exp(-u) - 1.0) / u;
}

/// Smooth remainder (e^{-jkR} - 1)/(4 pi R); finite at R = 0.
inline cplx green_smooth(cplx k, double R) {
  return J1C * k * expm1_over_u(J1C * k * R) / PI4;
}

/// grad_r of the full kernel equals coeff * (r - r').
inline cplx grad_green_coeff(cplx k, double R) {
  cplx u = J1C * k * R;
  return -(1.0 + u) * std::exp(-u) / (PI4 * R * R * R);
}

/// grad_r of the smooth remainder equals coeff * (r - r'); needs R > 0,
/// but coeff * (r - r') stays bounded as R -> 0.
inline cplx grad_green_smooth_coeff(cplx k, double R) {
  cplx u = J1C * k * R;
  cplx s;  // ((1+u)e^{-u} - 1)/u^2
  if (std::abs(u) < 1e-3)
    s = -0.5 + u * (1.0 / 3.0 + u * (-1.0 / 8.0 + u * (1.0 / 30.0)));
  else
    s = ((1.0 + u) * std::exp(-u) - 1.0) / (u * u);
  return k * k * s / (PI4 * R);
}

struct TriQuad {
  std::vector<Vec3> p;
  std::vector<double> w;  // includes the triangle area
};

inline std::vector<TriQuad> physical_points(const TriangleMesh& mesh,
                                            const QuadratureRule& rule) {
  std::vector<TriQuad> out(mesh.num_triangles());
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles[t];
    out[t].p.resize(rule.size());
    out[t].w.resize(rule.size());
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const auto& b = rule.points[q];
      out[t].p[q] = b[0] * mesh.vertices[tri[0]] + b[1] * mesh.vertices[tri[1]] +
                    b[2] * mesh.vertices[tri[2]];
      out[t].w[q] = rule.weights[q] * mesh.areas[t];
    }
  }
  return out;
}

/// Per-triangle RWG data: global edge id, signed l/(2A), free vertex.
struct TriLocal {
  std::array<int, 3> edge;
  std::array<double, 3> coeff;
  std::array<Vec3, 3> p;
};

inline std::vector<TriLocal> local_bases(const TriangleMesh& mesh,
                                         const RwgBasisSet& basis) {
  std::vector<TriLocal> out(mesh.num_triangles());
  for (int t = 0; t < mesh.num_triangles(); ++t)
    for (int l = 0; l < 3; ++l) {
      const auto& ref = basis.tri_edges[t][l];
      out[t].edge[l] = ref.edge;
      out[t].coeff[l] =
          ref.sign * basis.edges[ref.edge].length / (2.0 * mesh.areas[t]);
      out[t].p[l] = mesh.vertices[ref.opp];
    }
  return out;
}

struct Pair33 {
  std::array<std::array<cplx, 3>, 3> K{}, T{};
};

/// Separated pair: single double-quadrature sweep shared by all nine
/// basis combinations through moment accumulators.
inline Pair33 regular_pair(cplx k, const TriQuad& qa, const TriQuad& qb,
                           const TriLocal& la, const TriLocal& lb) {
  cplx S = 0, Sxy = 0, q3 = 0;
  CVec3 Sx = CVec3::Zero(), Sy = CVec3::Zero();
  CVec3 Q0 = CVec3::Zero(), Q1 = CVec3::Zero(), Q2 = CVec3::Zero();
  for (std::size_t i = 0; i < qa.p.size(); ++i)
    for (std::size_t j = 0; j < qb.p.size(); ++j) {
      Vec3 D = qa.p[i] - qb.p[j];
      double R = D.norm();
      double ww = qa.w[i] * qb.w[j];
      cplx g = ww * std::exp(-J1C * k * R) / (PI4 * R);
      cplx gg = ww * grad_green_coeff(k, R);
      S += g;
      Sx += g * qa.p[i];
      Sy += g * qb.p[j];
      Sxy += g * qa.p[i].dot(qb.p[j]);
      Q0 += gg * D;
      Q1 += gg * D.cross(qb.p[j]);
      Q2 += gg * qa.p[i].cross(D);
      q3 += gg * D.dot(qb.p[j].cross(qa.p[i]));
    }
  Pair33 out;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      const Vec3& pa = la.p[a];
      const Vec3& pb = lb.p[b];
      double cc = la.coeff[a] * lb.coeff[b];
      out.T[a][b] = cc * (J1C * k *
                              (Sxy - cdot(Sx, pb) - cdot(Sy, pa) +
                               pa.dot(pb) * S) -
                          (4.0 * J1C / k) * S);
      out.K[a][b] =
          cc * (q3 - cdot(Q1, pa) - cdot(Q2, pb) + cdot(Q0, pb.cross(pa)));
    }
  return out;
}

/// Touching or near pair: outer quadrature over ta, inner integral over tb
/// split into a closed-form static part and a smooth remainder.
/// The K block of a triangle with itself vanishes exactly (coplanar geometry)
/// and is skipped.
inline Pair33 singular_pair(cplx k, const TriangleMesh& mesh, int ta, int tb,
                            const TriQuad& qa, const TriQuad& qb,
                            const TriLocal& la, const TriLocal& lb) {
  const auto& trib = mesh.triangles[tb];
  const Vec3& b0 = mesh.vertices[trib[0]];
  const Vec3& b1 = mesh.vertices[trib[1]];
  const Vec3& b2 = mesh.vertices[trib[2]];
  const bool self = (ta == tb);

  Pair33 out;
  for (std::size_t i = 0; i < qa.p.size(); ++i) {
    const Vec3& r = qa.p[i];
    const double w = qa.w[i];
    TrianglePotentials pot = triangle_potentials(b0, b1, b2, r);

    cplx sS = 0;                 // int g_smooth
    CVec3 sSy = CVec3::Zero();   // int g_smooth r'
    CVec3 sQ0 = CVec3::Zero();   // int grad g_smooth
    CVec3 sQ1 = CVec3::Zero();   // int grad g_smooth x r'
    for (std::size_t j = 0; j < qb.p.size(); ++j) {
      Vec3 D = r - qb.p[j];
      double R = D.norm();
      cplx gs = qb.w[j] * green_smooth(k, R);
      sS += gs;
      sSy += gs * qb.p[j];
      if (!self && R > 0.0) {
        cplx gc = qb.w[j] * grad_green_smooth_coeff(k, R);
        sQ0 += gc * D;
        sQ1 += gc * D.cross(qb.p[j]);
      }
    }

    const cplx Ig = pot.I0 / PI4 + sS;
    for (int b = 0; b < 3; ++b) {
      const Vec3& pb = lb.p[b];
      // int g (r' - p_b): static part (I1 + (rho - p_b) I0)/(4 pi)
      CVec3 Igv = ((pot.I1 + (pot.rho - pb) * pot.I0) / PI4).cast<cplx>() +
                  (sSy - sS * pb.cast<cplx>());
      CVec3 IK = CVec3::Zero();
      if (!self)
        IK = (pot.gradI0.cross(r - pb) / PI4).cast<cplx>() +
             (sQ1 - ccross(sQ0, pb));
      for (int a = 0; a < 3; ++a) {
        const Vec3 fa = r - la.p[a];
        double cc = la.coeff[a] * lb.coeff[b];
        out.T[a][b] +=
            w * cc * (J1C * k * cdot(Igv, fa) - (4.0 * J1C / k) * Ig);
        if (!self) out.K[a][b] += w * cc * cdot(IK, fa);
      }
    }
  }
  return out;
}

}  // namespace detail

/// A matrix accumulation target with a scalar weight.
struct AccumTarget {
  Eigen::MatrixXcd* mat;
  cplx weight;
};

/// Assemble the K and T operator matrices for wavenumber k, adding
/// weight * K into every k_target and weight * T into every t_target.
/// Both K and T are symmetric; pairs are computed once and mirrored.
inline void assemble_kt(const TriangleMesh& mesh, const RwgBasisSet& basis,
                        cplx k, const std::vector<AccumTarget>& k_targets,
                        const std::vector<AccumTarget>& t_targets,
                        const AssemblyOptions& opt = {}) {
  using namespace detail;
  const int nt = mesh.num_triangles();
  const int n = basis.size();
  for (const auto& t : k_targets)
    if (t.mat->rows() != n || t.mat->cols() != n)
      throw DimensionMismatch("assemble_kt: target size mismatch");
  for (const auto& t : t_targets)
    if (t.mat->rows() != n || t.mat->cols() != n)
      throw DimensionMismatch("assemble_kt: target size mismatch");

  auto reg_q = physical_points(mesh, triangle_rule(opt.regular_points));
  auto out_q = physical_points(mesh, triangle_rule(opt.singular_outer_points));
  auto in_q = physical_points(mesh, triangle_rule(opt.singular_inner_points));
  auto loc = local_bases(mesh, basis);

  std::vector<double> radius(nt);
  for (int t = 0; t < nt; ++t) {
    double r = 0.0;
    for (int v : mesh.triangles[t])
      r = std::max(r, (mesh.vertices[v] - mesh.centroids[t]).norm());
    radius[t] = r;
  }

  for (int ta = 0; ta < nt; ++ta) {
    for (int tb = ta; tb < nt; ++tb) {
      int shared = 0;
      for (int u : mesh.triangles[ta])
        for (int v : mesh.triangles[tb])
          if (u == v) ++shared;
      const double gap = (mesh.centroids[ta] - mesh.centroids[tb]).norm();
      const bool close =
          (ta == tb) || shared > 0 ||
          gap < opt.near_ratio * (radius[ta] + radius[tb]);

      Pair33 pv = close ? singular_pair(k, mesh, ta, tb, out_q[ta], in_q[tb],
                                        loc[ta], loc[tb])
                        : regular_pair(k, reg_q[ta], reg_q[tb], loc[ta],
                                       loc[tb]);

      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) {
          const int m = loc[ta].edge[a];
          const int nn = loc[tb].edge[b];
          // symmetrize the self block so the matrices come out exactly
          // symmetric; off-diagonal pairs are mirrored instead
          const cplx kv =
              (ta == tb) ? 0.5 * (pv.K[a][b] + pv.K[b][a]) : pv.K[a][b];
          const cplx tv =
              (ta == tb) ? 0.5 * (pv.T[a][b] + pv.T[b][a]) : pv.T[a][b];
          for (const auto& t : k_targets) {
            (*t.mat)(m, nn) += t.weight * kv;
            if (ta != tb) (*t.mat)(nn, m) += t.weight * kv;
          }
          for (const auto& t : t_targets) {
            (*t.mat)(m, nn) += t.weight * tv;
            if (ta != tb) (*t.mat)(nn, m) += t.weight * tv;
          }
        }
    }
  }
}

struct OperatorMatrices {
  Eigen::MatrixXcd K, T;
};

inline OperatorMatrices assemble_operators(const TriangleMesh& mesh,
                                           const RwgBasisSet& basis, cplx k,
                                           const AssemblyOptions& opt = {}) {
  const int n = basis.size();
  OperatorMatrices out{Eigen::MatrixXcd::Zero(n, n),
                       Eigen::MatrixXcd::Zero(n, n)};
  assemble_kt(mesh, basis, k, {{&out.K, 1.0}}, {{&out.T, 1.0}}, opt);
  return out;
}

/// Coupled two-medium system. With A = K1 + K2, B = eta1 T1 + eta2 T2 and
/// C = T1/eta1 + T2/eta2 the equations read
///   A m + B j = vE
///  -C m + A j = vH
/// stored either K-diagonal (unknowns [m; j]) or T-diagonal ([j; m]). The
/// off-diagonal signs are pinned by the interior extinction identity: the
/// projected exact currents j = n x H, m = -n x E of a plane wave in an
/// all-vacuum configuration satisfy this system to discretization accuracy.
struct PmchwtSystem {
  int n = 0;
  Medium exterior, interior;
  Eigen::MatrixXcd A, B, C;

  Eigen::VectorXcd apply_kdiag(const Eigen::VectorXcd& x) const {
    check(x);
    Eigen::VectorXcd y(2 * n);
    y.head(n) = A * x.head(n) + B * x.tail(n);
    y.tail(n) = -C * x.head(n) + A * x.tail(n);
    return y;
  }

  Eigen::VectorXcd apply_tdiag(const Eigen::VectorXcd& x) const {
    check(x);
    Eigen::VectorXcd y(2 * n);
    y.head(n) = B * x.head(n) + A * x.tail(n);
    y.tail(n) = A * x.head(n) - C * x.tail(n);
    return y;
  }

  Eigen::MatrixXcd dense_kdiag() const {
    Eigen::MatrixXcd z(2 * n, 2 * n);
    z.topLeftCorner(n, n) = A;
    z.topRightCorner(n, n) = B;
    z.bottomLeftCorner(n, n) = -C;
    z.bottomRightCorner(n, n) = A;
    return z;
  }

  Eigen::MatrixXcd dense_tdiag() const {
    Eigen::MatrixXcd z(2 * n, 2 * n);
    z.topLeftCorner(n, n) = B;
    z.topRightCorner(n, n) = A;
    z.bottomLeftCorner(n, n) = A;
    z.bottomRightCorner(n, n) = -C;
    return z;
  }

  /// Diagonal of the T-diagonal matrix: [diag(B); diag(-C)].
  Eigen::VectorXcd tdiag_diagonal() const {
    Eigen::VectorXcd d(2 * n);
    d.head(n) = B.diagonal();
    d.tail(n) = -C.diagonal();
    return d;
  }

  /// T-diagonal block restricted to one edge subset (both J and M halves).
  Eigen::MatrixXcd tdiag_submatrix(const std::vector<int>& cell) const {
    const Eigen::Index s = static_cast<Eigen::Index>(cell.size());
    Eigen::MatrixXcd z(2 * s, 2 * s);
    z.topLeftCorner(s, s) = B(cell, cell);
    z.topRightCorner(s, s) = A(cell, cell);
    z.bottomLeftCorner(s, s) = A(cell, cell);
    z.bottomRightCorner(s, s) = -C(cell, cell);
    return z;
  }

  /// K-diagonal block coupling the unknowns of cell `cols` into the
  /// equations tested on cell `rows` (2|rows| x 2|cols|).
  Eigen::MatrixXcd kdiag_block(const std::vector<int>& rows,
                               const std::vector<int>& cols) const {
    const Eigen::Index r = static_cast<Eigen::Index>(rows.size());
    const Eigen::Index c = static_cast<Eigen::Index>(cols.size());
    Eigen::MatrixXcd z(2 * r, 2 * c);
    z.topLeftCorner(r, c) = A(rows, cols);
    z.topRightCorner(r, c) = B(rows, cols);
    z.bottomLeftCorner(r, c) = -C(rows, cols);
    z.bottomRightCorner(r, c) = A(rows, cols);
    return z;
  }

  Eigen::MatrixXcd kdiag_submatrix(const std::vector<int>& cell) const {
    return kdiag_block(cell, cell);
  }

  /// K-diagonal action on a block of column vectors (each ordered [m; j]).
  Eigen::MatrixXcd apply_kdiag_multi(const Eigen::MatrixXcd& x) const {
    if (x.rows() != 2 * n)
      throw DimensionMismatch("PmchwtSystem: block row count != 2n");
    Eigen::MatrixXcd y(2 * n, x.cols());
    y.topRows(n) = A * x.topRows(n) + B * x.bottomRows(n);
    y.bottomRows(n) = -C * x.topRows(n) + A * x.bottomRows(n);
    return y;
  }

 private:
  void check(const Eigen::VectorXcd& x) const {
    if (x.size() != 2 * n)
      throw DimensionMismatch("PmchwtSystem: vector length != 2n");
  }
};

inline PmchwtSystem assemble_pmchwt(const TriangleMesh& mesh,
                                    const RwgBasisSet& basis,
                                    const Medium& exterior,
                                    const Medium& interior,
                                    const AssemblyOptions& opt = {}) {
  PmchwtSystem s;
  s.n = basis.size();
  s.exterior = exterior;
  s.interior = interior;
  s.A = Eigen::MatrixXcd::Zero(s.n, s.n);
  s.B = Eigen::MatrixXcd::Zero(s.n, s.n);
  s.C = Eigen::MatrixXcd::Zero(s.n, s.n);
  for (const Medium& med : {exterior, interior})
    assemble_kt(mesh, basis, med.k(), {{&s.A, 1.0}},
                {{&s.B, med.eta()}, {&s.C, 1.0 / med.eta()}}, opt);
  return s;
}

/// Gram matrix [G]_ij = int (n x f_i) . f_j dG. Exactly antisymmetric by
/// construction: each pair is integrated once and mirrored with its sign.
/// The integrand is quadratic, so the default rule is exact.
inline Eigen::SparseMatrix<double> assemble_gram(const TriangleMesh& mesh,
                                                 const RwgBasisSet& basis,
                                                 int npoints = 6) {
  const auto& rule = triangle_rule(npoints);
  auto loc = detail::local_bases(mesh, basis);
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(mesh.num_triangles() * 6);
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles[t];
    const Vec3& nrm = mesh.normals[t];
    for (int a = 0; a < 3; ++a)
      for (int b = a + 1; b < 3; ++b) {
        double acc = 0.0;
        for (std::size_t q = 0; q < rule.size(); ++q) {
          const auto& bc = rule.points[q];
          Vec3 x = bc[0] * mesh.vertices[tri[0]] +
                   bc[1] * mesh.vertices[tri[1]] +
                   bc[2] * mesh.vertices[tri[2]];
          acc += rule.weights[q] *
                 nrm.dot((x - loc[t].p[a]).cross(x - loc[t].p[b]));
        }
        double val =
            loc[t].coeff[a] * loc[t].coeff[b] * mesh.areas[t] * acc;
        trip.emplace_back(loc[t].edge[a], loc[t].edge[b], val);
        trip.emplace_back(loc[t].edge[b], loc[t].edge[a], -val);
      }
  }
  Eigen::SparseMatrix<double> g(basis.size(), basis.size());
  g.setFromTriplets(trip.begin(), trip.end());
  return g;
}

/// v_m = int f_m . F dG for an arbitrary vector field F(r).
template <class Field>
Eigen::VectorXcd project_field(const TriangleMesh& mesh,
                               const RwgBasisSet& basis, Field&& field,
                               int npoints = 6) {
  const auto& rule = triangle_rule(npoints);
  auto loc = detail::local_bases(mesh, basis);
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(basis.size());
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles[t];
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const auto& bc = rule.points[q];
      Vec3 x = bc[0] * mesh.vertices[tri[0]] + bc[1] * mesh.vertices[tri[1]] +
               bc[2] * mesh.vertices[tri[2]];
      CVec3 F = field(x);
      double w = rule.weights[q] * mesh.areas[t];
      for (int a = 0; a < 3; ++a)
        v(loc[t].edge[a]) +=
            w * loc[t].coeff[a] * detail::cdot(F, x - loc[t].p[a]);
    }
  }
  return v;
}

/// PMCHWT right-hand side: vE_m = int f_m . E_inc, vH_m = -int f_m . H_inc.
struct Excitation {
  Eigen::VectorXcd vE, vH;
};

inline Excitation assemble_excitation(const TriangleMesh& mesh,
                                      const RwgBasisSet& basis,
                                      const PlaneWave& wave,
                                      const Medium& exterior,
                                      int npoints = 6) {
  Excitation ex;
  ex.vE = project_field(mesh, basis, [&](const Vec3& r) {
    return plane_wave_fields(wave, exterior, r).first;
  }, npoints);
  ex.vH = -project_field(mesh, basis, [&](const Vec3& r) {
    return plane_wave_fields(wave, exterior, r).second;
  }, npoints);
  return ex;
}

}  // namespace cbem
