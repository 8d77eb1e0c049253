#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <functional>
#include <vector>

#include "cbem/em.hpp"
#include "cbem/errors.hpp"

namespace cbem {

using MatVec = std::function<Eigen::VectorXcd(const Eigen::VectorXcd&)>;

struct GmresOptions {
  double tol = 1e-6;     // relative residual target, ||b - A x|| / ||b||
  int max_iter = 2000;   // total Arnoldi steps across all cycles
  int restart = 0;       // 0: full GMRES (no restart)
};

struct GmresResult {
  Eigen::VectorXcd x;
  bool converged = false;
  int iterations = 0;
  std::vector<double> residual_history;  // relative, one entry per step
};

/// Right-preconditioned GMRES with modified Gram-Schmidt Arnoldi, one
/// conditional reorthogonalization pass and Givens-rotation least squares.
/// precond (if given) applies M^{-1}; the returned x solves A x = b, so the
/// residual history is the true relative residual either way.
inline GmresResult gmres(const MatVec& apply, const Eigen::VectorXcd& b,
                         const GmresOptions& opt = {},
                         const MatVec& precond = nullptr,
                         const Eigen::VectorXcd* x0 = nullptr) {
  using Eigen::VectorXcd;
  if (!(opt.tol > 0.0) || opt.max_iter < 1)
    throw InvalidParam("gmres: tol must be > 0 and max_iter >= 1");

  const Eigen::Index n = b.size();
  GmresResult out;
  out.x = x0 ? *x0 : VectorXcd::Zero(n);

  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    out.x = VectorXcd::Zero(n);
    out.converged = true;
    return out;
  }

  int total = 0;
  while (true) {
    VectorXcd r = b - apply(out.x);
    double beta = r.norm();
    double rel = beta / bnorm;
    if (total == 0) out.residual_history.push_back(rel);
    if (rel <= opt.tol) {
      out.converged = true;
      return out;
    }
    if (total >= opt.max_iter) return out;

    const int m = (opt.restart > 0)
                      ? std::min(opt.restart, opt.max_iter - total)
                      : opt.max_iter - total;
    std::vector<VectorXcd> V;
    V.reserve(m + 1);
    V.push_back(r / beta);
    Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(m + 1, m);
    std::vector<cplx> cs(m), sn(m);
    VectorXcd g = VectorXcd::Zero(m + 1);
    g(0) = beta;

    int j = 0;
    bool breakdown = false;
    for (; j < m; ++j) {
      VectorXcd w = apply(precond ? precond(V[j]) : V[j]);
      const double wnorm0 = w.norm();
      for (int i = 0; i <= j; ++i) {
        cplx h = V[i].dot(w);
        H(i, j) = h;
        w -= h * V[i];
      }
      // conditional reorthogonalization when cancellation was severe
      if (w.norm() < wnorm0 / std::sqrt(2.0)) {
        for (int i = 0; i <= j; ++i) {
          cplx h = V[i].dot(w);
          H(i, j) += h;
          w -= h * V[i];
        }
      }
      const double hnext = w.norm();
      H(j + 1, j) = hnext;

      // apply accumulated rotations to the new column
      for (int i = 0; i < j; ++i) {
        cplx t = std::conj(cs[i]) * H(i, j) + std::conj(sn[i]) * H(i + 1, j);
        H(i + 1, j) = -sn[i] * H(i, j) + cs[i] * H(i + 1, j);
        H(i, j) = t;
      }
      // new rotation zeroing H(j+1, j)
      {
        cplx a = H(j, j);
        double bb = hnext;
        double denom = std::sqrt(std::norm(a) + bb * bb);
        if (denom == 0.0) {  // dead column: use the space built so far
          ++total;
          breakdown = true;
          break;
        }
        cs[j] = a / denom;
        sn[j] = bb / denom;
        H(j, j) = denom;
        H(j + 1, j) = 0.0;
        g(j + 1) = -sn[j] * g(j);
        g(j) = std::conj(cs[j]) * g(j);
      }

      ++total;
      rel = std::abs(g(j + 1)) / bnorm;
      out.residual_history.push_back(rel);
      out.iterations = total;

      if (rel <= opt.tol || total >= opt.max_iter) {
        ++j;
        break;
      }
      if (hnext == 0.0) {  // happy breakdown
        breakdown = true;
        ++j;
        break;
      }
      V.push_back(w / hnext);
    }

    if (j > 0) {
      // back substitution on the triangularized system
      VectorXcd y(j);
      for (int i = j - 1; i >= 0; --i) {
        cplx s = g(i);
        for (int l = i + 1; l < j; ++l) s -= H(i, l) * y(l);
        if (H(i, i) == cplx(0.0))
          throw SolverBreakdown("gmres: singular Hessenberg diagonal");
        y(i) = s / H(i, i);
      }
      VectorXcd u = VectorXcd::Zero(n);
      for (int i = 0; i < j; ++i) u += y(i) * V[i];
      out.x += precond ? precond(u) : u;
    }

    if (rel <= opt.tol) {
      out.converged = true;
      return out;
    }
    if (breakdown) {
      // exact solution reached within this Krylov space, verify and return
      double final_rel = (b - apply(out.x)).norm() / bnorm;
      out.converged = final_rel <= opt.tol;
      if (!out.converged)
        throw SolverBreakdown("gmres: breakdown before convergence");
      return out;
    }
    if (total >= opt.max_iter) return out;
    // else: restart cycle continues
  }
}

/// Partial-pivot LU with an explicit near-singularity check.
inline Eigen::PartialPivLU<Eigen::MatrixXcd> lu_factor_checked(
    const Eigen::MatrixXcd& a) {
  if (a.rows() != a.cols())
    throw DimensionMismatch("lu_factor_checked: matrix must be square");
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(a);
  const auto& u = lu.matrixLU();
  double scale = a.cwiseAbs().maxCoeff();
  double dmin = u.diagonal().cwiseAbs().minCoeff();
  if (!(dmin > 1e-14 * std::max(scale, 1e-300)))
    throw SingularMatrix("lu_factor_checked: matrix is numerically singular");
  return lu;
}

inline Eigen::VectorXcd lu_solve(const Eigen::MatrixXcd& a,
                                 const Eigen::VectorXcd& b) {
  if (a.rows() != b.size())
    throw DimensionMismatch("lu_solve: size mismatch");
  return lu_factor_checked(a).solve(b);
}

}  // namespace cbem
