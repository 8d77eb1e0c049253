#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <optional>
#include <utility>
#include <vector>

#include "cbem/em.hpp"
#include "cbem/errors.hpp"
#include "cbem/gmres.hpp"
#include "cbem/mesh.hpp"
#include "cbem/operators.hpp"
#include "cbem/rwg.hpp"

namespace cbem {

/// How the per-cell current sets that seed the characteristic basis
/// functions are produced, and how the SVD truncates them.
struct CbfGenerationConfig {
  enum class Generator { primary, ipcbf_gmres, ipcbf_jacobi };
  Generator generator = Generator::primary;

  // direction grid for the generation excitations
  double theta_s = 0.0, dtheta = 30.0;
  int n_theta = 12;
  double phi_s = 0.0, dphi = 30.0;
  int n_phi = 6;
  std::vector<int> pols = {0, 1};

  double delta_r = 1e-2;   // generation residual allowance (ipcbf only)
  int ipcbf_max_iter = 2000;
  int jacobi_p = 1;        // block-Jacobi iteration count (ipcbf_jacobi)

  // exactly one of these selects the truncation rule
  std::optional<double> delta_svd = 1e-3;  // keep sigma_i / sigma_1 >= value
  std::optional<int> group_l;              // keep sum_{l'<=l} 2(2l'+1) values

  std::vector<PlaneWave> waves() const {
    return direction_grid(theta_s, dtheta, n_theta, phi_s, dphi, n_phi, pols);
  }

  void validate() const {
    if (generator != Generator::primary &&
        !(delta_r > 0.0 && delta_r < 1.0))
      throw InvalidParam("cbf generation: delta_r must lie in (0, 1)");
    if (delta_svd.has_value() == group_l.has_value())
      throw InvalidParam(
          "cbf generation: exactly one of delta_svd / group_l must be set");
    if (delta_svd && !(*delta_svd > 0.0 && *delta_svd < 1.0))
      throw InvalidParam("cbf generation: delta_svd must lie in (0, 1)");
    if (group_l && *group_l < 1)
      throw InvalidParam("cbf generation: group cutoff l must be >= 1");
    if (generator == Generator::ipcbf_jacobi && jacobi_p < 1)
      throw InvalidParam("cbf generation: jacobi_p must be >= 1");
  }
};

/// Dual basis pair for one cell: columns of Cj (Cm) are electric (magnetic)
/// current patterns over the cell's RWG coefficients; sigma holds the
/// positive singular values, descending.
struct CellCbf {
  Eigen::MatrixXcd Cj, Cm;  // N_m x L_m each
  Eigen::VectorXd sigma;    // length L_m

  int L() const { return static_cast<int>(sigma.size()); }
};

struct CbfSet {
  std::vector<CellCbf> cells;

  int total_L() const {
    int s = 0;
    for (const auto& c : cells) s += c.L();
    return s;
  }
};

/// Excitation block matrix [vE; vH] for a batch of incident waves (2N x s).
inline Eigen::MatrixXcd assemble_excitation_matrix(
    const TriangleMesh& mesh, const RwgBasisSet& basis,
    const std::vector<PlaneWave>& waves, const Medium& exterior,
    int npoints = 6) {
  const int n = basis.size();
  Eigen::MatrixXcd v(2 * n, static_cast<Eigen::Index>(waves.size()));
  for (std::size_t w = 0; w < waves.size(); ++w) {
    Excitation ex = assemble_excitation(mesh, basis, waves[w], exterior,
                                        npoints);
    v.col(w).head(n) = ex.vE;
    v.col(w).tail(n) = ex.vH;
  }
  return v;
}

/// Primary generation: per cell, solve the cell-diagonal block system
/// Z_mm J_m = V_m by one LU for all excitation columns. Couplings between
/// cells are ignored by construction. Returns one 2N_m x s block per cell,
/// rows ordered [magnetic; electric].
inline std::vector<Eigen::MatrixXcd> generate_primary(
    const CellPartition& partition, const PmchwtSystem& sys,
    const Eigen::MatrixXcd& v) {
  if (v.rows() != 2 * sys.n)
    throw DimensionMismatch("generate_primary: excitation rows != 2N");
  std::vector<Eigen::MatrixXcd> out;
  out.reserve(partition.cells.size());
  for (int m = 0; m < partition.num_cells(); ++m) {
    const auto& cell = partition.cells[m];
    if (cell.empty())
      throw InvalidParam("generate_primary: empty cell " + std::to_string(m));
    const Eigen::Index s = static_cast<Eigen::Index>(cell.size());
    Eigen::MatrixXcd vm(2 * s, v.cols());
    for (Eigen::Index i = 0; i < s; ++i) {
      vm.row(i) = v.row(cell[i]);
      vm.row(s + i) = v.row(sys.n + cell[i]);
    }
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu;
    try {
      lu = lu_factor_checked(sys.kdiag_submatrix(cell));
    } catch (const SingularMatrix&) {
      throw SingularMatrix("generate_primary: singular diagonal block in cell " +
                           std::to_string(m));
    }
    out.push_back(lu.solve(vm));
  }
  return out;
}

namespace detail {

/// Right diagonal preconditioner of the T-diagonal arrangement.
inline MatVec tdiag_jacobi(const PmchwtSystem& sys) {
  Eigen::VectorXcd dinv = sys.tdiag_diagonal().cwiseInverse();
  return [dinv](const Eigen::VectorXcd& x) {
    return Eigen::VectorXcd(dinv.asDiagonal() * x);
  };
}

/// Restrict a global coefficient vector in [m; j] ordering to the per-cell
/// generation blocks [magnetic; electric].
inline void scatter_to_cells(const CellPartition& partition, int n,
                             const Eigen::VectorXcd& x, Eigen::Index col,
                             std::vector<Eigen::MatrixXcd>& blocks) {
  for (int m = 0; m < partition.num_cells(); ++m) {
    const auto& cell = partition.cells[m];
    const Eigen::Index s = static_cast<Eigen::Index>(cell.size());
    for (Eigen::Index i = 0; i < s; ++i) {
      blocks[m](i, col) = x(cell[i]);
      blocks[m](s + i, col) = x(n + cell[i]);
    }
  }
}

}  // namespace detail

/// IPCBF generation, GMRES variant: each excitation column is solved on the
/// full T-diagonal baseline system (Jacobi right preconditioner) to the
/// loose residual delta_r, and the approximate global solutions are
/// restricted to the cells. Non-convergent columns keep their best iterate;
/// the count is reported through `unconverged` when given.
inline std::vector<Eigen::MatrixXcd> generate_ipcbf(
    const CellPartition& partition, const PmchwtSystem& sys,
    const Eigen::MatrixXcd& v, double delta_r, int max_iter = 2000,
    int* unconverged = nullptr) {
  if (!(delta_r > 0.0 && delta_r < 1.0))
    throw InvalidParam("generate_ipcbf: delta_r must lie in (0, 1)");
  if (v.rows() != 2 * sys.n)
    throw DimensionMismatch("generate_ipcbf: excitation rows != 2N");
  const int n = sys.n;
  std::vector<Eigen::MatrixXcd> blocks;
  for (const auto& cell : partition.cells)
    blocks.emplace_back(2 * cell.size(), v.cols());

  MatVec apply = [&sys](const Eigen::VectorXcd& x) {
    return sys.apply_tdiag(x);
  };
  MatVec precond = detail::tdiag_jacobi(sys);
  GmresOptions opt;
  opt.tol = delta_r;
  opt.max_iter = max_iter;
  int bad = 0;
  for (Eigen::Index w = 0; w < v.cols(); ++w) {
    // T-diagonal unknown ordering is [j; m]; the rhs rows are unchanged
    GmresResult r = gmres(apply, v.col(w), opt, precond);
    if (!r.converged) ++bad;
    Eigen::VectorXcd x(2 * n);
    x.head(n) = r.x.tail(n);  // magnetic
    x.tail(n) = r.x.head(n);  // electric
    detail::scatter_to_cells(partition, n, x, w, blocks);
  }
  if (unconverged) *unconverged = bad;
  return blocks;
}

/// IPCBF generation, block-Jacobi variant with p iterations:
///   J_m^(p) = Z_mm^{-1} (V_m - sum_{n != m} Z_mn J_n^(p-1)),  J^(0) = 0.
/// p = 1 therefore reduces to primary generation.
inline std::vector<Eigen::MatrixXcd> generate_ipcbf_jacobi(
    const CellPartition& partition, const PmchwtSystem& sys,
    const Eigen::MatrixXcd& v, int p) {
  if (p < 1) throw InvalidParam("generate_ipcbf_jacobi: p must be >= 1");
  const int ncell = partition.num_cells();
  std::vector<Eigen::PartialPivLU<Eigen::MatrixXcd>> lus;
  std::vector<Eigen::MatrixXcd> vm(ncell);
  for (int m = 0; m < ncell; ++m) {
    const auto& cell = partition.cells[m];
    const Eigen::Index s = static_cast<Eigen::Index>(cell.size());
    vm[m].resize(2 * s, v.cols());
    for (Eigen::Index i = 0; i < s; ++i) {
      vm[m].row(i) = v.row(cell[i]);
      vm[m].row(s + i) = v.row(sys.n + cell[i]);
    }
    try {
      lus.push_back(lu_factor_checked(sys.kdiag_submatrix(cell)));
    } catch (const SingularMatrix&) {
      throw SingularMatrix(
          "generate_ipcbf_jacobi: singular diagonal block in cell " +
          std::to_string(m));
    }
  }
  std::vector<Eigen::MatrixXcd> cur(ncell), prev(ncell);
  for (int m = 0; m < ncell; ++m)
    prev[m] = Eigen::MatrixXcd::Zero(vm[m].rows(), vm[m].cols());
  for (int it = 0; it < p; ++it) {
    for (int m = 0; m < ncell; ++m) {
      Eigen::MatrixXcd rhs = vm[m];
      for (int nn = 0; nn < ncell; ++nn)
        if (nn != m)
          rhs -= sys.kdiag_block(partition.cells[m], partition.cells[nn]) *
                 prev[nn];
      cur[m] = lus[m].solve(rhs);
    }
    prev = cur;
  }
  return cur;
}

/// Dense restriction of the (antisymmetric, sparse) RWG Gram matrix to one
/// cell's edge set.
inline Eigen::MatrixXd gram_block(const Eigen::SparseMatrix<double>& gram,
                                  const std::vector<int>& cell) {
  const Eigen::Index s = static_cast<Eigen::Index>(cell.size());
  std::vector<Eigen::Index> local(gram.rows(), -1);
  for (Eigen::Index i = 0; i < s; ++i) local[cell[i]] = i;
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(s, s);
  for (Eigen::Index j = 0; j < s; ++j)
    for (Eigen::SparseMatrix<double>::InnerIterator it(gram, cell[j]); it;
         ++it)
      if (local[it.row()] >= 0) g(local[it.row()], j) = it.value();
  return g;
}

/// Dual orthogonalization of one cell's generation currents. The coupled
/// Gram G'_m = (J^M)^H G_m J^J is SVD-factored; truncation keeps either the
/// singular values with sigma_i/sigma_1 >= delta_svd (ties kept) or the
/// first sum_{l'<=l} 2(2l'+1) of them, capped at the column count. The
/// returned pair satisfies (Cm)^H G_m Cj = diag(sigma).
inline CellCbf orthogonalize_dual(const Eigen::MatrixXcd& Jj,
                                  const Eigen::MatrixXcd& Jm,
                                  const Eigen::MatrixXd& Gm,
                                  const std::optional<double>& delta_svd,
                                  const std::optional<int>& group_l) {
  if (Jj.cols() != Jm.cols() || Jj.rows() != Jm.rows() ||
      Gm.rows() != Jj.rows() || Gm.cols() != Jj.rows())
    throw DimensionMismatch("orthogonalize_dual: inconsistent dimensions");
  if (delta_svd.has_value() == group_l.has_value())
    throw InvalidParam(
        "orthogonalize_dual: exactly one truncation rule must be set");
  Eigen::MatrixXcd gp = Jm.adjoint() * (Gm.cast<cplx>() * Jj);
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(
      gp, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();  // descending
  const Eigen::Index s = sv.size();
  Eigen::Index L = 0;
  if (delta_svd) {
    for (Eigen::Index i = 0; i < s; ++i)
      if (sv(i) > 0.0 && sv(i) >= *delta_svd * sv(0)) L = i + 1;
  } else {
    Eigen::Index want = 2LL * (*group_l) * (*group_l + 2);
    L = std::min(want, s);
    while (L > 0 && !(sv(L - 1) > 0.0)) --L;
  }
  if (L == 0)
    throw RankZero("orthogonalize_dual: no singular value above threshold");
  CellCbf out;
  out.sigma = sv.head(L);
  out.Cm = Jm * svd.matrixU().leftCols(L);
  out.Cj = Jj * svd.matrixV().leftCols(L);
  return out;
}

/// Full generation + orthogonalization pipeline for a partition.
inline CbfSet build_cbfs(const TriangleMesh& mesh, const RwgBasisSet& basis,
                         const CellPartition& partition,
                         const PmchwtSystem& sys,
                         const Eigen::SparseMatrix<double>& gram,
                         const CbfGenerationConfig& cfg,
                         int* unconverged = nullptr) {
  cfg.validate();
  std::vector<PlaneWave> waves = cfg.waves();
  Eigen::MatrixXcd v =
      assemble_excitation_matrix(mesh, basis, waves, sys.exterior);
  std::vector<Eigen::MatrixXcd> blocks;
  switch (cfg.generator) {
    case CbfGenerationConfig::Generator::primary:
      blocks = generate_primary(partition, sys, v);
      break;
    case CbfGenerationConfig::Generator::ipcbf_gmres:
      blocks = generate_ipcbf(partition, sys, v, cfg.delta_r,
                              cfg.ipcbf_max_iter, unconverged);
      break;
    case CbfGenerationConfig::Generator::ipcbf_jacobi:
      blocks = generate_ipcbf_jacobi(partition, sys, v, cfg.jacobi_p);
      break;
  }
  CbfSet set;
  for (int m = 0; m < partition.num_cells(); ++m) {
    const Eigen::Index s =
        static_cast<Eigen::Index>(partition.cells[m].size());
    Eigen::MatrixXd gm = gram_block(gram, partition.cells[m]);
    set.cells.push_back(orthogonalize_dual(blocks[m].bottomRows(s),
                                           blocks[m].topRows(s), gm,
                                           cfg.delta_svd, cfg.group_l));
  }
  return set;
}

/// Reduced CBFM system with the Gram-based right preconditioner.
struct ReducedSystem {
  int n = 0;     // RWG edge count N
  int ncbf = 0;  // 2 sum_m L_m
  Eigen::SparseMatrix<cplx> Cjm, Cmj;  // 2N x ncbf expansion matrices
  Eigen::MatrixXcd Zr;                 // (C^JM)^H Z C^MJ
  Eigen::SparseMatrix<cplx> Gcbf;      // (C^JM)^H G_ffff C^MJ
  Eigen::VectorXcd Dcbf;               // reciprocal diagonal of Gcbf
  bool gcbf_diagonal = false;
  Eigen::VectorXcd vr;                 // (C^JM)^H v
};

inline ReducedSystem build_reduced(const CellPartition& partition,
                                   const CbfSet& cbf,
                                   const PmchwtSystem& sys,
                                   const Eigen::SparseMatrix<double>& gram,
                                   const Eigen::VectorXcd& v) {
  if (static_cast<int>(cbf.cells.size()) != partition.num_cells())
    throw DimensionMismatch("build_reduced: cbf/partition cell counts differ");
  if (v.size() != 2 * sys.n)
    throw DimensionMismatch("build_reduced: rhs length != 2N");
  const int n = sys.n;
  const int lsum = cbf.total_L();
  ReducedSystem rs;
  rs.n = n;
  rs.ncbf = 2 * lsum;

  // column blocks: cells ascending, first the leading section then the
  // trailing one; C^MJ expands [magnetic; electric], C^JM tests it
  std::vector<Eigen::Triplet<cplx>> tjm, tmj;
  int col = 0;
  for (int m = 0; m < partition.num_cells(); ++m) {
    const auto& cell = partition.cells[m];
    const CellCbf& c = cbf.cells[m];
    if (c.Cj.rows() != static_cast<Eigen::Index>(cell.size()))
      throw DimensionMismatch("build_reduced: cell row count mismatch");
    for (int l = 0; l < c.L(); ++l)
      for (std::size_t i = 0; i < cell.size(); ++i) {
        tjm.emplace_back(cell[i], col + l, c.Cj(i, l));
        tmj.emplace_back(cell[i], col + l, c.Cm(i, l));
      }
    col += c.L();
  }
  for (int m = 0; m < partition.num_cells(); ++m) {
    const auto& cell = partition.cells[m];
    const CellCbf& c = cbf.cells[m];
    for (int l = 0; l < c.L(); ++l)
      for (std::size_t i = 0; i < cell.size(); ++i) {
        tjm.emplace_back(n + cell[i], col + l, c.Cm(i, l));
        tmj.emplace_back(n + cell[i], col + l, c.Cj(i, l));
      }
    col += c.L();
  }
  rs.Cjm.resize(2 * n, rs.ncbf);
  rs.Cmj.resize(2 * n, rs.ncbf);
  rs.Cjm.setFromTriplets(tjm.begin(), tjm.end());
  rs.Cmj.setFromTriplets(tmj.begin(), tmj.end());

  rs.Zr = rs.Cjm.adjoint() * sys.apply_kdiag_multi(Eigen::MatrixXcd(rs.Cmj));

  Eigen::SparseMatrix<cplx> gf(2 * n, 2 * n);
  {
    std::vector<Eigen::Triplet<cplx>> tg;
    tg.reserve(2 * gram.nonZeros());
    for (int j = 0; j < gram.outerSize(); ++j)
      for (Eigen::SparseMatrix<double>::InnerIterator it(gram, j); it; ++it) {
        tg.emplace_back(it.row(), it.col(), cplx(it.value()));
        tg.emplace_back(n + it.row(), n + it.col(), cplx(it.value()));
      }
    gf.setFromTriplets(tg.begin(), tg.end());
  }
  rs.Gcbf = rs.Cjm.adjoint() * gf * rs.Cmj;
  rs.Gcbf.prune([](Eigen::Index, Eigen::Index, const cplx& x) {
    return x != cplx(0.0);
  });

  Eigen::VectorXcd diag(rs.ncbf);
  double sigma_max = 0.0, offdiag_max = 0.0;
  for (int j = 0; j < rs.Gcbf.outerSize(); ++j)
    for (Eigen::SparseMatrix<cplx>::InnerIterator it(rs.Gcbf, j); it; ++it) {
      if (it.row() == it.col())
        sigma_max = std::max(sigma_max, std::abs(it.value()));
      else
        offdiag_max = std::max(offdiag_max, std::abs(it.value()));
    }
  for (int i = 0; i < rs.ncbf; ++i) diag(i) = rs.Gcbf.coeff(i, i);
  if (diag.cwiseAbs().minCoeff() <= 0.0)
    throw SingularMatrix("build_reduced: zero diagonal in the preconditioner");
  rs.Dcbf = diag.cwiseInverse();
  rs.gcbf_diagonal = offdiag_max < 1e-12 * sigma_max;
  rs.vr = rs.Cjm.adjoint() * v;
  return rs;
}

struct CbfmReport {
  GmresResult outer;
  int inner_iterations = 0;  // total over all preconditioner applications
};

/// Solve the reduced system. With the preconditioner enabled the outer GMRES
/// runs on Zr (Gcbf)^{-1}; Gcbf applications are exact divisions when it is
/// diagonal and inner GMRES solves (Dcbf preconditioner, tolerance 1e-5)
/// otherwise. Returns the recovered RWG coefficient vector [m; j].
inline std::pair<Eigen::VectorXcd, CbfmReport> solve_cbfm(
    const ReducedSystem& rs, double tol, int max_iter,
    bool use_precond = true) {
  MatVec apply = [&rs](const Eigen::VectorXcd& x) {
    return Eigen::VectorXcd(rs.Zr * x);
  };
  CbfmReport rep;
  MatVec precond;
  if (use_precond) {
    if (rs.gcbf_diagonal) {
      precond = [&rs](const Eigen::VectorXcd& x) {
        return Eigen::VectorXcd(rs.Dcbf.asDiagonal() * x);
      };
    } else {
      precond = [&rs, &rep](const Eigen::VectorXcd& x) {
        MatVec gapply = [&rs](const Eigen::VectorXcd& y) {
          return Eigen::VectorXcd(rs.Gcbf * y);
        };
        MatVec dprec = [&rs](const Eigen::VectorXcd& y) {
          return Eigen::VectorXcd(rs.Dcbf.asDiagonal() * y);
        };
        GmresOptions inner;
        inner.tol = 1e-5;
        inner.max_iter = rs.ncbf;
        GmresResult r = gmres(gapply, x, inner, dprec);
        if (!r.converged)
          throw InnerSolveFailure(
              "solve_cbfm: preconditioner solve did not converge");
        rep.inner_iterations += r.iterations;
        return r.x;
      };
    }
  }
  GmresOptions opt;
  opt.tol = tol;
  opt.max_iter = max_iter;
  rep.outer = gmres(apply, rs.vr, opt, precond);
  if (!rep.outer.converged)
    throw SolverBreakdown("solve_cbfm: outer GMRES did not converge");
  Eigen::VectorXcd j = rs.Cmj * rep.outer.x;
  return {j, rep};
}

/// Conventional iterative reference: T-diagonal arrangement with the plain
/// Jacobi right preconditioner. Returns the solution converted to [m; j]
/// ordering together with the solver report.
inline std::pair<Eigen::VectorXcd, GmresResult> solve_baseline_mom(
    const PmchwtSystem& sys, const Eigen::VectorXcd& v, double tol,
    int max_iter) {
  if (v.size() != 2 * sys.n)
    throw DimensionMismatch("solve_baseline_mom: rhs length != 2N");
  MatVec apply = [&sys](const Eigen::VectorXcd& x) {
    return sys.apply_tdiag(x);
  };
  GmresOptions opt;
  opt.tol = tol;
  opt.max_iter = max_iter;
  GmresResult r = gmres(apply, v, opt, detail::tdiag_jacobi(sys));
  if (!r.converged)
    throw SolverBreakdown("solve_baseline_mom: GMRES did not converge");
  Eigen::VectorXcd j(2 * sys.n);
  j.head(sys.n) = r.x.tail(sys.n);
  j.tail(sys.n) = r.x.head(sys.n);
  return {j, r};
}

}  // namespace cbem
