#pragma once

#include <chrono>
#include <cmath>
#include <filesystem>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "cbem/cbfm.hpp"
#include "cbem/config.hpp"
#include "cbem/io.hpp"
#include "cbem/mie.hpp"
#include "cbem/postprocess.hpp"

namespace cbem {

class Stopwatch {
 public:
  Stopwatch() : t0_(std::chrono::steady_clock::now()) {}
  double lap() {
    auto now = std::chrono::steady_clock::now();
    double s = std::chrono::duration<double>(now - t0_).count();
    t0_ = now;
    return s;
  }

 private:
  std::chrono::steady_clock::time_point t0_;
};

/// Structured run log: one JSON object per stage, written as JSON lines.
struct StageLog {
  std::vector<nlohmann::json> lines;

  void add(const std::string& stage, double seconds,
           nlohmann::json extra = nlohmann::json::object()) {
    extra["stage"] = stage;
    extra["seconds"] = seconds;
    lines.push_back(std::move(extra));
  }

  void write(const std::filesystem::path& path) const {
    std::string out;
    for (const auto& l : lines) {
      out += l.dump();
      out += '\n';
    }
    write_file_atomic(path, out);
  }
};

struct AssembledScene {
  TriangleMesh mesh;
  std::unique_ptr<RwgBasisSet> basis;
  CellPartition partition;
  PmchwtSystem sys;
  Eigen::SparseMatrix<double> gram;
};

inline TriangleMesh build_mesh(const MeshSpec& spec) {
  TriangleMesh unit;
  if (spec.source == "file") {
    unit = load_mesh(spec.path, spec.format);
  } else if (spec.shape == "sphere") {
    unit = generate_sphere(spec.diameter, spec.subdivisions);
  } else if (spec.shape == "cube") {
    unit = generate_cube(spec.side, spec.divisions);
  } else {
    unit = generate_cylinder(spec.radius, spec.height, spec.n_circ,
                             spec.n_axial);
  }
  if (spec.nx * spec.ny * spec.nz > 1)
    return replicate_array(unit, spec.nx, spec.ny, spec.nz, spec.spacing);
  return unit;
}

inline AssembledScene assemble_scene(const SceneConfig& cfg,
                                     StageLog* log = nullptr) {
  Stopwatch sw;
  AssembledScene s;
  s.mesh = build_mesh(cfg.mesh);
  s.basis = std::make_unique<RwgBasisSet>(s.mesh);
  if (cfg.partition.mode == "lattice")
    s.partition = partition_lattice(*s.basis, s.mesh, cfg.partition.side);
  else
    s.partition = partition_per_component(*s.basis, s.mesh);
  double mesh_s = sw.lap();
  s.sys = assemble_pmchwt(s.mesh, *s.basis, Medium(),
                          Medium(cfg.eps_r, cfg.mu_r));
  s.gram = assemble_gram(s.mesh, *s.basis);
  if (log) {
    log->add("mesh", mesh_s,
             {{"unknowns", s.basis->size()},
              {"triangles", s.mesh.num_triangles()},
              {"cells", s.partition.num_cells()}});
    log->add("assembly", sw.lap());
  }
  return s;
}

/// Result of one monostatic direction solve.
struct DirectionResult {
  Eigen::VectorXcd mj;  // coefficients ordered [m; j]
  int iterations = 0;
  int inner_iterations = 0;
  std::vector<double> residual_history;
  bool ok = true;
  std::string error_type, error_message;
};

/// One prepared solver instance; preparation work (CBF generation, reduced
/// assembly, dense factorization) happens once and is reused across sweep
/// directions.
class SolverRunner {
 public:
  SolverRunner(const AssembledScene& scene, const SceneConfig& cfg,
               std::string name)
      : scene_(scene), cfg_(cfg), name_(std::move(name)) {
    Stopwatch sw;
    if (name_ == "cbfm-cmp" || name_ == "cbfm-noprec") {
      CbfSet set = build_cbfs(scene_.mesh, *scene_.basis, scene_.partition,
                              scene_.sys, scene_.gram, cfg_.cbf,
                              &cbf_unconverged_);
      cbf_gen_seconds_ = sw.lap();
      rs_ = build_reduced(scene_.partition, set, scene_.sys, scene_.gram,
                          Eigen::VectorXcd::Zero(2 * scene_.sys.n));
      reduce_seconds_ = sw.lap();
    } else if (name_ == "dense-lu") {
      lu_ = std::make_unique<Eigen::PartialPivLU<Eigen::MatrixXcd>>(
          lu_factor_checked(scene_.sys.dense_kdiag()));
      reduce_seconds_ = sw.lap();
    } else if (name_ != "mom-baseline") {
      throw InvalidParam("unknown solver: " + name_);
    }
  }

  const std::string& name() const { return name_; }
  double cbf_gen_seconds() const { return cbf_gen_seconds_; }
  double reduce_seconds() const { return reduce_seconds_; }
  int cbf_unconverged() const { return cbf_unconverged_; }
  const ReducedSystem* reduced() const { return rs_ ? &*rs_ : nullptr; }

  DirectionResult solve(const PlaneWave& wave) {
    DirectionResult out;
    try {
      Excitation ex = assemble_excitation(scene_.mesh, *scene_.basis, wave,
                                          scene_.sys.exterior);
      Eigen::VectorXcd v(2 * scene_.sys.n);
      v.head(scene_.sys.n) = ex.vE;
      v.tail(scene_.sys.n) = ex.vH;
      if (rs_) {
        rs_->vr = rs_->Cjm.adjoint() * v;
        auto [mj, rep] = solve_cbfm(*rs_, cfg_.solver.tol,
                                    cfg_.solver.max_iter,
                                    name_ == "cbfm-cmp");
        out.mj = std::move(mj);
        out.iterations = rep.outer.iterations;
        out.inner_iterations = rep.inner_iterations;
        out.residual_history = rep.outer.residual_history;
      } else if (lu_) {
        out.mj = lu_->solve(v);
        out.iterations = 0;
      } else {
        auto [mj, rep] = solve_baseline_mom(scene_.sys, v, cfg_.solver.tol,
                                            cfg_.solver.max_iter);
        out.mj = std::move(mj);
        out.iterations = rep.iterations;
        out.residual_history = rep.residual_history;
      }
    } catch (const Error& e) {
      out.ok = false;
      out.error_type = "solver";
      out.error_message = e.what();
    }
    return out;
  }

 private:
  const AssembledScene& scene_;
  const SceneConfig& cfg_;
  std::string name_;
  std::optional<ReducedSystem> rs_;
  std::unique_ptr<Eigen::PartialPivLU<Eigen::MatrixXcd>> lu_;
  double cbf_gen_seconds_ = 0.0, reduce_seconds_ = 0.0;
  int cbf_unconverged_ = 0;
};

/// sigma / lambda^2 in dB for the back-scattered direction of `wave`.
inline double monostatic_rcs_db(const AssembledScene& scene,
                                const Eigen::VectorXcd& mj,
                                const PlaneWave& wave) {
  const int n = scene.basis->size();
  const double th = wave.theta_deg * std::numbers::pi / 180.0;
  const double ph = wave.phi_deg * std::numbers::pi / 180.0;
  FarField ff = far_field(scene.mesh, *scene.basis, mj.tail(n), mj.head(n),
                          scene.sys.exterior, th, ph);
  double sigma = ff.rcs();
  if (!(sigma > 0.0)) return -std::numeric_limits<double>::infinity();
  return db10(sigma);
}

inline std::vector<PlaneWave> sweep_waves(const SweepSpec& s) {
  std::vector<PlaneWave> waves;
  waves.reserve(s.n_theta);
  for (int i = 0; i < s.n_theta; ++i)
    waves.emplace_back(s.theta_start + i * s.dtheta, s.phi, s.pol);
  return waves;
}

// --------------------------------------------------------------- run_solve

/// Single-excitation solve (first sweep direction): writes the solution
/// coefficients, the convergence history, the config echo and the stage log.
inline void run_solve(const SceneConfig& cfg) {
  namespace fs = std::filesystem;
  fs::create_directories(cfg.output_dir);
  StageLog log;
  Stopwatch total;
  AssembledScene scene = assemble_scene(cfg, &log);
  const std::string solver = cfg.solver.solvers.front();
  SolverRunner runner(scene, cfg, solver);
  log.add("cbf_generation", runner.cbf_gen_seconds(),
          {{"solver", solver}, {"unconverged", runner.cbf_unconverged()}});
  log.add("reduction", runner.reduce_seconds(), {{"solver", solver}});

  Stopwatch it;
  PlaneWave wave = sweep_waves(cfg.sweep).front();
  DirectionResult r = runner.solve(wave);
  log.add("iteration", it.lap(),
          {{"solver", solver},
           {"iterations", r.iterations},
           {"inner_iterations", r.inner_iterations}});
  log.add("total", total.lap());
  log.write(fs::path(cfg.output_dir) / "log.jsonl");
  write_file_atomic(fs::path(cfg.output_dir) / "config_echo.json",
                    scene_config_to_json(cfg).dump(2) + "\n");
  if (!r.ok)
    throw SolverBreakdown("run_solve: " + r.error_message);

  if (cfg.dump_solution)
    save_matrix(fs::path(cfg.output_dir) / "solution.bin", r.mj);
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < r.residual_history.size(); ++i)
    rows.push_back({std::to_string(i), csv_number(r.residual_history[i])});
  write_csv(fs::path(cfg.output_dir) / "convergence.csv",
            {"iteration", "relative_residual"}, rows);
}

// ----------------------------------------------------------- run_rcs_sweep

struct PatternEntry {
  double theta_deg, phi_deg;
  int pol;
  double rcs_db = 0.0;
  bool ok = true;
  std::string error_message;
};

struct SolverSweep {
  std::string solver;
  std::vector<PatternEntry> entries;
  double cbf_gen_seconds = 0.0, iter_seconds = 0.0, total_seconds = 0.0;
  long total_iterations = 0;
};

struct SweepResult {
  std::vector<SolverSweep> solvers;
  std::map<std::string, double> rmse_db;  // solver -> rmse vs reference
  std::string reference;
};

/// Monostatic sweep over every requested solver, with patterns, RMSE against
/// the reference solver, and Table-style relative timing ratios.
inline SweepResult run_rcs_sweep(const SceneConfig& cfg) {
  namespace fs = std::filesystem;
  fs::create_directories(cfg.output_dir);
  StageLog log;
  AssembledScene scene = assemble_scene(cfg, &log);
  std::vector<PlaneWave> waves = sweep_waves(cfg.sweep);

  SweepResult result;
  result.reference = cfg.solver.reference;
  for (const std::string& name : cfg.solver.solvers) {
    Stopwatch total;
    SolverSweep ss;
    ss.solver = name;
    SolverRunner runner(scene, cfg, name);
    ss.cbf_gen_seconds = runner.cbf_gen_seconds();
    Stopwatch it;
    for (const PlaneWave& w : waves) {
      DirectionResult r = runner.solve(w);
      PatternEntry e{w.theta_deg, w.phi_deg, w.pol};
      if (r.ok) {
        e.rcs_db = monostatic_rcs_db(scene, r.mj, w);
        ss.total_iterations += r.iterations;
      } else {
        e.ok = false;
        e.error_message = r.error_message;
      }
      ss.entries.push_back(std::move(e));
    }
    ss.iter_seconds = it.lap();
    ss.total_seconds = total.lap();
    log.add("sweep", ss.total_seconds,
            {{"solver", name},
             {"cbf_generation_seconds", ss.cbf_gen_seconds},
             {"iteration_seconds", ss.iter_seconds},
             {"total_iterations", ss.total_iterations},
             {"directions", static_cast<int>(waves.size())}});
    result.solvers.push_back(std::move(ss));
  }

  // pattern files
  for (const SolverSweep& ss : result.solvers) {
    std::vector<std::vector<std::string>> rows;
    for (const PatternEntry& e : ss.entries)
      rows.push_back({csv_number(e.theta_deg), csv_number(e.phi_deg),
                      std::to_string(e.pol),
                      e.ok ? csv_number(e.rcs_db) : "error",
                      e.ok ? "ok" : e.error_message});
    write_csv(fs::path(cfg.output_dir) / ("pattern_" + ss.solver + ".csv"),
              {"theta_deg", "phi_deg", "pol", "rcs_db", "status"}, rows);
  }

  // rmse vs reference
  const SolverSweep* ref = nullptr;
  for (const SolverSweep& ss : result.solvers)
    if (ss.solver == result.reference) ref = &ss;
  std::vector<std::vector<std::string>> rmse_rows;
  for (const SolverSweep& ss : result.solvers) {
    if (ss.solver == result.reference) continue;
    std::string cell = "error";
    bool all_ok = ref != nullptr;
    for (const PatternEntry& e : ss.entries) all_ok = all_ok && e.ok;
    if (ref)
      for (const PatternEntry& e : ref->entries) all_ok = all_ok && e.ok;
    if (all_ok) {
      std::vector<double> a, b;
      for (const PatternEntry& e : ss.entries) a.push_back(e.rcs_db);
      for (const PatternEntry& e : ref->entries) b.push_back(e.rcs_db);
      double r = rcs_rmse_db(a, b);
      result.rmse_db[ss.solver] = r;
      cell = csv_number(r);
    }
    rmse_rows.push_back({ss.solver, result.reference, cell});
  }
  write_csv(fs::path(cfg.output_dir) / "rmse.csv",
            {"solver", "reference", "rmse_db"}, rmse_rows);

  // timing ratios relative to the baseline (or reference) total
  double denom = 0.0;
  for (const SolverSweep& ss : result.solvers)
    if (ss.solver == "mom-baseline") denom = ss.total_seconds;
  if (!(denom > 0.0) && ref) denom = ref->total_seconds;
  std::vector<std::vector<std::string>> trows;
  for (const SolverSweep& ss : result.solvers) {
    double d = denom > 0.0 ? denom : 1.0;
    trows.push_back({ss.solver, csv_number(ss.cbf_gen_seconds),
                     csv_number(ss.iter_seconds),
                     csv_number(ss.total_seconds),
                     csv_number(ss.cbf_gen_seconds / d),
                     csv_number(ss.iter_seconds / d),
                     csv_number(ss.total_seconds / d)});
  }
  write_csv(fs::path(cfg.output_dir) / "timing.csv",
            {"solver", "cbf_gen_seconds", "iter_seconds", "total_seconds",
             "cbf_gen_ratio", "iter_ratio", "total_ratio"},
            trows);

  log.write(fs::path(cfg.output_dir) / "log.jsonl");
  write_file_atomic(fs::path(cfg.output_dir) / "config_echo.json",
                    scene_config_to_json(cfg).dump(2) + "\n");
  return result;
}

// ---------------------------------------------------------- run_cbf_inspect

struct InspectResult {
  CbfSet set;
  double max_duality_offdiag = 0.0;  // max |offdiag| of (Cm)^H G Cj, any cell
  double sigma_max = 0.0;
};

/// CBF generation only: per-cell singular-value spectra and the duality
/// residual of the orthogonalized pair.
inline InspectResult run_cbf_inspect(const SceneConfig& cfg) {
  namespace fs = std::filesystem;
  fs::create_directories(cfg.output_dir);
  StageLog log;
  Stopwatch total;
  AssembledScene scene = assemble_scene(cfg, &log);
  Stopwatch sw;
  InspectResult out;
  out.set = build_cbfs(scene.mesh, *scene.basis, scene.partition, scene.sys,
                       scene.gram, cfg.cbf);
  log.add("cbf_generation", sw.lap());

  std::vector<std::vector<std::string>> rows;
  for (std::size_t m = 0; m < out.set.cells.size(); ++m) {
    const CellCbf& c = out.set.cells[m];
    out.sigma_max = std::max(out.sigma_max, c.sigma(0));
    for (int i = 0; i < c.L(); ++i)
      rows.push_back({std::to_string(m), std::to_string(i),
                      csv_number(c.sigma(i)),
                      csv_number(c.sigma(i) / c.sigma(0))});
    Eigen::MatrixXd gm = gram_block(scene.gram, scene.partition.cells[m]);
    Eigen::MatrixXcd d = c.Cm.adjoint() * (gm.cast<cplx>() * c.Cj);
    for (Eigen::Index r = 0; r < d.rows(); ++r)
      for (Eigen::Index cc = 0; cc < d.cols(); ++cc)
        if (r != cc)
          out.max_duality_offdiag =
              std::max(out.max_duality_offdiag, std::abs(d(r, cc)));
  }
  write_csv(fs::path(cfg.output_dir) / "singular_values.csv",
            {"cell", "index", "sigma", "sigma_normalized"}, rows);
  nlohmann::json rep = {
      {"max_duality_offdiagonal", out.max_duality_offdiag},
      {"sigma_max", out.sigma_max},
      {"relative", out.sigma_max > 0.0
                       ? out.max_duality_offdiag / out.sigma_max
                       : 0.0}};
  write_file_atomic(fs::path(cfg.output_dir) / "duality.json",
                    rep.dump(2) + "\n");
  log.add("total", total.lap());
  log.write(fs::path(cfg.output_dir) / "log.jsonl");
  return out;
}

// ------------------------------------------------------------------- mie

/// Monostatic Mie pattern for a homogeneous sphere; the value is
/// theta-independent by symmetry and emitted once per sweep angle. A
/// contrast-free sphere scatters nothing and is encoded as -inf dB.
inline void run_mie(double radius, cplx eps_r, cplx mu_r,
                    const SweepSpec& sweep,
                    const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  double rcs_db = -std::numeric_limits<double>::infinity();
  if (!(eps_r == cplx(1.0, 0.0) && mu_r == cplx(1.0, 0.0))) {
    MieSeries s = mie_series(radius, eps_r, mu_r, K0);
    double sigma = mie_backscatter_rcs(s);
    rcs_db = sigma > 0.0 ? db10(sigma)
                         : -std::numeric_limits<double>::infinity();
  }
  std::vector<std::vector<std::string>> rows;
  for (int i = 0; i < sweep.n_theta; ++i)
    rows.push_back({csv_number(sweep.theta_start + i * sweep.dtheta),
                    csv_number(sweep.phi), std::to_string(sweep.pol),
                    csv_number(rcs_db), "ok"});
  write_csv(out_dir / "pattern_mie.csv",
            {"theta_deg", "phi_deg", "pol", "rcs_db", "status"}, rows);
}

}  // namespace cbem
