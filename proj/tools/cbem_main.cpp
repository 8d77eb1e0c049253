#include <CLI11.hpp>
#include <Eigen/Core>
#include <cstdio>
#include <exception>
#include <iostream>
#include <json.hpp>
#include <string>

#include <cbem/config.hpp>
#include <cbem/pipeline.hpp>

namespace {

std::string error_type(const std::exception& e) {
  using namespace cbem;
  if (dynamic_cast<const ConfigError*>(&e)) return "config";
  if (dynamic_cast<const ParseError*>(&e)) return "parse";
  if (dynamic_cast<const NonManifold*>(&e)) return "non_manifold";
  if (dynamic_cast<const DegenerateTriangle*>(&e)) return "degenerate_triangle";
  if (dynamic_cast<const InvalidParam*>(&e)) return "invalid_param";
  if (dynamic_cast<const SolverBreakdown*>(&e)) return "solver_breakdown";
  if (dynamic_cast<const SingularMatrix*>(&e)) return "singular_matrix";
  if (dynamic_cast<const DimensionMismatch*>(&e)) return "dimension_mismatch";
  if (dynamic_cast<const InnerSolveFailure*>(&e)) return "inner_solve_failure";
  if (dynamic_cast<const RankZero*>(&e)) return "rank_zero";
  if (dynamic_cast<const MismatchedSweep*>(&e)) return "mismatched_sweep";
  if (dynamic_cast<const DegenerateRange*>(&e)) return "degenerate_range";
  if (dynamic_cast<const NonConvergentSeries*>(&e))
    return "non_convergent_series";
  if (dynamic_cast<const cbem::Error*>(&e)) return "cbem_error";
  return "internal";
}

struct CommonFlags {
  std::string config_path;
  std::string out_dir;
  std::string solver_override;
  int threads = 1;
  long seed = 0;  // reserved; affects nothing numerical
};

void add_common(CLI::App* sub, CommonFlags& f, bool needs_config) {
  auto* c = sub->add_option("--config", f.config_path,
                            "scene configuration JSON");
  if (needs_config) c->required();
  sub->add_option("--out", f.out_dir, "output directory override");
  sub->add_option("--threads", f.threads, "worker thread count");
  sub->add_option("--seed", f.seed, "reserved; affects nothing numerical");
  sub->add_option("--solver", f.solver_override,
                  "run only this solver, overriding the config list");
}

cbem::SceneConfig load_config(const CommonFlags& f) {
  cbem::SceneConfig cfg = cbem::load_scene_config(f.config_path);
  if (!f.out_dir.empty()) cfg.output_dir = f.out_dir;
  if (!f.solver_override.empty()) {
    bool known = false;
    for (const auto& s : cbem::known_solvers())
      known = known || s == f.solver_override;
    if (!known)
      throw cbem::ConfigError("--solver: unknown solver \"" +
                              f.solver_override + "\"");
    cfg.solver.solvers = {f.solver_override};
    cfg.solver.reference = f.solver_override;
  }
  return cfg;
}

void apply_threads(int threads) {
  if (threads < 1) throw cbem::ConfigError("--threads: must be >= 1");
  Eigen::setNbThreads(threads);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Boundary-element electromagnetic scattering solver"};
  app.require_subcommand(1);

  CommonFlags solve_f, sweep_f, inspect_f;
  CLI::App* solve = app.add_subcommand(
      "solve", "single-excitation solve with artifact dump");
  add_common(solve, solve_f, true);
  CLI::App* sweep = app.add_subcommand(
      "rcs-sweep", "monostatic RCS sweep over the configured solvers");
  add_common(sweep, sweep_f, true);
  CLI::App* inspect = app.add_subcommand(
      "cbf-inspect", "generate CBFs only; dump spectra and duality residual");
  add_common(inspect, inspect_f, true);

  // mie oracle
  double mie_radius = 0.0;
  std::vector<double> mie_eps = {1.0, 0.0}, mie_mu = {1.0, 0.0};
  cbem::SweepSpec mie_sweep;
  std::string mie_out = "out";
  CLI::App* mie = app.add_subcommand(
      "mie", "analytic sphere backscatter reference pattern");
  mie->add_option("--radius", mie_radius, "sphere radius in wavelengths")
      ->required();
  mie->add_option("--eps-r", mie_eps,
                  "relative permittivity (one or two numbers: re [im])")
      ->expected(1, 2);
  mie->add_option("--mu-r", mie_mu,
                  "relative permeability (one or two numbers: re [im])")
      ->expected(1, 2);
  mie->add_option("--theta-start", mie_sweep.theta_start, "sweep start (deg)");
  mie->add_option("--dtheta", mie_sweep.dtheta, "sweep step (deg)");
  mie->add_option("--n-theta", mie_sweep.n_theta, "sweep point count");
  mie->add_option("--phi", mie_sweep.phi, "sweep azimuth (deg)");
  mie->add_option("--pol", mie_sweep.pol, "polarization tag (0 or 1)");
  mie->add_option("--out", mie_out, "output directory");

  // mesh generator
  std::string gen_shape, gen_out;
  double gen_diameter = 1.0 / 3.0, gen_side = 1.0 / 3.0;
  double gen_radius = 0.5, gen_height = 1.0;
  int gen_subdiv = 2, gen_div = 4, gen_ncirc = 24, gen_naxial = 8;
  int gen_nx = 1, gen_ny = 1, gen_nz = 1;
  double gen_spacing = 0.0;
  CLI::App* gen = app.add_subcommand("mesh-gen",
                                     "write a generated mesh as JSON");
  gen->add_option("--shape", gen_shape, "sphere | cube | cylinder")
      ->required();
  gen->add_option("--out", gen_out, "output mesh path (JSON)")->required();
  gen->add_option("--diameter", gen_diameter, "sphere diameter");
  gen->add_option("--subdivisions", gen_subdiv, "sphere subdivision level");
  gen->add_option("--side", gen_side, "cube side");
  gen->add_option("--divisions", gen_div, "cube face divisions");
  gen->add_option("--radius", gen_radius, "cylinder radius");
  gen->add_option("--height", gen_height, "cylinder height");
  gen->add_option("--n-circ", gen_ncirc, "cylinder circumferential count");
  gen->add_option("--n-axial", gen_naxial, "cylinder axial count");
  gen->add_option("--nx", gen_nx, "array count along x");
  gen->add_option("--ny", gen_ny, "array count along y");
  gen->add_option("--nz", gen_nz, "array count along z");
  gen->add_option("--spacing", gen_spacing, "array center-to-center spacing");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*solve) {
      apply_threads(solve_f.threads);
      cbem::run_solve(load_config(solve_f));
    } else if (*sweep) {
      apply_threads(sweep_f.threads);
      cbem::run_rcs_sweep(load_config(sweep_f));
    } else if (*inspect) {
      apply_threads(inspect_f.threads);
      cbem::run_cbf_inspect(load_config(inspect_f));
    } else if (*mie) {
      if (mie_sweep.n_theta < 1)
        throw cbem::ConfigError("--n-theta: must be >= 1");
      if (mie_sweep.pol != 0 && mie_sweep.pol != 1)
        throw cbem::ConfigError("--pol: must be 0 or 1");
      cbem::cplx eps(mie_eps[0], mie_eps.size() > 1 ? mie_eps[1] : 0.0);
      cbem::cplx mu(mie_mu[0], mie_mu.size() > 1 ? mie_mu[1] : 0.0);
      cbem::run_mie(mie_radius, eps, mu, mie_sweep, mie_out);
    } else if (*gen) {
      cbem::MeshSpec spec;
      spec.source = "generator";
      spec.shape = gen_shape;
      spec.diameter = gen_diameter;
      spec.subdivisions = gen_subdiv;
      spec.side = gen_side;
      spec.divisions = gen_div;
      spec.radius = gen_radius;
      spec.height = gen_height;
      spec.n_circ = gen_ncirc;
      spec.n_axial = gen_naxial;
      spec.nx = gen_nx;
      spec.ny = gen_ny;
      spec.nz = gen_nz;
      spec.spacing = gen_spacing;
      if (spec.shape != "sphere" && spec.shape != "cube" &&
          spec.shape != "cylinder")
        throw cbem::ConfigError(
            "--shape: must be sphere, cube or cylinder");
      cbem::TriangleMesh mesh = cbem::build_mesh(spec);
      cbem::write_file_atomic(gen_out,
                              cbem::mesh_to_json(mesh).dump(1) + "\n");
    }
  } catch (const std::exception& e) {
    nlohmann::json err = {
        {"error", {{"type", error_type(e)}, {"message", e.what()}}}};
    std::cerr << err.dump() << "\n";
    return 1;
  }
  return 0;
}
