#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <string>
#include <vector>

#include "cbem/cbfm.hpp"
#include "cbem/em.hpp"
#include "cbem/errors.hpp"
#include "cbem/mesh.hpp"

namespace cbem {

/// Mesh source: an on-disk file or a built-in generator, optionally
/// replicated on a regular lattice.
struct MeshSpec {
  std::string source;  // "file" | "generator"

  // file
  std::string path, format;  // format: "obj" | "json"

  // generator
  std::string shape;  // "sphere" | "cube" | "cylinder"
  double diameter = 0.0;
  int subdivisions = 0;
  double side = 0.0;
  int divisions = 1;
  double radius = 0.0, height = 0.0;
  int n_circ = 0, n_axial = 0;

  // optional replication
  int nx = 1, ny = 1, nz = 1;
  double spacing = 0.0;
};

struct PartitionSpec {
  std::string mode = "per-component";  // "per-component" | "lattice"
  double side = 0.0;                   // lattice cell side
};

struct SweepSpec {
  double theta_start = 0.0, dtheta = 1.0;
  int n_theta = 1;
  double phi = 0.0;
  int pol = 0;
};

struct SolverSpec {
  std::vector<std::string> solvers = {"cbfm-cmp"};
  std::string reference;  // rmse reference pattern; defaults to solvers[0]
  double tol = 1e-4;
  int max_iter = 1000;
};

struct SceneConfig {
  std::string scene_id = "scene";
  MeshSpec mesh;
  cplx eps_r{1.0, 0.0}, mu_r{1.0, 0.0};  // interior medium
  PartitionSpec partition;
  CbfGenerationConfig cbf;
  SolverSpec solver;
  SweepSpec sweep;
  std::string output_dir = "out";
  bool dump_solution = true;
};

namespace detail {

inline const nlohmann::json& cfg_at(const nlohmann::json& j,
                                    const std::string& scope,
                                    const std::string& key) {
  if (!j.is_object() || !j.contains(key))
    throw ConfigError(scope + key + ": required field is missing");
  return j[key];
}

inline double cfg_number(const nlohmann::json& j, const std::string& scope,
                         const std::string& key) {
  const auto& v = cfg_at(j, scope, key);
  if (!v.is_number())
    throw ConfigError(scope + key + ": expected a number");
  return v.get<double>();
}

inline double cfg_number_or(const nlohmann::json& j, const std::string& scope,
                            const std::string& key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number())
    throw ConfigError(scope + key + ": expected a number");
  return j[key].get<double>();
}

inline int cfg_int(const nlohmann::json& j, const std::string& scope,
                   const std::string& key) {
  const auto& v = cfg_at(j, scope, key);
  if (!v.is_number_integer())
    throw ConfigError(scope + key + ": expected an integer");
  return v.get<int>();
}

inline int cfg_int_or(const nlohmann::json& j, const std::string& scope,
                      const std::string& key, int fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number_integer())
    throw ConfigError(scope + key + ": expected an integer");
  return j[key].get<int>();
}

inline std::string cfg_string(const nlohmann::json& j,
                              const std::string& scope,
                              const std::string& key) {
  const auto& v = cfg_at(j, scope, key);
  if (!v.is_string())
    throw ConfigError(scope + key + ": expected a string");
  return v.get<std::string>();
}

inline std::string cfg_string_or(const nlohmann::json& j,
                                 const std::string& scope,
                                 const std::string& key,
                                 const std::string& fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_string())
    throw ConfigError(scope + key + ": expected a string");
  return j[key].get<std::string>();
}

/// A relative constant given either as a number or as [re, im].
inline cplx cfg_cplx_or(const nlohmann::json& j, const std::string& scope,
                        const std::string& key, cplx fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j[key];
  if (v.is_number()) return cplx(v.get<double>(), 0.0);
  if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number())
    return cplx(v[0].get<double>(), v[1].get<double>());
  throw ConfigError(scope + key + ": expected a number or [re, im]");
}

}  // namespace detail

inline MeshSpec parse_mesh_spec(const nlohmann::json& j) {
  using namespace detail;
  const std::string scope = "mesh.";
  MeshSpec m;
  m.source = cfg_string(j, scope, "source");
  if (m.source == "file") {
    m.path = cfg_string(j, scope, "path");
    m.format = cfg_string(j, scope, "format");
    if (m.format != "obj" && m.format != "json")
      throw ConfigError("mesh.format: must be \"obj\" or \"json\"");
  } else if (m.source == "generator") {
    m.shape = cfg_string(j, scope, "shape");
    if (m.shape == "sphere") {
      m.diameter = cfg_number(j, scope, "diameter");
      m.subdivisions = cfg_int(j, scope, "subdivisions");
      if (!(m.diameter > 0.0))
        throw ConfigError("mesh.diameter: must be positive");
      if (m.subdivisions < 0)
        throw ConfigError("mesh.subdivisions: must be >= 0");
    } else if (m.shape == "cube") {
      m.side = cfg_number(j, scope, "side");
      m.divisions = cfg_int(j, scope, "divisions");
      if (!(m.side > 0.0)) throw ConfigError("mesh.side: must be positive");
      if (m.divisions < 1)
        throw ConfigError("mesh.divisions: must be >= 1");
    } else if (m.shape == "cylinder") {
      m.radius = cfg_number(j, scope, "radius");
      m.height = cfg_number(j, scope, "height");
      m.n_circ = cfg_int(j, scope, "n_circ");
      m.n_axial = cfg_int(j, scope, "n_axial");
      if (!(m.radius > 0.0) || !(m.height > 0.0))
        throw ConfigError("mesh.radius/mesh.height: must be positive");
      if (m.n_circ < 3 || m.n_axial < 1)
        throw ConfigError("mesh.n_circ/mesh.n_axial: need >= 3 and >= 1");
    } else {
      throw ConfigError(
          "mesh.shape: must be \"sphere\", \"cube\" or \"cylinder\"");
    }
  } else {
    throw ConfigError("mesh.source: must be \"file\" or \"generator\"");
  }
  if (j.contains("array")) {
    const auto& a = j["array"];
    const std::string as = "mesh.array.";
    m.nx = cfg_int(a, as, "nx");
    m.ny = cfg_int(a, as, "ny");
    m.nz = cfg_int(a, as, "nz");
    m.spacing = cfg_number(a, as, "spacing");
    if (m.nx < 1 || m.ny < 1 || m.nz < 1)
      throw ConfigError("mesh.array.nx/ny/nz: counts must be >= 1");
    if (m.nx * m.ny * m.nz > 1 && !(m.spacing > 0.0))
      throw ConfigError("mesh.array.spacing: must be positive");
  }
  return m;
}

inline CbfGenerationConfig parse_cbf_config(const nlohmann::json& j) {
  using namespace detail;
  const std::string scope = "cbf.";
  CbfGenerationConfig c;
  std::string gen = cfg_string_or(j, scope, "generator", "primary");
  if (gen == "primary")
    c.generator = CbfGenerationConfig::Generator::primary;
  else if (gen == "ipcbf-gmres")
    c.generator = CbfGenerationConfig::Generator::ipcbf_gmres;
  else if (gen == "ipcbf-jacobi")
    c.generator = CbfGenerationConfig::Generator::ipcbf_jacobi;
  else
    throw ConfigError(
        "cbf.generator: must be \"primary\", \"ipcbf-gmres\" or "
        "\"ipcbf-jacobi\"");
  c.theta_s = cfg_number_or(j, scope, "theta_start", 0.0);
  c.dtheta = cfg_number_or(j, scope, "dtheta", 30.0);
  c.n_theta = cfg_int_or(j, scope, "n_theta", 12);
  c.phi_s = cfg_number_or(j, scope, "phi_start", 0.0);
  c.dphi = cfg_number_or(j, scope, "dphi", 30.0);
  c.n_phi = cfg_int_or(j, scope, "n_phi", 6);
  if (c.n_theta < 1 || c.n_phi < 1)
    throw ConfigError("cbf.n_theta/cbf.n_phi: must be >= 1");
  if (j.contains("pols")) {
    if (!j["pols"].is_array() || j["pols"].empty())
      throw ConfigError("cbf.pols: expected a non-empty array");
    c.pols.clear();
    for (const auto& p : j["pols"]) {
      if (!p.is_number_integer() ||
          (p.get<int>() != 0 && p.get<int>() != 1))
        throw ConfigError("cbf.pols: entries must be 0 or 1");
      c.pols.push_back(p.get<int>());
    }
  }
  c.delta_r = cfg_number_or(j, scope, "delta_r", c.delta_r);
  c.ipcbf_max_iter = cfg_int_or(j, scope, "ipcbf_max_iter", c.ipcbf_max_iter);
  c.jacobi_p = cfg_int_or(j, scope, "jacobi_p", c.jacobi_p);
  if (j.contains("delta_svd") && j.contains("group_l"))
    throw ConfigError(
        "cbf.delta_svd/cbf.group_l: exactly one truncation rule may be set");
  if (j.contains("group_l")) {
    c.delta_svd.reset();
    c.group_l = cfg_int(j, scope, "group_l");
    if (*c.group_l < 1) throw ConfigError("cbf.group_l: must be >= 1");
  } else if (j.contains("delta_svd")) {
    double d = cfg_number(j, scope, "delta_svd");
    if (!(d > 0.0 && d < 1.0))
      throw ConfigError("cbf.delta_svd: must lie in (0, 1)");
    c.delta_svd = d;
  }
  if (c.generator != CbfGenerationConfig::Generator::primary &&
      !(c.delta_r > 0.0 && c.delta_r < 1.0))
    throw ConfigError("cbf.delta_r: must lie in (0, 1)");
  if (c.jacobi_p < 1) throw ConfigError("cbf.jacobi_p: must be >= 1");
  return c;
}

inline const std::vector<std::string>& known_solvers() {
  static const std::vector<std::string> s = {"cbfm-cmp", "cbfm-noprec",
                                             "mom-baseline", "dense-lu"};
  return s;
}

inline SceneConfig parse_scene_config(const nlohmann::json& j) {
  using namespace detail;
  SceneConfig cfg;
  cfg.scene_id = cfg_string_or(j, "", "scene_id", "scene");
  cfg.mesh = parse_mesh_spec(cfg_at(j, "", "mesh"));

  const auto& med = cfg_at(j, "", "interior");
  cfg.eps_r = cfg_cplx_or(med, "interior.", "eps_r", cplx(1.0, 0.0));
  cfg.mu_r = cfg_cplx_or(med, "interior.", "mu_r", cplx(1.0, 0.0));
  if (!(cfg.eps_r.real() > 0.0) || !(cfg.mu_r.real() > 0.0))
    throw ConfigError(
        "interior.eps_r/interior.mu_r: real parts must be positive");

  if (j.contains("partition")) {
    const auto& p = j["partition"];
    cfg.partition.mode = cfg_string(p, "partition.", "mode");
    if (cfg.partition.mode == "lattice") {
      cfg.partition.side = cfg_number(p, "partition.", "side");
      if (!(cfg.partition.side > 0.0))
        throw ConfigError("partition.side: must be positive");
    } else if (cfg.partition.mode != "per-component") {
      throw ConfigError(
          "partition.mode: must be \"per-component\" or \"lattice\"");
    }
  }

  if (j.contains("cbf")) cfg.cbf = parse_cbf_config(j["cbf"]);

  if (j.contains("solver")) {
    const auto& s = j["solver"];
    if (s.contains("solvers")) {
      if (!s["solvers"].is_array() || s["solvers"].empty())
        throw ConfigError("solver.solvers: expected a non-empty array");
      cfg.solver.solvers.clear();
      for (const auto& name : s["solvers"]) {
        if (!name.is_string())
          throw ConfigError("solver.solvers: entries must be strings");
        cfg.solver.solvers.push_back(name.get<std::string>());
      }
    } else if (s.contains("name")) {
      cfg.solver.solvers = {cfg_string(s, "solver.", "name")};
    }
    cfg.solver.reference = cfg_string_or(s, "solver.", "reference", "");
    cfg.solver.tol = cfg_number_or(s, "solver.", "tol", 1e-4);
    cfg.solver.max_iter = cfg_int_or(s, "solver.", "max_iter", 1000);
  }
  for (const auto& name : cfg.solver.solvers)
    if (std::find(known_solvers().begin(), known_solvers().end(), name) ==
        known_solvers().end())
      throw ConfigError("solver.solvers: unknown solver \"" + name + "\"");
  if (cfg.solver.reference.empty())
    cfg.solver.reference = cfg.solver.solvers.front();
  if (std::find(cfg.solver.solvers.begin(), cfg.solver.solvers.end(),
                cfg.solver.reference) == cfg.solver.solvers.end())
    throw ConfigError(
        "solver.reference: must name one of the requested solvers");
  if (!(cfg.solver.tol > 0.0 && cfg.solver.tol < 1.0))
    throw ConfigError("solver.tol: must lie in (0, 1)");
  if (cfg.solver.max_iter < 1)
    throw ConfigError("solver.max_iter: must be >= 1");

  if (j.contains("sweep")) {
    const auto& s = j["sweep"];
    cfg.sweep.theta_start = cfg_number_or(s, "sweep.", "theta_start", 0.0);
    cfg.sweep.dtheta = cfg_number_or(s, "sweep.", "dtheta", 1.0);
    cfg.sweep.n_theta = cfg_int_or(s, "sweep.", "n_theta", 1);
    cfg.sweep.phi = cfg_number_or(s, "sweep.", "phi", 0.0);
    cfg.sweep.pol = cfg_int_or(s, "sweep.", "pol", 0);
    if (cfg.sweep.n_theta < 1)
      throw ConfigError("sweep.n_theta: must be >= 1");
    if (cfg.sweep.pol != 0 && cfg.sweep.pol != 1)
      throw ConfigError("sweep.pol: must be 0 or 1");
  }

  cfg.output_dir = cfg_string_or(j, "", "output_dir", "out");
  if (j.contains("dump_solution")) {
    if (!j["dump_solution"].is_boolean())
      throw ConfigError("dump_solution: expected a boolean");
    cfg.dump_solution = j["dump_solution"].get<bool>();
  }
  return cfg;
}

inline SceneConfig load_scene_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config: JSON parse failure: " + std::string(e.what()));
  }
  SceneConfig cfg = parse_scene_config(j);
  if (cfg.mesh.source == "file" && !std::filesystem::exists(cfg.mesh.path))
    throw ConfigError("mesh.path: file does not exist: " + cfg.mesh.path);
  return cfg;
}

/// Round-trip: the parsed configuration re-serialized, used as the config
/// echo artifact. Re-running the echo reproduces the run bit-identically.
inline nlohmann::json scene_config_to_json(const SceneConfig& cfg) {
  nlohmann::json j;
  j["scene_id"] = cfg.scene_id;
  nlohmann::json m;
  m["source"] = cfg.mesh.source;
  if (cfg.mesh.source == "file") {
    m["path"] = cfg.mesh.path;
    m["format"] = cfg.mesh.format;
  } else {
    m["shape"] = cfg.mesh.shape;
    if (cfg.mesh.shape == "sphere") {
      m["diameter"] = cfg.mesh.diameter;
      m["subdivisions"] = cfg.mesh.subdivisions;
    } else if (cfg.mesh.shape == "cube") {
      m["side"] = cfg.mesh.side;
      m["divisions"] = cfg.mesh.divisions;
    } else {
      m["radius"] = cfg.mesh.radius;
      m["height"] = cfg.mesh.height;
      m["n_circ"] = cfg.mesh.n_circ;
      m["n_axial"] = cfg.mesh.n_axial;
    }
  }
  if (cfg.mesh.nx * cfg.mesh.ny * cfg.mesh.nz > 1)
    m["array"] = {{"nx", cfg.mesh.nx},
                  {"ny", cfg.mesh.ny},
                  {"nz", cfg.mesh.nz},
                  {"spacing", cfg.mesh.spacing}};
  j["mesh"] = m;
  j["interior"] = {{"eps_r", {cfg.eps_r.real(), cfg.eps_r.imag()}},
                   {"mu_r", {cfg.mu_r.real(), cfg.mu_r.imag()}}};
  nlohmann::json p{{"mode", cfg.partition.mode}};
  if (cfg.partition.mode == "lattice") p["side"] = cfg.partition.side;
  j["partition"] = p;
  nlohmann::json c;
  switch (cfg.cbf.generator) {
    case CbfGenerationConfig::Generator::primary:
      c["generator"] = "primary";
      break;
    case CbfGenerationConfig::Generator::ipcbf_gmres:
      c["generator"] = "ipcbf-gmres";
      break;
    case CbfGenerationConfig::Generator::ipcbf_jacobi:
      c["generator"] = "ipcbf-jacobi";
      break;
  }
  c["theta_start"] = cfg.cbf.theta_s;
  c["dtheta"] = cfg.cbf.dtheta;
  c["n_theta"] = cfg.cbf.n_theta;
  c["phi_start"] = cfg.cbf.phi_s;
  c["dphi"] = cfg.cbf.dphi;
  c["n_phi"] = cfg.cbf.n_phi;
  c["pols"] = cfg.cbf.pols;
  c["delta_r"] = cfg.cbf.delta_r;
  c["ipcbf_max_iter"] = cfg.cbf.ipcbf_max_iter;
  c["jacobi_p"] = cfg.cbf.jacobi_p;
  if (cfg.cbf.delta_svd) c["delta_svd"] = *cfg.cbf.delta_svd;
  if (cfg.cbf.group_l) c["group_l"] = *cfg.cbf.group_l;
  j["cbf"] = c;
  j["solver"] = {{"solvers", cfg.solver.solvers},
                 {"reference", cfg.solver.reference},
                 {"tol", cfg.solver.tol},
                 {"max_iter", cfg.solver.max_iter}};
  j["sweep"] = {{"theta_start", cfg.sweep.theta_start},
                {"dtheta", cfg.sweep.dtheta},
                {"n_theta", cfg.sweep.n_theta},
                {"phi", cfg.sweep.phi},
                {"pol", cfg.sweep.pol}};
  j["output_dir"] = cfg.output_dir;
  j["dump_solution"] = cfg.dump_solution;
  return j;
}

}  // namespace cbem
