#pragma once

// classify -> orbits -> fill -> build -> verify, writing the artifacts of
// every stage that ran.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "crflat/io.hpp"

namespace crflat {

enum class Stage { Classify = 0, Orbits, Fill, Build, Verify };

inline std::optional<Stage> stage_from_name(const std::string& name) {
  if (name == "classify") return Stage::Classify;
  if (name == "orbits") return Stage::Orbits;
  if (name == "fill") return Stage::Fill;
  if (name == "build") return Stage::Build;
  if (name == "verify" || name == "pipeline") return Stage::Verify;
  return std::nullopt;
}

struct LevelCheck {
  double level = 0.0;
  double stokes = 0.0;
  double stokes_self = 0.0;
  bool stokes_ok = false;
  bool hull_ok = false;
  std::string note;
};

struct VerifyReport {
  std::vector<LevelCheck> levels;
  LeviFlatReport leviflat;
  SingularReport singular;
  ProjectionReport projection;
  std::vector<std::string> failures;

  bool passed() const { return failures.empty(); }
};

struct PipelineResult {
  int exit_code = 0;
  std::string message;
  std::vector<std::string> artifacts;  // relative to the output directory
};

inline AtlasOptions atlas_options(const RunConfig& c) {
  AtlasOptions o;
  o.levels = c.levels;
  o.smooth = c.smooth;
  o.extra_levels = c.extra_levels;
  o.orbit.rk_step = c.rk_step;
  o.orbit.directions = c.directions;
  o.orbit.closure_rel = c.tol("closure_rel");
  o.orbit.drift_tol = c.tol("drift_tol");
  o.threads = c.thread_count();
  return o;
}

inline BuildOptions build_options(const RunConfig& c) {
  BuildOptions b;
  b.fill.nodes = c.quadrature_nodes;
  b.fill.base_grid = c.base_grid;
  b.fill.cauchy_grid = c.cauchy_grid;
  b.fill.max_depth = c.max_depth;
  b.fill.c0_tol = c.tol("c0_tol");
  b.fill.graph_tol = c.tol("graph_tol");
  b.fill.threads = c.thread_count();
  b.dx_tol = c.tol("dx");
  return b;
}

/// Orbit statistics of the census, taken from an already traced atlas.
inline void add_orbit_census(CensusReport& r, const FoliationAtlas& a) {
  r.exceptional = a.exceptional;
  r.orbits_traced = int(a.orbits.size() + a.exceptional.size());
  for (const Orbit& o : a.orbits) {
    r.levels.push_back(o.nu);
    r.orbits_closed += o.closed;
    r.orbits_connected += orbit_components(o) == 1;
    r.euler.push_back(orbit_euler_characteristic(o));
  }
  bool euler_ok = true;
  for (int e : r.euler) euler_ok = euler_ok && e == r.euler_expected;
  if (r.orbits_closed != r.orbits_traced || r.orbits_connected != r.orbits_traced || !euler_ok) {
    r.violation = "orbits";
    r.detail = "orbits not all closed spheres";
  }
}

inline Json census_orbits_json(const CensusReport& r) {
  Json j = census_json(r);
  j["orbits_traced"] = r.orbits_traced;
  j["orbits_closed"] = r.orbits_closed;
  j["orbits_connected"] = r.orbits_connected;
  j["euler"] = r.euler;
  j["euler_expected"] = r.euler_expected;
  j["levels"] = r.levels;
  j["exceptional"] = exceptional_json(r.exceptional);
  return j;
}

/// Every verification pass over a built variety.
inline VerifyReport verify_variety(const LeviFlatVariety& v, const RunConfig& c) {
  VerifyReport r;
  const FillOptions fopt = build_options(c).fill;
  StokesOptions sopt;
  sopt.tolerance = c.tol("stokes");
  r.levels.resize(v.levels.size());
  parallel_for(int(v.levels.size()), [&](int i) {
    const VarietyLevel& L = v.levels[i];
    LevelCheck& k = r.levels[i];
    k.level = L.level;
    try {
      const StokesReport s = verify_boundary(L.leaf, L.framed, sopt);
      k.stokes = s.residual;
      k.stokes_self = s.self_estimate;
      k.stokes_ok = s.residual < sopt.tolerance;
    } catch (const Error& e) {
      k.note = e.what();
    }
    FillOptions one = fopt;
    one.threads = 1;
    k.hull_ok = convex_hull_check(L.leaf, L.framed, c.tol("hull_inflation"), 400, one);
  }, c.thread_count());
  for (const LevelCheck& k : r.levels) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", k.level);
    if (!k.stokes_ok) r.failures.push_back(std::string("stokes at x=") + buf);
    if (!k.hull_ok) r.failures.push_back(std::string("hull at x=") + buf);
  }
  r.leviflat = levi_flat_residual(v);
  if (!(r.leviflat.max_residual < c.tol("levi_flat"))) r.failures.push_back("levi-flat residual");
  r.singular = detect_singularities(v, fopt);
  if (r.singular.max_slice_dimension > 2 * v.n - 4 + 0.5) r.failures.push_back("singular slice dimension");
  if (r.singular.union_dimension > 2 * v.n - 3 + 0.5) r.failures.push_back("singular union dimension");
  r.projection = project_and_check(v, c.tol("collision"), 400, fopt);
  if (!r.projection.collisions.empty()) r.failures.push_back("projection self-intersections");
  return r;
}

inline Json verify_json(const VerifyReport& r) {
  Json j;
  j["stokes"] = Json::array();
  j["hull"] = Json::array();
  for (const LevelCheck& k : r.levels) {
    j["stokes"].push_back({{"x", k.level},
                           {"residual", k.stokes},
                           {"self_estimate", k.stokes_self},
                           {"passed", k.stokes_ok},
                           {"note", k.note}});
    j["hull"].push_back({{"x", k.level}, {"inside", k.hull_ok}});
  }
  j["leviflat"] = levi_json(r.leviflat);
  j["singular"] = singular_json(r.singular);
  j["collisions"] = projection_json(r.projection);
  j["failures"] = r.failures;
  j["passed"] = r.passed();
  return j;
}

inline std::string residual_csv(const LeviFlatVariety& v, const VerifyReport& r) {
  std::vector<std::vector<double>> rows;
  for (size_t i = 0; i < v.levels.size(); ++i) {
    const LeafChain& L = v.levels[i].leaf;
    const LevelCheck& k = r.levels[i];
    rows.push_back({k.level, k.stokes, k.stokes_self, L.max_c0_error, L.max_consistency,
                    L.graph ? L.graph_residual : std::nan(""), k.hull_ok ? 1.0 : 0.0});
  }
  return csv_table({"x", "stokes", "stokes_self", "c0_error", "moment_consistency", "graph_residual", "hull"},
                   rows);
}

namespace detail {

class ArtifactWriter {
 public:
  ArtifactWriter(std::filesystem::path dir, PipelineResult& res) : dir_(std::move(dir)), res_(res) {}

  void json(const std::string& name, const Json& j) { text(name, dump_json(j)); }
  void text(const std::string& name, const std::string& t) {
    write_text(dir_ / name, t);
    res_.artifacts.push_back(name);
  }

 private:
  std::filesystem::path dir_;
  PipelineResult& res_;
};

}  // namespace detail

/// Runs the stages up to `last`. Errors become the exit code; artifacts of
/// completed stages stay on disk, and failure.json marks where it stopped.
inline PipelineResult run_pipeline(const SurfaceModel& s, const RunConfig& c, Stage last,
                                   const std::filesystem::path& out) {
  PipelineResult res;
  detail::ArtifactWriter w(out, res);
  std::string stage = "classify";
  try {
    std::error_code ec;
    std::filesystem::create_directories(out, ec);
    if (ec) fail(ErrorCode::IoError, "cannot create " + out.string());

    CensusOptions copt;
    copt.atlas = atlas_options(c);
    CensusReport census = hypothesis_census(s, copt);
    w.json("classification.json", census_json(census));
    if (!census.ok()) fail(ErrorCode::HypothesisViolation, census.violation + ": " + census.detail);
    if (last == Stage::Classify) return res;

    stage = "orbits";
    const FoliationAtlas atlas = build_nu(s, copt.atlas);
    add_orbit_census(census, atlas);
    w.json("census.json", census_orbits_json(census));
    w.json("orbits.json", atlas_json(atlas, 256));
    std::vector<std::vector<double>> nu_rows;
    for (size_t i = 0; i < atlas.orbits.size(); ++i)
      nu_rows.push_back({double(i), atlas.orbits[i].nu, atlas.orbits[i].closure_residual});
    w.text("nu.csv", csv_table({"index", "nu", "closure_residual"}, nu_rows));
    if (!census.ok()) fail(ErrorCode::HypothesisViolation, census.violation + ": " + census.detail);
    if (last == Stage::Orbits) return res;

    stage = "fill";
    const LeviFlatVariety v = build_levi_flat(atlas, build_options(c));
    Json leaves;
    leaves["leaves"] = Json::array();
    for (const VarietyLevel& L : v.levels) leaves["leaves"].push_back(leaf_json(L.leaf, c.mesh_cells));
    leaves["exceptional"] = exceptional_json(v.exceptional);
    w.json("leaves.json", leaves);
    if (last == Stage::Fill) return res;

    stage = "build";
    w.json("mesh.json", mesh_json(v, c.mesh_cells));
    if (last == Stage::Build) return res;

    stage = "verify";
    const VerifyReport vr = verify_variety(v, c);
    w.json("report.json", verify_json(vr));
    w.text("residuals.csv", residual_csv(v, vr));
    if (!vr.passed()) {
      std::string msg;
      for (const auto& f : vr.failures) msg += (msg.empty() ? "" : "; ") + f;
      fail(ErrorCode::VerificationFailed, msg);
    }
    return res;
  } catch (const Error& e) {
    res.exit_code = e.exit_code();
    res.message = e.what();
    try {
      w.json("failure.json", {{"stage", stage},
                              {"code", e.exit_code()},
                              {"error", std::string(to_string(e.code()))},
                              {"message", e.what()}});
    } catch (const Error&) {
    }
    return res;
  }
}

}  // namespace crflat
