#pragma once

// Surface and run-configuration files, byte-stable JSON output and the
// artifact serializers.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "crflat/convex.hpp"
#include "crflat/levibuild.hpp"
#include "crflat/orbits.hpp"
#include "crflat/surface.hpp"

namespace crflat {

using Json = nlohmann::json;

constexpr int kMaxSurfaceDegree = 8;

// ---------------------------------------------------------------------------
// JSON output

namespace detail {

inline std::string format_double(double v, int digits = 12) {
  if (!std::isfinite(v)) return "null";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.*e", digits, v);
  return buf;
}

inline void dump_value(const Json& j, std::string& out, int depth, int digits) {
  const std::string pad(2 * (depth + 1), ' '), close(2 * depth, ' ');
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ",\n";
        first = false;
        out += pad + Json(it.key()).dump() + ": ";
        dump_value(it.value(), out, depth + 1, digits);
      }
      out += "\n" + close + "}";
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      out += "[\n";
      for (size_t i = 0; i < j.size(); ++i) {
        if (i) out += ",\n";
        out += pad;
        dump_value(j[i], out, depth + 1, digits);
      }
      out += "\n" + close + "]";
      return;
    }
    case Json::value_t::number_float: out += format_double(j.get<double>(), digits); return;
    default: out += j.dump(); return;
  }
}

}  // namespace detail

/// Sorted keys, two-space indent, every float as %.12e. Surface files use
/// digits = 16 so that coefficients survive a round trip.
inline std::string dump_json(const Json& j, int digits = 12) {
  std::string out;
  detail::dump_value(j, out, 0, digits);
  out += "\n";
  return out;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  f << text;
  if (!f) fail(ErrorCode::IoError, "write failed for " + path.string());
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::IoError, "cannot read " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

/// Rows of numbers as CSV with a header line.
inline std::string csv_table(const std::vector<std::string>& header,
                             const std::vector<std::vector<double>>& rows) {
  std::string out;
  for (size_t i = 0; i < header.size(); ++i) out += (i ? "," : "") + header[i];
  out += "\n";
  for (const auto& r : rows) {
    for (size_t i = 0; i < r.size(); ++i) out += (i ? "," : "") + detail::format_double(r[i]);
    out += "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// parsing helpers

namespace detail {

inline Json parse_json(const std::string& text, const std::string& what) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    size_t line = 1, col = 1;
    for (size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    fail(ErrorCode::ParseError, what + ": malformed JSON at line " + std::to_string(line) +
                                    ", column " + std::to_string(col) + " (byte " +
                                    std::to_string(e.byte) + ")");
  }
}

inline void check_keys(const Json& j, const std::set<std::string>& allowed, const std::string& where,
                       ErrorCode code) {
  if (!j.is_object()) fail(code, where + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key())) fail(code, where + "." + it.key() + ": unknown field");
}

inline double finite_number(const Json& j, const std::string& field, ErrorCode code) {
  if (!j.is_number()) fail(code, field + ": expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) fail(code, field + ": not finite");
  return v;
}

inline std::vector<int> exponent_list(const Json& j, int len, const std::string& field) {
  if (!j.is_array() || int(j.size()) != len)
    fail(ErrorCode::SchemaError, field + ": expected " + std::to_string(len) + " exponents");
  std::vector<int> out;
  for (size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number_integer() || j[i].get<long>() < 0)
      fail(ErrorCode::SchemaError, field + "[" + std::to_string(i) + "]: expected a nonnegative integer");
    out.push_back(int(j[i].get<long>()));
  }
  return out;
}

inline Polynomial parse_terms(const Json& terms, int m, bool sphere, const std::string& where) {
  if (!terms.is_array()) fail(ErrorCode::SchemaError, where + ": expected a list of terms");
  Polynomial p(m, sphere);
  for (size_t i = 0; i < terms.size(); ++i) {
    const std::string at = where + "[" + std::to_string(i) + "]";
    const Json& t = terms[i];
    check_keys(t, {"zdeg", "zbardeg", "xdeg", "re", "im"}, at, ErrorCode::SchemaError);
    if (!t.contains("zdeg") || !t.contains("zbardeg"))
      fail(ErrorCode::SchemaError, at + ": zdeg and zbardeg are required");
    const auto zd = exponent_list(t["zdeg"], m, at + ".zdeg");
    const auto zb = exponent_list(t["zbardeg"], m, at + ".zbardeg");
    int xd = 0;
    if (t.contains("xdeg")) {
      if (!sphere) fail(ErrorCode::SchemaError, at + ".xdeg: only sphere domains have x");
      if (!t["xdeg"].is_number_integer() || t["xdeg"].get<long>() < 0)
        fail(ErrorCode::SchemaError, at + ".xdeg: expected a nonnegative integer");
      xd = int(t["xdeg"].get<long>());
    }
    const double re = t.contains("re") ? finite_number(t["re"], at + ".re", ErrorCode::SchemaError) : 0.0;
    const double im = t.contains("im") ? finite_number(t["im"], at + ".im", ErrorCode::SchemaError) : 0.0;
    int deg = xd;
    for (int k = 0; k < m; ++k) deg += zd[k] + zb[k];
    if (deg > kMaxSurfaceDegree)
      fail(ErrorCode::DegreeTooHigh, at + ": total degree " + std::to_string(deg) + " exceeds " +
                                         std::to_string(kMaxSurfaceDegree));
    p.add(zd, zb, xd, cplx(re, im));
  }
  return p;
}

inline Json terms_json(const Polynomial& p) {
  Json out = Json::array();
  for (const Monomial& t : p.terms()) {
    Json j;
    j["zdeg"] = t.zdeg;
    j["zbardeg"] = t.zbardeg;
    if (p.has_x()) j["xdeg"] = t.xdeg;
    j["re"] = t.coeff.real();
    j["im"] = t.coeff.imag();
    out.push_back(j);
  }
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// surfaces

/// Surface file: {"n", "kind": "graph" | "parametric", "terms", ...}. Graph
/// terms describe phi in w = phi(z, zbar); parametric terms are one list per
/// ambient coordinate over the domain ("sphere" by default, or "plane").
inline SurfaceModel parse_surface(const std::string& text) {
  const Json j = detail::parse_json(text, "surface");
  detail::check_keys(j, {"n", "kind", "terms", "domain", "box", "name", "description", "expected"},
                     "surface", ErrorCode::SchemaError);
  if (!j.contains("n") || !j["n"].is_number_integer())
    fail(ErrorCode::SchemaError, "surface.n: expected an integer");
  const int n = int(j["n"].get<long>());
  if (n < 3) fail(ErrorCode::SchemaError, "surface.n: must be at least 3");
  if (n > 8) fail(ErrorCode::SchemaError, "surface.n: at most 8 supported");
  if (!j.contains("kind") || !j["kind"].is_string())
    fail(ErrorCode::SchemaError, "surface.kind: expected \"graph\" or \"parametric\"");
  const std::string kind = j["kind"];
  if (!j.contains("terms")) fail(ErrorCode::SchemaError, "surface.terms: required");
  const std::string name = j.contains("name") && j["name"].is_string() ? j["name"].get<std::string>() : "";
  const int m = n - 1;
  SurfaceModel s;
  if (kind == "graph") {
    if (j.contains("domain")) fail(ErrorCode::SchemaError, "surface.domain: graphs live over the plane");
    s = SurfaceModel::graph(n, detail::parse_terms(j["terms"], m, false, "surface.terms"), name);
  } else if (kind == "parametric") {
    std::string domain = "sphere";
    if (j.contains("domain")) {
      if (!j["domain"].is_string()) fail(ErrorCode::SchemaError, "surface.domain: expected a string");
      domain = j["domain"];
      if (domain != "sphere" && domain != "plane")
        fail(ErrorCode::SchemaError, "surface.domain: expected \"sphere\" or \"plane\"");
    }
    const Json& t = j["terms"];
    if (!t.is_array() || int(t.size()) != n)
      fail(ErrorCode::SchemaError, "surface.terms: expected " + std::to_string(n) + " component lists");
    const bool sphere = domain == "sphere";
    std::vector<Polynomial> comps;
    for (int c = 0; c < n; ++c)
      comps.push_back(detail::parse_terms(t[c], m, sphere, "surface.terms[" + std::to_string(c) + "]"));
    s = SurfaceModel(n, sphere ? Domain::Sphere : Domain::Plane, std::move(comps), name);
  } else {
    fail(ErrorCode::SchemaError, "surface.kind: expected \"graph\" or \"parametric\"");
  }
  if (j.contains("box")) {
    const double b = detail::finite_number(j["box"], "surface.box", ErrorCode::SchemaError);
    if (!(b > 0)) fail(ErrorCode::SchemaError, "surface.box: must be positive");
    s.set_box(b);
  }
  return s;
}

inline Json surface_json(const SurfaceModel& s) {
  Json j;
  j["n"] = s.n();
  j["name"] = s.name();
  if (s.is_graph()) {
    j["kind"] = "graph";
    j["terms"] = detail::terms_json(s.components().back());
  } else {
    j["kind"] = "parametric";
    j["domain"] = s.domain() == Domain::Sphere ? "sphere" : "plane";
    j["terms"] = Json::array();
    for (const Polynomial& p : s.components()) j["terms"].push_back(detail::terms_json(p));
  }
  if (s.domain() == Domain::Plane) j["box"] = s.box();
  return j;
}

// ---------------------------------------------------------------------------
// run configuration

struct RunConfig {
  int levels = 20;
  double rk_step = 1e-2;
  int quadrature_nodes = 512;
  int directions = 64;
  int base_grid = 7;
  int cauchy_grid = 8;
  int max_depth = 3;
  int mesh_cells = 400;
  std::vector<double> extra_levels;  // normalized levels in (0, 1)
  bool smooth = false;
  int threads = 0;  // 0: take CRFLAT_THREADS
  std::string out;
  std::map<std::string, double> tolerances = {
      {"closure_rel", 1e-3}, {"drift_tol", 1e-3}, {"dx", 1e-8},         {"graph_tol", 1e-8},
      {"c0_tol", 1e-6},      {"stokes", 1e-3},    {"collision", 1e-6}, {"hull_inflation", 1e-6},
      {"levi_flat", 1e-8},   {"fiber", 1e-6}};

  double tol(const std::string& key) const { return tolerances.at(key); }
  int thread_count() const { return threads > 0 ? threads : thread_hint(); }
};

inline RunConfig parse_config(const std::string& text) {
  const Json j = [&] {
    try {
      return detail::parse_json(text, "config");
    } catch (const Error& e) {
      fail(ErrorCode::ConfigError, e.what());
    }
  }();
  RunConfig c;
  detail::check_keys(j, {"levels", "rk_step", "quadrature_nodes", "directions", "base_grid",
                         "cauchy_grid", "max_depth", "mesh_cells", "smooth", "threads", "out", "extra_levels",
                         "tolerances"},
                     "config", ErrorCode::ConfigError);
  auto positive_int = [&](const char* key, int& dst) {
    if (!j.contains(key)) return;
    if (!j[key].is_number_integer() || j[key].get<long>() <= 0)
      fail(ErrorCode::ConfigError, std::string("config.") + key + ": expected a positive integer");
    dst = int(j[key].get<long>());
  };
  auto positive = [&](const Json& v, const std::string& field) {
    const double x = detail::finite_number(v, field, ErrorCode::ConfigError);
    if (!(x > 0)) fail(ErrorCode::ConfigError, field + ": must be positive");
    return x;
  };
  positive_int("levels", c.levels);
  positive_int("quadrature_nodes", c.quadrature_nodes);
  positive_int("directions", c.directions);
  positive_int("base_grid", c.base_grid);
  positive_int("cauchy_grid", c.cauchy_grid);
  positive_int("max_depth", c.max_depth);
  positive_int("mesh_cells", c.mesh_cells);
  positive_int("threads", c.threads);
  if (j.contains("rk_step")) c.rk_step = positive(j["rk_step"], "config.rk_step");
  if (j.contains("smooth")) {
    if (!j["smooth"].is_boolean()) fail(ErrorCode::ConfigError, "config.smooth: expected a boolean");
    c.smooth = j["smooth"];
  }
  if (j.contains("out")) {
    if (!j["out"].is_string()) fail(ErrorCode::ConfigError, "config.out: expected a string");
    c.out = j["out"];
  }
  if (j.contains("extra_levels")) {
    const Json& e = j["extra_levels"];
    if (!e.is_array()) fail(ErrorCode::ConfigError, "config.extra_levels: expected a list");
    for (size_t i = 0; i < e.size(); ++i) {
      const std::string at = "config.extra_levels[" + std::to_string(i) + "]";
      const double t = detail::finite_number(e[i], at, ErrorCode::ConfigError);
      if (!(t > 0 && t < 1)) fail(ErrorCode::ConfigError, at + ": must lie in (0, 1)");
      c.extra_levels.push_back(t);
    }
  }
  if (j.contains("tolerances")) {
    const Json& t = j["tolerances"];
    std::set<std::string> keys;
    for (const auto& [k, v] : c.tolerances) keys.insert(k);
    detail::check_keys(t, keys, "config.tolerances", ErrorCode::ConfigError);
    for (auto it = t.begin(); it != t.end(); ++it)
      c.tolerances[it.key()] = positive(it.value(), "config.tolerances." + it.key());
  }
  if (c.quadrature_nodes < 16) fail(ErrorCode::ConfigError, "config.quadrature_nodes: at least 16");
  return c;
}

inline Json config_json(const RunConfig& c) {
  Json j;
  j["levels"] = c.levels;
  j["rk_step"] = c.rk_step;
  j["quadrature_nodes"] = c.quadrature_nodes;
  j["directions"] = c.directions;
  j["base_grid"] = c.base_grid;
  j["cauchy_grid"] = c.cauchy_grid;
  j["max_depth"] = c.max_depth;
  j["mesh_cells"] = c.mesh_cells;
  j["smooth"] = c.smooth;
  j["extra_levels"] = c.extra_levels;
  j["tolerances"] = c.tolerances;
  return j;
}

// ---------------------------------------------------------------------------
// artifact serializers

inline Json complex_json(cplx z) { return Json::array({z.real(), z.imag()}); }

inline Json vector_json(const CVec& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(complex_json(v[i]));
  return out;
}

inline Json vector_json(const RVec& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

inline Json matrix_json(const CMat& m) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(complex_json(m(i, k)));
    out.push_back(row);
  }
  return out;
}

inline Json pole_json(const Pole& p) {
  Json j;
  j["param"] = vector_json(p.u);
  j["point"] = vector_json(p.point);
  j["flat"] = p.flat.flat;
  j["lambda"] = complex_json(p.flat.lambda);
  j["dependency_residual"] = p.flat.dependency_residual;
  j["elliptic"] = p.ellipticity.elliptic;
  j["sign"] = p.ellipticity.sign;
  j["eigenvalues"] = vector_json(p.ellipticity.eigenvalues);
  j["elliptic_flat"] = p.elliptic_flat;
  j["failure"] = p.failure;
  Json q;
  q["a"] = matrix_json(p.adapted.form.a());
  q["b"] = matrix_json(p.adapted.form.b());
  q["c"] = matrix_json(p.adapted.form.c());
  j["quadric"] = q;
  if (p.flat.flat) {
    Json nf;
    nf["a"] = matrix_json(p.normal.a());
    nf["b"] = matrix_json(p.normal.b());
    nf["c"] = matrix_json(p.normal.c());
    j["normal_form"] = nf;
  }
  return j;
}

inline Json exceptional_json(const std::vector<ExceptionalLevel>& ex) {
  Json out = Json::array();
  for (const auto& e : ex)
    out.push_back({{"level", e.level}, {"code", std::string(to_string(e.code))}, {"reason", e.reason}});
  return out;
}

inline Json census_json(const CensusReport& r) {
  Json j;
  j["complex_points"] = Json::array();
  for (const Pole& p : r.complex_points) j["complex_points"].push_back(pole_json(p));
  j["cr_sampled"] = r.cr_sampled;
  j["zero_levi"] = r.zero_levi;
  j["minimal"] = r.minimal;
  j["indeterminate"] = r.indeterminate;
  j["violation"] = r.violation;
  j["detail"] = r.detail;
  j["hypotheses_hold"] = r.ok();
  return j;
}

inline Json orbit_json(const Orbit& o, int max_points) {
  Json j;
  j["nu"] = o.nu;
  j["closed"] = o.closed;
  j["closure_residual"] = o.closure_residual;
  j["diameter"] = o.diameter;
  j["components"] = orbit_components(o);
  j["euler"] = orbit_euler_characteristic(o);
  j["samples"] = int(o.points.size());
  Json pts = Json::array();
  const size_t stride = std::max<size_t>(1, o.points.size() / std::max(1, max_points));
  for (size_t i = 0; i < o.points.size(); i += stride) pts.push_back(vector_json(o.points[i]));
  j["points"] = pts;
  return j;
}

inline Json atlas_json(const FoliationAtlas& a, int max_points) {
  Json j;
  j["pole"] = vector_json(a.pole.point);
  j["smoothed"] = a.smoothed;
  j["scale"] = a.scale();
  j["orbits"] = Json::array();
  for (const Orbit& o : a.orbits) j["orbits"].push_back(orbit_json(o, max_points));
  j["exceptional"] = exceptional_json(a.exceptional);
  return j;
}

/// LeafChain export: {level, cells[{base, C0, roots, multiplicity}]}, with
/// interior cells subsampled to at most max_cells.
inline Json leaf_json(const LeafChain& leaf, int max_cells) {
  Json j;
  j["level"] = leaf.level;
  j["n"] = leaf.n;
  j["frame"] = matrix_json(leaf.frame.U);
  j["max_sheets"] = leaf.max_sheets;
  j["multiplicity"] = leaf.multiplicity;
  j["singular_cells"] = leaf.singular_cells;
  j["max_c0_error"] = leaf.max_c0_error;
  j["max_consistency"] = leaf.max_consistency;
  j["graph_residual"] = leaf.graph ? Json(leaf.graph_residual) : Json(nullptr);
  std::vector<const LeafCell*> cells;
  for (const LeafCell& c : leaf.cells)
    if (!c.boundary && c.fiber.c0 != 0) cells.push_back(&c);
  j["interior_cells"] = int(cells.size());
  const size_t stride = std::max<size_t>(1, cells.size() / std::max(1, max_cells));
  Json out = Json::array();
  for (size_t i = 0; i < cells.size(); i += stride) {
    const LeafCell& c = *cells[i];
    Json roots = Json::array();
    for (const cplx& r : c.fiber.roots) roots.push_back(complex_json(r));
    out.push_back({{"base", vector_json(c.base)},
                   {"C0", c.fiber.c0},
                   {"roots", roots},
                   {"multiplicity", c.fiber.multiplicity}});
  }
  j["cells"] = out;
  return j;
}

/// Mesh of the variety: one record per level with the leaf and its boundary
/// orbit, plus the pole caps.
inline Json mesh_json(const LeviFlatVariety& v, int max_cells) {
  Json j;
  j["n"] = v.n;
  j["levels"] = Json::array();
  for (const VarietyLevel& L : v.levels) {
    Json r;
    r["x"] = L.level;
    r["leaf"] = leaf_json(L.leaf, max_cells);
    Json b = Json::array();
    const size_t stride = std::max<size_t>(1, L.cycle.points.size() / std::max(1, max_cells));
    for (size_t i = 0; i < L.cycle.points.size(); i += stride) b.push_back(vector_json(L.cycle.points[i]));
    r["boundary"] = b;
    r["min_dx"] = L.h.min_dx;
    j["levels"].push_back(r);
  }
  j["caps"] = Json::array();
  for (const PoleCap& c : v.caps) {
    Json r;
    r["pole"] = c.pole;
    r["x"] = c.level;
    r["model_level"] = c.model_level;
    r["leaf"] = leaf_json(c.leaf, max_cells);
    Json b = Json::array();
    for (const CVec& p : c.boundary) b.push_back(vector_json(p));
    r["boundary"] = b;
    j["caps"].push_back(r);
  }
  j["exceptional"] = exceptional_json(v.exceptional);
  return j;
}

inline Json levi_json(const LeviFlatReport& r) {
  return {{"max_residual", r.max_residual},
          {"mean_residual", r.mean_residual},
          {"max_complex", r.max_complex},
          {"max_level", r.max_level},
          {"points", r.points}};
}

inline Json singular_json(const SingularReport& r) {
  Json j;
  j["points"] = Json::array();
  for (const SingularPoint& p : r.points)
    j["points"].push_back({{"x", p.level}, {"point", vector_json(p.point)}});
  j["slice_dimension"] = Json::array();
  for (const auto& [x, d] : r.slice_dimension) j["slice_dimension"].push_back({{"x", x}, {"dimension", d}});
  j["union_dimension"] = r.union_dimension;
  j["max_slice_dimension"] = r.max_slice_dimension;
  return j;
}

inline Json projection_json(const ProjectionReport& r) {
  Json j;
  j["boundary_injective"] = r.boundary_injective;
  j["min_boundary_gap"] = r.min_boundary_gap;
  j["pairs_checked"] = r.pairs_checked;
  j["collisions"] = Json::array();
  for (const Collision& c : r.collisions)
    j["collisions"].push_back({{"x_a", c.level_a},
                               {"x_b", c.level_b},
                               {"count", c.count},
                               {"min_distance", c.min_distance},
                               {"example", vector_json(c.example)}});
  return j;
}

}  // namespace crflat
