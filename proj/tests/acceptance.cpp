// One line per acceptance criterion; exit status 1 if any line fails.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <string>

#include "crflat/fixtures.hpp"
#include "crflat/pipeline.hpp"

using namespace crflat;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

CMat random_cmat(std::mt19937_64& rng, int m) {
  std::normal_distribution<double> g;
  CMat a(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) a(i, j) = cplx(g(rng), g(rng));
  return a;
}

CMat random_hermitian(std::mt19937_64& rng, int m) {
  const CMat a = random_cmat(rng, m);
  return 0.5 * (a + a.adjoint());
}

CMat random_unitary(std::mt19937_64& rng, int m) {
  Eigen::HouseholderQR<CMat> qr(random_cmat(rng, m));
  return qr.householderQ() * CMat::Identity(m, m);
}

QuadraticForm form_b(const CMat& b) {
  const auto m = b.rows();
  return {CMat::Zero(m, m), b, CMat::Zero(m, m)};
}

Pole pole_of(const SurfaceModel& s) { return classify_pole(s, find_complex_points(s).front()); }

RVec sphere_point(double angle) {
  RVec u = RVec::Zero(5);
  u[0] = std::sin(angle);
  u[4] = std::cos(angle);
  return u;
}

// ---------------------------------------------------------------------------

Outcome flatness() {
  std::mt19937_64 rng(101);
  CMat d = CMat::Zero(2, 2);
  d(0, 0) = 1.0;
  d(1, 1) = kI;
  const bool id = is_flat(form_b(CMat::Identity(2, 2))).flat;
  const bool nf = is_flat(form_b(d)).flat;
  int herm = 0, indep = 0;
  for (int k = 0; k < 200; ++k) herm += is_flat(form_b(random_hermitian(rng, 2))).flat;
  for (int k = 0; k < 200; ++k)
    indep += is_flat(form_b(random_hermitian(rng, 2) + kI * random_hermitian(rng, 2))).flat;
  return {id && !nf && herm == 200 && indep == 0,
          "b=I " + std::string(id ? "flat" : "not flat") + ", diag(1,i) " + (nf ? "flat" : "not flat") +
              fmt(", hermitian %.0f/200, independent parts %.0f/200", herm, indep)};
}

Outcome ellipticity() {
  const EllipticityReport id = is_elliptic(form_b(CMat::Identity(2, 2)));
  bool ones = id.elliptic && id.eigenvalues.size() == 4;
  for (Eigen::Index k = 0; ones && k < id.eigenvalues.size(); ++k) ones = id.eigenvalues[k] == 1.0;
  CMat a = CMat::Zero(2, 2);
  a(0, 0) = 0.5;
  const bool square = is_elliptic({a, CMat::Zero(2, 2), a}).elliptic;
  std::mt19937_64 rng(102);
  int agree = 0, elliptic = 0;
  for (int k = 0; k < 50; ++k) {
    const CMat g = random_cmat(rng, 2);
    const CMat h = (g * g.adjoint()).eval() + 0.1 * CMat::Identity(2, 2);
    CMat c = random_cmat(rng, 2);
    c = (k % 2 ? 0.05 : 1.0) * (c + c.transpose()).eval();
    const QuadraticForm q(c.conjugate(), h, c);
    const bool e = is_elliptic(q).elliptic;
    elliptic += e;
    agree += e == is_elliptic(q.composed(random_unitary(rng, 2))).elliptic;
  }
  return {ones && !square && agree == 50,
          std::string("(0,I,0) eigenvalues ") + (ones ? "all 1" : "wrong") + ", Re(z1^2) " +
              (square ? "elliptic" : "non-elliptic") +
              fmt(", unitary congruence %.0f/50 agree (%.0f elliptic)", agree, elliptic)};
}

Outcome quadric_orbit() {
  const SurfaceModel s = fixtures::sq();
  const EllipsoidProjection pi(s, pole_of(s));
  CVec z(2);
  z << std::sqrt(0.5), 0.0;
  OrbitOptions o1;
  o1.rk_step = 1e-2;
  o1.directions = 16;
  OrbitOptions o2 = o1;
  o2.rk_step = 0.5e-2;
  const Orbit a = trace_orbit(s, pi, s.param(z), o1);
  const Orbit b = trace_orbit(s, pi, s.param(z), o2);
  double drift = 0.0;
  for (const CVec& q : a.points) drift = std::max(drift, std::abs(q[2] - cplx(0.5)) / 0.5);
  const double ratio = a.closure_residual / b.closure_residual;
  return {a.closed && drift < 1e-4 && ratio >= 8.0,
          std::string(a.closed ? "closed" : "open") + fmt(", level drift %.2e, closure ratio %.1f", drift, ratio)};
}

Outcome asymptotics() {
  const SurfaceModel s = fixtures::perturbed_quadric();
  const SurfaceModel s0 = fixtures::sq();
  const CVec dir = (CVec(2) << cplx(0.6, 0.3), cplx(-0.2, 0.7)).finished().normalized();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (int k = 0; k <= 8; ++k) {
    const double r = std::pow(10.0, -3.0 + 2.0 * k / 8);
    const RVec u = s.param(r * dir);
    const double d = subspace_distance(orbit_distribution(s, u).E, orbit_distribution(s0, u).E);
    const double x = std::log(r), y = std::log(d);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return {std::abs(slope - 2.0) <= 0.3, fmt("log-log slope of dist(E, E0) %.3f, expected 2 +- 0.3", slope)};
}

Outcome level_function() {
  AtlasOptions o;
  o.levels = 20;
  o.orbit.directions = 8;
  const FoliationAtlas a = build_nu(fixtures::sph(), o);
  bool monotone = a.orbits.size() == 20;
  double prev = -1.0;
  for (int k = 1; k <= 20; ++k) {
    const double v = a.nu(sphere_point(kPi * k / 21.0));
    monotone = monotone && v > prev;
    prev = v;
  }
  o.levels = 1;
  o.smooth = true;
  const FoliationAtlas sm = build_nu(fixtures::sph(), o);
  double north = 0, south = 0;
  std::string trail;
  for (double h : {1e-1, 3e-2, 1e-2}) {
    north = std::abs(sm.nu(sphere_point(h)) - 0.0) / h;
    south = std::abs(1.0 - sm.nu(sphere_point(kPi - h))) / h;
    trail += fmt(" %.0e:", h) + fmt("%.1e/%.1e", north, south);
  }
  return {monotone && north < 1e-3 && south < 1e-3,
          std::string("raw nu ") + (monotone ? "strictly monotone" : "NOT monotone") +
              " over 20 levels; smoothed quotients (h: north/south)" + trail};
}

Outcome census_check() {
  CensusOptions o;
  o.atlas.levels = 20;
  o.atlas.orbit.directions = 16;
  const CensusReport r = census(fixtures::sph(), o);
  int ef = 0;
  for (const Pole& p : r.complex_points) ef += p.elliptic_flat;
  const CensusReport snf = census(fixtures::snf());
  bool thrown = false;
  try {
    orbit_census(fixtures::snf());
  } catch (const Error& e) {
    thrown = e.code() == ErrorCode::HypothesisViolation;
  }
  const bool pass = r.ok() && r.complex_points.size() == 2 && ef == 2 && r.orbits_closed == 20 &&
                    r.orbits_connected == 20 && snf.violation == "flatness" && thrown;
  return {pass, fmt("SPH: %.0f complex points (%.0f elliptic flat), ", r.complex_points.size(), ef) +
                    fmt("%.0f/20 closed, %.0f/20 connected; SNF: ", r.orbits_closed, r.orbits_connected) +
                    (thrown ? "HypothesisViolation(" + snf.violation + ")" : "no violation")};
}

Outcome moments() {
  const FramedCycle fc(fixtures::fam_cycle(0.5), ProjectionFrame::identity(2));
  FillOptions opt;
  opt.nodes = 512;
  double c0 = 0, c12 = 0;
  for (cplx zeta : {cplx(0.3, 0.0), cplx(-0.2, 0.5), cplx(0.1, -0.6)}) {
    const auto C = fiber_power_sums(fc, (CVec(1) << zeta).finished(), 2, opt);
    c0 = std::max(c0, std::abs(C[0] - 1.0));
    c12 = std::max({c12, std::abs(C[1] - 0.5 * zeta), std::abs(C[2] - std::pow(0.5 * zeta, 2))});
  }
  double outside = 0;
  for (cplx z : {cplx(1.5, 0.2), cplx(-2.0, 0.0), cplx(0.0, 1.3)})
    for (const cplx& c : fiber_power_sums(fc, (CVec(1) << z).finished(), 4, opt))
      outside = std::max(outside, std::abs(c));
  return {c0 < 1e-6 && c12 < 1e-8 && outside < 1e-10,
          fmt("|C0-1| %.1e, C1/C2 error %.1e, outside max |C_m| %.1e", c0, c12, outside)};
}

Outcome newton() {
  std::mt19937_64 rng(103);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  double worst = 0;
  for (int trial = 0; trial < 600; ++trial) {
    const int k = 1 + trial % 6;
    std::vector<cplx> roots(k);
    for (auto& r : roots) r = cplx(U(rng), U(rng));
    std::vector<cplx> coeffs{1.0};
    for (const cplx& r : roots) {
      std::vector<cplx> next(coeffs.size() + 1, 0.0);
      for (size_t i = 0; i < coeffs.size(); ++i) {
        next[i + 1] += coeffs[i];
        next[i] -= r * coeffs[i];
      }
      coeffs = next;
    }
    const auto back = newton_reconstruct(power_sums_of(polynomial_roots(coeffs), k), k);
    for (int i = 0; i <= k; ++i) worst = std::max(worst, std::abs(back[i] - coeffs[i]));
  }
  return {worst < 1e-8, fmt("600 root sets, k <= 6, coefficient error %.1e", worst)};
}

Outcome filling() {
  const FramedCycle fc(fixtures::latitude_cycle(0.5), ProjectionFrame::identity(3));
  const LeafChain leaf = fill_slice(fc);
  double fiber = 0;
  for (const CVec& p : leaf.sample_points()) fiber = std::max(fiber, std::abs(p[2] - 0.5));
  const StokesReport r = verify_boundary(leaf, fc);
  LeafChain shifted = leaf;
  shifted.graph->coeffs().setZero();
  shifted.graph->coeffs()[0] = 0.6;
  const double neg = verify_boundary(shifted, fc).residual;
  return {fiber < 1e-6 && r.residual < 1e-3 && neg > 0.05,
          fmt("fiber error %.1e, Stokes residual %.1e", fiber, r.residual) +
              fmt(" over %.0f forms, shifted leaf %.2e", r.forms, neg)};
}

Outcome invariance() {
  std::mt19937_64 rng(104);
  const SlicedCycle c = fixtures::latitude_cycle(0.5);
  const auto r1 = projection_invariance_check(c, ProjectionFrame::identity(3),
                                              ProjectionFrame::rotated_base(random_unitary(rng, 2)));
  const auto r2 = projection_invariance_check(c, ProjectionFrame::rotated_base(random_unitary(rng, 2)),
                                              ProjectionFrame::rotated_base(random_unitary(rng, 2)));
  const double d = std::max(r1.discrepancy, r2.discrepancy);
  return {d < 1e-6 && r1.compared > 0 && r2.compared > 0,
          fmt("Hausdorff distance %.1e over %.0f + %.0f samples", d, r1.compared, r2.compared)};
}

bool run_cli(const std::string& surface, const std::string& config, const fs::path& out, int threads,
             int expect) {
  fs::remove_all(out);
  const std::string cmd = "CRFLAT_THREADS=" + std::to_string(threads) + " '" + CRFLAT_BIN + "' pipeline --surface '" +
                          std::string(CRFLAT_SAMPLES) + "/" + surface + "' --config '" + CRFLAT_SAMPLES + "/" +
                          config + "' --out '" + out.string() + "' > /dev/null 2>&1";
  const int st = std::system(cmd.c_str());
  return WIFEXITED(st) && WEXITSTATUS(st) == expect;
}

const fs::path& scratch() {
  static const fs::path p = fs::temp_directory_path() / "crflat_acceptance";
  return p;
}

Outcome end_to_end() {
  const fs::path sph = scratch() / "sph_t1", cross = scratch() / "crossing";
  const bool ok = run_cli("sph.json", "config.json", sph, 1, 0);
  double worst = 0, cover = 1e300;
  int records = 0, points = 0;
  if (ok) {
    const Json mesh = Json::parse(read_text(sph / "mesh.json"));
    records = int(mesh["levels"].size());
    auto leaf_points = [&](const Json& leaf) {
      CMat U(3, 3);
      for (int i = 0; i < 3; ++i)
        for (int k = 0; k < 3; ++k) U(i, k) = cplx(leaf["frame"][i][k][0], leaf["frame"][i][k][1]);
      double reach = 0;
      for (const Json& cell : leaf["cells"])
        for (const Json& r : cell["roots"]) {
          CVec y(3);
          y << cplx(cell["base"][0][0], cell["base"][0][1]), cplx(cell["base"][1][0], cell["base"][1][1]),
              cplx(r[0], r[1]);
          const CVec p = U * y;
          const double ball = std::max(0.0, p.head(2).squaredNorm() + p[2].real() * p[2].real() - 1.0);
          worst = std::max({worst, std::abs(p[2].imag()), ball});
          reach = std::max(reach, p.head(2).norm() / std::sqrt(std::max(1e-300, 1.0 - p[2].real() * p[2].real())));
          ++points;
        }
      return reach;
    };
    for (const Json& L : mesh["levels"]) cover = std::min(cover, leaf_points(L["leaf"]));
    for (const Json& c : mesh["caps"]) leaf_points(c["leaf"]);
  }
  const bool cross_ok = run_cli("crossing.json", "crossing_config.json", cross, 1, int(ErrorCode::VerificationFailed));
  bool engineered = false;
  int pairs = 0;
  if (cross_ok) {
    const Json rep = Json::parse(read_text(cross / "report.json"));
    const Json& cs = rep["collisions"]["collisions"];
    pairs = int(cs.size());
    engineered = pairs == 1;
    for (const Json& c : cs) {
      const double xa = std::cos(kPi * c["x_a"].get<double>()), xb = std::cos(kPi * c["x_b"].get<double>());
      engineered = engineered && std::abs(xa - fixtures::kCrossingLevels[0]) < 1e-9 &&
                   std::abs(xb - fixtures::kCrossingLevels[1]) < 1e-9;
    }
  }
  return {ok && records == 20 && worst < 1e-6 && cover > 0.8 && cross_ok && engineered,
          std::string("SPH exit ") + (ok ? "0" : "nonzero") +
              fmt(", %.0f leaf records, %.0f points, distance to model %.1e", records, points, worst) +
              fmt(", radial reach %.2f; crossing: %.0f collision pair(s)", cover, pairs) +
              (engineered ? " at x = 0.3, -0.7" : "")};
}

Outcome hull() {
  int inside = 0, total = 0;
  std::vector<std::pair<LeafChain, FramedCycle>> leaves;
  for (double x : {-0.6, 0.5}) {
    FramedCycle fc(fixtures::latitude_cycle(x), ProjectionFrame::identity(3));
    leaves.emplace_back(fill_slice(fc), fc);
  }
  for (double c : {0.4}) {
    FramedCycle fc(fixtures::hopf_cycle(c, std::sqrt(c), [c](const CVec&) { return cplx(c); }),
                   ProjectionFrame::identity(3));
    leaves.emplace_back(fill_slice(fc), fc);
  }
  for (const auto& [leaf, fc] : leaves) {
    ++total;
    inside += convex_hull_check(leaf, fc, 1e-6, 0);
  }
  const auto& [leaf, fc] = leaves[1];
  LeafChain bad = leaf;
  for (LeafCell& c : bad.cells)
    if (!c.boundary && c.fiber.c0 == 1) {
      c.fiber.roots[0] += 0.1;
      break;
    }
  const bool control = convex_hull_check(bad, fc, 1e-6, 0);
  return {inside == total && !control,
          fmt("%.0f/%.0f SPH and SQ3 leaves inside their boundary hulls, displaced sample ", inside, total) +
              (control ? "accepted" : "rejected")};
}

Outcome glue() {
  std::vector<double> x;
  for (int i = 0; i <= 200; ++i) x.push_back(-1.0 + 2.0 * i / 200);
  std::vector<double> r0, r1, r2;
  for (double t : x) {
    r0.push_back(t * t);
    r1.push_back(2 * t * t);
    r2.push_back(t * t + 1);
  }
  const GlueResult g = convex_glue_1d(x, r0, r1, {-0.1, 0.1}, {-0.5, 0.5});
  bool sandwich = true;
  for (size_t i = 0; i < x.size(); ++i) {
    sandwich = sandwich && g.rho[i] >= r0[i] && g.rho[i] <= r1[i];
    if (std::abs(x[i]) <= 0.1) sandwich = sandwich && g.rho[i] == r1[i];
    if (std::abs(x[i]) >= 0.5) sandwich = sandwich && g.rho[i] == r0[i];
  }
  const double margin = convexity_margin(x, g.rho);
  bool infeasible = false;
  try {
    convex_glue_1d(x, r0, r2, {-0.05, 0.05}, {-0.1, 0.1});
  } catch (const Error& e) {
    infeasible = e.code() == ErrorCode::GlueInfeasible;
  }
  return {sandwich && margin > 0 && infeasible,
          fmt("feasible: convexity margin %.3f, sandwich ", margin) + (sandwich ? "exact" : "broken") +
              "; infeasible gap: " + (infeasible ? "GlueInfeasible" : "accepted")};
}

Outcome determinism() {
  const fs::path base = scratch() / "sph_t1";
  std::string mismatch;
  int files = 0;
  for (int threads : {2, 4}) {
    const fs::path other = scratch() / ("sph_t" + std::to_string(threads));
    if (!run_cli("sph.json", "config.json", other, threads, 0)) return {false, "pipeline failed"};
    for (const auto& e : fs::directory_iterator(base)) {
      ++files;
      const fs::path twin = other / e.path().filename();
      if (!fs::exists(twin) || read_text(e.path()) != read_text(twin))
        mismatch += " " + e.path().filename().string();
    }
  }
  return {files > 0 && mismatch.empty(),
          fmt("%.0f artifact comparisons at CRFLAT_THREADS=1,2,4", files) +
              (mismatch.empty() ? ", all byte-identical" : ", differ:" + mismatch)};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    double budget;  // seconds
    std::function<Outcome()> run;
  };
  const Criterion criteria[] = {
      {"flatness classifier", 1, flatness},
      {"ellipticity", 1, ellipticity},
      {"quadric orbit tracing", 10, quadric_orbit},
      {"orbit asymptotics", 30, asymptotics},
      {"level function", 30, level_function},
      {"census", 60, census_check},
      {"moments", 5, moments},
      {"newton round trip", 1, newton},
      {"filling and stokes", 60, filling},
      {"projection invariance", 30, invariance},
      {"end to end", 300, end_to_end},
      {"maximum principle", 10, hull},
      {"convex glue", 5, glue},
      {"determinism", 300, determinism},
  };
  fs::create_directories(scratch());
  int failed = 0, index = 0;
  for (const Criterion& c : criteria) {
    ++index;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool pass = o.pass && secs < c.budget;
    failed += !pass;
    std::printf("%-4s %2d %-22s %7.2fs/%4.0fs  %s\n", pass ? "PASS" : "FAIL", index, c.name, secs, c.budget,
                o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%d criteria passed\n", index - failed, index);
  return failed ? 1 : 0;
}
