#pragma once

// Levi-flat variety assembly: stacking of leaves by level, pole caps,
// Levi-flatness residuals, singular loci and projection collisions.

#include <array>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "crflat/filler.hpp"
#include "crflat/orbits.hpp"

namespace crflat {

// ---------------------------------------------------------------------------
// cycles from orbits

struct SliceOptions {
  int dx_probes = 8;
  double probe_step = 1e-4;  // relative to the orbit diameter
};

namespace detail {

/// Unit parameter direction at u that is normal (inside T_qS) to the orbit.
inline RVec orbit_normal_direction(const SurfaceModel& s, const RVec& u, const CRTolerances& tol,
                                   double& ambient_length) {
  const TangentData t = tangent_data(s, u, tol);
  const CRFrame f = first_order_frame(s, t, tol);
  const RMat coords = t.T.transpose() * f.E;
  const RMat perp = orthogonal_complement(coords);
  const RVec nvec = t.T * perp.col(0);
  const RVec a = t.A * (t.DA_pinv * nvec);
  ambient_length = (t.DA * (t.DA_pinv * nvec)).norm();
  return a;
}

}  // namespace detail

/// Converts a traced orbit into a sampled cycle. Path edges are kept, the
/// lifted antipodes and loop returns are identified, and the level
/// differential is probed at evenly spaced samples.
inline SlicedCycle slice_from_orbit(const FoliationAtlas& a, const Orbit& o,
                                    const SliceOptions& opt = {}) {
  SlicedCycle c;
  c.level = o.nu;
  c.points = o.points;
  c.edges = o.edges;
  if (o.closed)
    for (int p = 0; p < int(o.directions.size()); ++p) {
      c.edges.emplace_back(o.index(p, o.steps_per_path / 2), o.index(0, o.steps_per_path / 2));
      c.edges.emplace_back(o.index(p, o.steps_per_path), 0);
    }
  const SurfaceModel& s = *a.surface;
  const int probes = std::max(1, opt.dx_probes);
  const int stride = std::max<int>(1, int(o.params.size()) / probes);
  std::vector<int> idx;
  for (int i = 0; i < int(o.params.size()) && int(idx.size()) < probes; i += stride) idx.push_back(i);
  c.dx.assign(idx.size(), 0.0);
  parallel_for(int(idx.size()), [&](int k) {
    const RVec& u = o.params[idx[k]];
    try {
      double len = 0.0;
      const RVec d = detail::orbit_normal_direction(s, u, a.orbit_options.cr, len);
      const double h = opt.probe_step * std::max(o.diameter, 1e-12) / std::max(len, 1e-300);
      const double up = a.raw_nu(u + h * d), dn = a.raw_nu(u - h * d);
      c.dx[k] = std::abs(up - dn) / (2 * h * len);
    } catch (const Error&) {
      c.dx[k] = 0.0;
    }
  }, a.orbit_options.threads);
  return c;
}

// ---------------------------------------------------------------------------
// the variety

struct VarietyLevel {
  double level = 0.0;
  SlicedCycle cycle;
  FramedCycle framed;
  LeafChain leaf;
  HReport h;
  RVec x_gradient;  // base gradient of x along the leaf (frame coordinates); empty means 0
};

struct PoleCap {
  int pole = 0;
  double level = 0.0;
  double model_level = 0.0;  // level of the quadric model
  LeafChain leaf;
  std::vector<CVec> boundary;
};

struct LeviFlatVariety {
  int n = 0;
  ProjectionFrame frame;
  std::vector<VarietyLevel> levels;  // ascending
  std::vector<PoleCap> caps;
  std::vector<ExceptionalLevel> exceptional;

  bool empty() const { return levels.empty() && caps.empty(); }
};

struct BuildOptions {
  SliceOptions slice;
  CycleFitOptions fit;
  FillOptions fill;
  double dx_tol = 1e-8;
  int cap_levels = 2;
  int cap_grid = 7;
  bool caps = true;
};

/// Frame whose base block spans the complex tangent space at the pole.
inline ProjectionFrame pole_frame(const Pole& p) {
  const CMat& Ut = p.adapted.Ut;
  CMat U(Ut.rows(), Ut.cols() + 1);
  U.leftCols(Ut.cols()) = Ut;
  U.col(Ut.cols()) = p.adapted.nu;
  return {U};
}

/// Leaf of the quadric model {conj(l) W = t + h(Z)} over {s N(Z) <= tau}
/// attached at pole p, where N is the flat normal form and h the
/// holomorphic correction that normalizes it.
inline PoleCap quadric_cap(const Pole& p, double tau, int grid) {
  if (!p.elliptic_flat) fail(ErrorCode::PoleCapFailure, "pole is not elliptic flat: " + p.failure);
  const QuadraticForm& q = p.adapted.form;
  const cplx lam = p.flat.lambda;
  const QuadraticForm r = q.scaled(std::conj(lam));
  const CMat hol = r.a() - r.c().conjugate();
  const double sgn = p.ellipticity.sign;
  const int m = int(q.a().rows());
  const ProjectionFrame frame = pole_frame(p);
  const CVec shift = frame.to_frame(p.point);
  auto normal = [&](const CVec& z) { return sgn * p.normal(z).real(); };
  auto fiber = [&](const CVec& z) -> cplx {
    return lam * (sgn * tau + cplx((z.transpose() * hol * z)(0, 0)));
  };
  PoleCap cap;
  cap.model_level = tau;
  cap.leaf.level = tau;
  cap.leaf.n = m + 1;
  cap.leaf.frame = frame;
  // the normal form is positive definite after the sign; bound its extent
  const RVec ev = p.ellipticity.eigenvalues.cwiseAbs();
  const double lo = ev.size() ? ev.minCoeff() : 1.0;
  if (!(lo > 0)) fail(ErrorCode::PoleCapFailure, "degenerate quadric model");
  const double R = std::sqrt(tau / lo) * 1.05;
  const int total = int(std::pow(grid, 2 * m));
  std::vector<CVec> bases;
  std::vector<cplx> vals;
  for (int idx = 0; idx < total; ++idx) {
    RVec v(2 * m);
    int rest = idx;
    for (int k = 0; k < 2 * m; ++k) {
      v[k] = R * (-1.0 + (2.0 * (rest % grid) + 1.0) / grid);
      rest /= grid;
    }
    const CVec z = complexify(v);
    if (normal(z) > tau) continue;
    LeafCell cell;
    cell.base = shift.head(m) + z;
    cell.size = 2.0 * R / grid;
    cell.fiber.c0 = 1;
    cell.fiber.roots = {shift[m] + fiber(z)};
    cell.fiber.coeffs = {-cell.fiber.roots[0], 1.0};
    bases.push_back(cell.base);
    vals.push_back(cell.fiber.roots[0]);
    cap.leaf.cells.push_back(std::move(cell));
  }
  if (cap.leaf.cells.empty()) {
    LeafCell cell;
    cell.base = shift.head(m);
    cell.fiber.c0 = 1;
    cell.fiber.roots = {shift[m] + fiber(CVec::Zero(m))};
    bases.push_back(cell.base);
    vals.push_back(cell.fiber.roots[0]);
    cap.leaf.cells.push_back(std::move(cell));
  }
  cap.leaf.max_sheets = 1;
  HolomorphicPolynomial g(m, bases.size() >= 6 ? 2 : 0);
  cap.leaf.graph_residual = g.fit(bases, vals);
  cap.leaf.graph = g;
  // boundary: the model ellipsoid sampled along the coordinate circles
  for (int k = 0; k < 2 * m; ++k)
    for (int j = 0; j < 32; ++j) {
      const double ang = 2 * kPi * j / 32;
      RVec v = RVec::Zero(2 * m);
      v[k] = std::cos(ang);
      v[(k + 1) % (2 * m)] = std::sin(ang);
      CVec z = complexify(v);
      const double nz = normal(z);
      if (!(nz > 0)) continue;
      z *= std::sqrt(tau / nz);
      CVec y(m + 1);
      y.head(m) = shift.head(m) + z;
      y[m] = shift[m] + fiber(z);
      cap.boundary.push_back(frame.to_ambient(y));
    }
  return cap;
}

/// Fills every retained level of the atlas and attaches quadric pole caps
/// below the first (and, on spheres, above the last) traced level.
inline LeviFlatVariety build_levi_flat(const FoliationAtlas& a, const BuildOptions& opt = {}) {
  LeviFlatVariety v;
  v.n = a.surface->n();
  v.frame = pole_frame(a.pole);
  v.exceptional = a.exceptional;
  for (const Orbit& o : a.orbits) {
    VarietyLevel L;
    L.level = o.nu;
    try {
      L.cycle = slice_from_orbit(a, o, opt.slice);
      L.h = check_condition_H(L.cycle, opt.dx_tol);
      if (!L.h.ok())
        fail(ErrorCode::HypothesisViolation, "condition H fails: " + L.h.failure);
      L.framed = FramedCycle(L.cycle, v.frame, opt.fit);
      L.leaf = fill_slice(L.framed, opt.fill);
      v.levels.push_back(std::move(L));
    } catch (const Error& e) {
      v.exceptional.push_back({o.nu, e.code(), e.what()});
    }
  }
  std::sort(v.exceptional.begin(), v.exceptional.end(),
            [](const ExceptionalLevel& x, const ExceptionalLevel& y) { return x.level < y.level; });
  if (v.levels.empty()) fail(ErrorCode::AllLevelsExceptional, "no level could be filled");
  if (!opt.caps) return v;
  const SurfaceModel& s = *a.surface;
  auto add_caps = [&](int pole_index, const Orbit& edge, double edge_level, double end_level) {
    const Pole& p = a.complex_points[pole_index];
    if (!p.elliptic_flat) fail(ErrorCode::PoleCapFailure, "pole is not elliptic flat: " + p.failure);
    const EllipsoidProjection pi(s, p);
    double tau = 0.0;
    for (const RVec& u : edge.params) tau += pi.level(u);
    tau /= double(edge.params.size());
    if (!(tau > 0)) fail(ErrorCode::PoleCapFailure, "edge orbit has no model level");
    for (int k = 1; k <= opt.cap_levels; ++k) {
      const double f = std::ldexp(1.0, -k);
      PoleCap cap = quadric_cap(p, f * tau, opt.cap_grid);
      cap.pole = pole_index;
      cap.level = end_level + f * (edge_level - end_level);
      cap.leaf.level = cap.level;
      v.caps.push_back(std::move(cap));
    }
  };
  add_caps(0, a.orbits.front(), a.orbits.front().nu, 0.0);
  if (s.domain() == Domain::Sphere && a.complex_points.size() > 1)
    add_caps(1, a.orbits.back(), a.orbits.back().nu, a.scale());
  std::sort(v.caps.begin(), v.caps.end(),
            [](const PoleCap& x, const PoleCap& y) { return x.level < y.level; });
  return v;
}

// ---------------------------------------------------------------------------
// Levi-flatness

struct LeviFlatReport {
  double max_residual = 0.0;
  double mean_residual = 0.0;
  double max_complex = 0.0;  // J-invariance of the leaf tangent spaces
  double max_level = 0.0;    // dx on leaf tangents
  int points = 0;
};

namespace detail {

/// Sine of the largest principal angle between span(V) and span(JV).
inline double complex_defect(const RMat& V) {
  const RMat Q = RMat(V.householderQr().householderQ()).leftCols(V.cols());
  const RMat JQ = complex_structure(Q.rows() / 2) * Q;
  const RMat P = JQ - Q * (Q.transpose() * JQ);
  return Eigen::JacobiSVD<RMat>(P).singularValues()[0];
}

}  // namespace detail

/// Tangent checks at interior cells of single-sheet leaves.
inline LeviFlatReport levi_flat_residual(const LeviFlatVariety& v, int per_level = 64) {
  LeviFlatReport r;
  double sum = 0.0;
  auto check_leaf = [&](const LeafChain& leaf, const RVec& xg) {
    if (!leaf.graph) return;
    const int m = leaf.n - 1;
    std::vector<int> cells;
    for (int i = 0; i < int(leaf.cells.size()); ++i)
      if (!leaf.cells[i].boundary && leaf.cells[i].fiber.c0 != 0) cells.push_back(i);
    const int stride = std::max<int>(1, int(cells.size()) / std::max(1, per_level));
    for (size_t k = 0; k < cells.size(); k += stride) {
      const CVec& b = leaf.cells[cells[k]].base;
      const CVec grad = leaf.graph->gradient(b);
      RMat V(2 * leaf.n, 2 * m);
      RVec dx(2 * m);
      for (int j = 0; j < 2 * m; ++j) {
        const cplx dir = j % 2 == 0 ? cplx(1, 0) : cplx(0, 1);
        CVec t = CVec::Zero(leaf.n);
        t[j / 2] = dir;
        t[m] = grad[j / 2] * dir;
        const CVec amb = leaf.frame.to_ambient(t);
        V.col(j) = realify(amb);
        dx[j] = xg.size() ? xg[j] : 0.0;
      }
      const double cx = detail::complex_defect(V);
      double lv = 0.0;
      for (int j = 0; j < 2 * m; ++j)
        lv = std::max(lv, std::abs(dx[j]) / std::sqrt(dx[j] * dx[j] + V.col(j).squaredNorm()));
      r.max_complex = std::max(r.max_complex, cx);
      r.max_level = std::max(r.max_level, lv);
      const double res = std::max(cx, lv);
      r.max_residual = std::max(r.max_residual, res);
      sum += res;
      ++r.points;
    }
  };
  for (const VarietyLevel& L : v.levels) check_leaf(L.leaf, L.x_gradient);
  for (const PoleCap& c : v.caps) check_leaf(c.leaf, RVec());
  r.mean_residual = r.points ? sum / r.points : 0.0;
  return r;
}

// ---------------------------------------------------------------------------
// singular loci

struct SingularPoint {
  double level = 0.0;
  CVec base;   // frame coordinates
  cplx fiber;  // the multiple root
  CVec point;  // ambient
};

struct SingularReport {
  std::vector<SingularPoint> points;
  std::map<double, double> slice_dimension;  // per level with singular points
  double union_dimension = 0.0;
  double max_slice_dimension = 0.0;
};

/// Box-counting dimension over three dyadic scales of the point cloud extent.
inline double box_dimension(const std::vector<RVec>& pts, int scales = 3) {
  if (pts.size() < 2) return 0.0;
  RVec lo = pts[0], hi = pts[0];
  for (const RVec& p : pts) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const double L = (hi - lo).maxCoeff();
  if (!(L > 0)) return 0.0;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int k = 1; k <= scales; ++k) {
    const double eps = L * (1 + 1e-9) / std::ldexp(1.0, k);
    std::map<std::vector<long>, int> boxes;
    for (const RVec& p : pts) {
      std::vector<long> key(p.size());
      for (Eigen::Index i = 0; i < p.size(); ++i) key[i] = long(std::floor((p[i] - lo[i]) / eps));
      boxes[key] = 1;
    }
    const double x = std::log(1.0 / eps), y = std::log(double(boxes.size()));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double d = scales * sxx - sx * sx;
  return d > 0 ? std::max(0.0, (scales * sxy - sx * sy) / d) : 0.0;
}

namespace detail {

inline cplx discriminant(const std::vector<cplx>& roots) {
  cplx d = 1.0;
  for (size_t i = 0; i < roots.size(); ++i)
    for (size_t j = i + 1; j < roots.size(); ++j) d *= (roots[i] - roots[j]) * (roots[i] - roots[j]);
  return d;
}

}  // namespace detail

/// Multiple-root loci of every multi-sheeted leaf, located by Newton's method
/// on the discriminant in the Cauchy coordinate of each line slice.
inline SingularReport detect_singularities(const LeviFlatVariety& v, const FillOptions& fopt = {}) {
  SingularReport rep;
  std::vector<RVec> all;
  for (const VarietyLevel& L : v.levels) {
    const LeafChain& leaf = L.leaf;
    if (leaf.max_sheets < 2) continue;
    const int m = leaf.n - 1;
    const int k2 = m - 1;
    // group interior multi-sheet cells by line
    std::map<std::vector<double>, std::vector<int>> lines;
    for (int i = 0; i < int(leaf.cells.size()); ++i) {
      const LeafCell& c = leaf.cells[i];
      if (c.boundary || std::abs(c.fiber.c0) < 2) continue;
      std::vector<double> key;
      for (int a = 0; a < k2; ++a) {
        key.push_back(c.base[a].real());
        key.push_back(c.base[a].imag());
      }
      lines[key].push_back(i);
    }
    std::vector<SingularPoint> found;
    for (const auto& [key, ids] : lines) {
      auto norm_disc = [&](const LeafCell& c) {
        double s = 1.0;
        for (const cplx& z : c.fiber.roots) s = std::max(s, std::abs(z));
        const int k = int(c.fiber.roots.size());
        return std::abs(detail::discriminant(c.fiber.roots)) / std::pow(s, k * (k - 1));
      };
      for (int i : ids) {
        const LeafCell& c = leaf.cells[i];
        const double di = norm_disc(c);
        bool local_min = true;
        for (int j : ids) {
          if (j == i) continue;
          const LeafCell& o = leaf.cells[j];
          if (std::abs(o.base[k2] - c.base[k2]) > 1.5 * (c.size + o.size)) continue;
          if (norm_disc(o) < di) {
            local_min = false;
            break;
          }
        }
        if (!local_min) continue;
        const int sheets = std::abs(c.fiber.c0);
        auto disc_at = [&](cplx z) {
          CVec b = c.base;
          b[k2] = z;
          return detail::discriminant(fiber_at(L.framed, b, sheets, fopt).roots);
        };
        cplx z = c.base[k2];
        bool ok = false;
        try {
          for (int it = 0; it < 40; ++it) {
            const double h = 1e-4 * c.size;
            const cplx D = disc_at(z);
            const cplx dD = (disc_at(z + h) - disc_at(z - h)) / (2 * h);
            if (dD == cplx(0)) break;
            const cplx step = D / dD;
            z -= step;
            if (std::abs(z - c.base[k2]) > 2 * c.size) break;
            if (std::abs(step) < 1e-10 * std::max(1.0, std::abs(z))) {
              ok = true;
              break;
            }
          }
        } catch (const Error&) {
          ok = false;
        }
        if (!ok) continue;
        bool dup = false;
        for (const SingularPoint& p : found)
          if (p.base.head(k2) == c.base.head(k2) && std::abs(p.base[k2] - z) < 1e-6 * c.size) dup = true;
        if (dup) continue;
        SingularPoint sp;
        sp.level = L.level;
        sp.base = c.base;
        sp.base[k2] = z;
        const FiberData f = fiber_at(L.framed, sp.base, sheets, fopt);
        // the closest pair of roots
        double best = 1e300;
        for (size_t a = 0; a < f.roots.size(); ++a)
          for (size_t b = a + 1; b < f.roots.size(); ++b)
            if (std::abs(f.roots[a] - f.roots[b]) < best) {
              best = std::abs(f.roots[a] - f.roots[b]);
              sp.fiber = 0.5 * (f.roots[a] + f.roots[b]);
            }
        CVec y(leaf.n);
        y.head(m) = sp.base;
        y[m] = sp.fiber;
        sp.point = leaf.frame.to_ambient(y);
        found.push_back(sp);
      }
    }
    if (found.empty()) continue;
    std::vector<RVec> slice;
    for (const SingularPoint& p : found) {
      slice.push_back(realify(p.point));
      RVec q(2 * leaf.n + 1);
      q[0] = p.level;
      q.tail(2 * leaf.n) = realify(p.point);
      all.push_back(q);
      rep.points.push_back(p);
    }
    const double d = box_dimension(slice);
    rep.slice_dimension[L.level] = d;
    rep.max_slice_dimension = std::max(rep.max_slice_dimension, d);
  }
  rep.union_dimension = box_dimension(all);
  return rep;
}

// ---------------------------------------------------------------------------
// projection to C^n

struct Collision {
  double level_a = 0.0, level_b = 0.0;
  int count = 0;
  double min_distance = 0.0;
  CVec example;
};

struct ProjectionReport {
  bool boundary_injective = true;
  double min_boundary_gap = 0.0;
  int pairs_checked = 0;
  std::vector<Collision> collisions;
};

namespace detail {

struct CellKey {
  long a, b, c;
  bool operator==(const CellKey& o) const { return a == o.a && b == o.b && c == o.c; }
};
struct CellKeyHash {
  size_t operator()(const CellKey& k) const {
    return size_t(k.a) * 73856093u ^ size_t(k.b) * 19349663u ^ size_t(k.c) * 83492791u;
  }
};

/// Distance from p to the leaf over the same base point, or nullopt when p
/// projects outside the leaf.
inline std::optional<double> leaf_distance(const VarietyLevel& L, const CVec& p, const FillOptions& fopt) {
  const int m = L.leaf.n - 1;
  const CVec y = L.leaf.frame.to_frame(p);
  const CVec base = y.head(m);
  if (L.framed.radial_fraction(realify(base)) > 0.98) return std::nullopt;
  if (L.leaf.graph) return std::abs((*L.leaf.graph)(base) - y[m]);
  try {
    const FiberData f = fiber_at(L.framed, base, std::max(1, L.leaf.max_sheets), fopt);
    double d = 1e300;
    for (const cplx& r : f.roots) d = std::min(d, std::abs(r - y[m]));
    return f.roots.empty() ? std::nullopt : std::optional<double>(d);
  } catch (const Error&) {
    return std::nullopt;
  }
}

}  // namespace detail

/// Projects the variety to C^n: boundary orbits of distinct levels must not
/// meet (BoundaryCollision otherwise); leaf points lying on the leaf of
/// another level are reported as interior collisions.
inline ProjectionReport project_and_check(const LeviFlatVariety& v, double tol = 1e-6,
                                          int per_leaf = 400, const FillOptions& fopt = {}) {
  ProjectionReport rep;
  double diam = 0.0;
  for (const VarietyLevel& L : v.levels) diam = std::max(diam, L.cycle.diameter());
  const double eps = tol * std::max(diam, 1e-300);
  // boundary: hash on the first three real coordinates
  std::unordered_map<detail::CellKey, std::vector<std::pair<int, int>>, detail::CellKeyHash> grid;
  auto key_of = [&](const CVec& p) {
    return detail::CellKey{long(std::floor(p[0].real() / eps)), long(std::floor(p[0].imag() / eps)),
                           long(std::floor(p.size() > 1 ? p[1].real() / eps : 0.0))};
  };
  rep.min_boundary_gap = 1e300;
  for (int l = 0; l < int(v.levels.size()); ++l) {
    const auto& pts = v.levels[l].cycle.points;
    for (int i = 0; i < int(pts.size()); ++i) grid[key_of(pts[i])].emplace_back(l, i);
  }
  for (int l = 0; l < int(v.levels.size()); ++l) {
    for (const CVec& p : v.levels[l].cycle.points) {
      const detail::CellKey k = key_of(p);
      for (long da = -1; da <= 1; ++da)
        for (long db = -1; db <= 1; ++db)
          for (long dc = -1; dc <= 1; ++dc) {
            const auto it = grid.find({k.a + da, k.b + db, k.c + dc});
            if (it == grid.end()) continue;
            for (auto [lo, io] : it->second) {
              if (lo == l) continue;
              const double d = (v.levels[lo].cycle.points[io] - p).norm();
              rep.min_boundary_gap = std::min(rep.min_boundary_gap, d);
              if (d < eps) rep.boundary_injective = false;
            }
          }
    }
  }
  if (!rep.boundary_injective)
    fail(ErrorCode::BoundaryCollision, "boundary orbits of distinct levels meet after projection");
  // interior: leaf samples of one level against the leaf of another
  std::vector<std::vector<CVec>> samples(v.levels.size());
  for (size_t l = 0; l < v.levels.size(); ++l) {
    const auto pts = v.levels[l].leaf.sample_points();
    const size_t stride = std::max<size_t>(1, pts.size() / std::max(1, per_leaf));
    for (size_t i = 0; i < pts.size(); i += stride) samples[l].push_back(pts[i]);
  }
  std::vector<std::pair<int, int>> pairs;
  for (int a = 0; a < int(v.levels.size()); ++a)
    for (int b = a + 1; b < int(v.levels.size()); ++b) pairs.emplace_back(a, b);
  rep.pairs_checked = int(pairs.size());
  std::vector<Collision> found(pairs.size());
  parallel_for(int(pairs.size()), [&](int k) {
    const auto [a, b] = pairs[k];
    Collision c;
    c.level_a = v.levels[a].level;
    c.level_b = v.levels[b].level;
    c.min_distance = 1e300;
    auto scan = [&](int from, int to) {
      for (const CVec& p : samples[from]) {
        const auto d = detail::leaf_distance(v.levels[to], p, fopt);
        if (!d) continue;
        if (*d < c.min_distance) c.min_distance = *d;
        if (*d < eps) {
          if (c.count == 0) c.example = p;
          ++c.count;
        }
      }
    };
    scan(a, b);
    scan(b, a);
    found[k] = c;
  }, fopt.threads);
  for (const Collision& c : found)
    if (c.count > 0) rep.collisions.push_back(c);
  return rep;
}

}  // namespace crflat
