#pragma once

// Leafwise filling of a level cycle: condition (H), Cauchy moments of the
// line slices, Newton reconstruction of the fiber polynomial and the Stokes
// check of the resulting leaf.

#include "crflat/cycle.hpp"
#include "crflat/error.hpp"
#include "crflat/linalg.hpp"
#include "crflat/parallel.hpp"

#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <vector>

namespace crflat {

// ---------------------------------------------------------------------------
// condition (H)

struct HReport {
  bool nonempty = false;
  bool connected = false;
  bool transversal = false;
  int components = 0;
  double min_dx = 0.0;
  std::string failure;  // "", "empty", "connectivity", "transversality"

  bool ok() const { return failure.empty(); }
};

inline HReport check_condition_H(const SlicedCycle& c, double dx_tol = 1e-8) {
  HReport r;
  r.nonempty = !c.points.empty();
  if (!r.nonempty) {
    r.failure = "empty";
    return r;
  }
  std::vector<int> parent(c.points.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& [a, b] : c.edges) parent[find(a)] = find(b);
  for (int i = 0; i < int(parent.size()); ++i) r.components += find(i) == i;
  r.connected = r.components == 1;
  r.min_dx = c.dx.empty() ? 0.0 : *std::min_element(c.dx.begin(), c.dx.end());
  r.transversal = !c.dx.empty() && r.min_dx > dx_tol;
  if (!r.connected) r.failure = "connectivity";
  else if (!r.transversal) r.failure = "transversality";
  return r;
}

// ---------------------------------------------------------------------------
// moments and Newton identities

struct FillOptions {
  int nodes = 512;          // contour nodes per line slice
  int base_grid = 7;        // slice-base grid per real axis
  int cauchy_grid = 8;      // initial quadtree grid in the Cauchy plane
  int max_depth = 3;
  int extra_moments = 2;
  double close_factor = 4.0;  // base points closer than this many node spacings are rejected
  double c0_tol = 1e-6;
  double graph_tol = 1e-8;
  int threads = thread_hint();
};

/// Moments C_0..C_M at a base point (frame coordinates); zeros when the
/// complex line through the base misses the cycle.
inline std::vector<cplx> fiber_power_sums(const FramedCycle& fc, const CVec& base, int M,
                                          const FillOptions& opt = {}) {
  const int m = fc.n() - 1;
  const auto curve = fc.line_slice(CVec(base.head(m - 1)), opt.nodes);
  if (!curve) return std::vector<cplx>(M + 1, 0.0);
  const cplx zeta = base[m - 1];
  if (curve->distance(zeta) < opt.close_factor * curve->spacing())
    fail(ErrorCode::BaseTooClose, "base point too close to the projected cycle");
  return curve->moments(zeta, M);
}

/// Monic polynomial (ascending coefficients, leading 1) whose roots have the
/// power sums p[0..k-1] = p_1..p_k.
inline std::vector<cplx> newton_reconstruct(const std::vector<cplx>& p, int k) {
  if (k < 0) fail(ErrorCode::NegativeSheetCount, "negative sheet count");
  if (int(p.size()) < k) fail(ErrorCode::SchemaError, "not enough power sums");
  std::vector<cplx> e(k + 1, 0.0);
  e[0] = 1.0;
  for (int j = 1; j <= k; ++j) {
    cplx s = 0.0;
    for (int i = 1; i <= j; ++i) s += (i % 2 == 1 ? 1.0 : -1.0) * e[j - i] * p[i - 1];
    e[j] = s / double(j);
  }
  std::vector<cplx> coeffs(k + 1);
  for (int j = 0; j <= k; ++j) coeffs[k - j] = (j % 2 == 0 ? 1.0 : -1.0) * e[j];
  return coeffs;
}

/// Roots of a monic polynomial (ascending coefficients) via the companion matrix.
inline std::vector<cplx> polynomial_roots(const std::vector<cplx>& coeffs) {
  const int k = int(coeffs.size()) - 1;
  if (k <= 0) return {};
  if (k == 1) return {-coeffs[0]};
  CMat C = CMat::Zero(k, k);
  for (int i = 1; i < k; ++i) C(i, i - 1) = 1.0;
  for (int i = 0; i < k; ++i) C(i, k - 1) = -coeffs[i];
  Eigen::ComplexEigenSolver<CMat> es(C);
  std::vector<cplx> r(es.eigenvalues().data(), es.eigenvalues().data() + k);
  std::sort(r.begin(), r.end(), [](cplx a, cplx b) {
    return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
  });
  return r;
}

inline std::vector<cplx> power_sums_of(const std::vector<cplx>& roots, int M) {
  std::vector<cplx> p(M, 0.0);
  for (const cplx& r : roots) {
    cplx q = r;
    for (int m = 0; m < M; ++m, q *= r) p[m] += q;
  }
  return p;
}

/// True when the roots have a multiple root at the discriminant tolerance.
inline bool has_multiple_root(const std::vector<cplx>& roots, const std::vector<cplx>& coeffs,
                              double rel = 1e-10) {
  const int k = int(roots.size());
  if (k < 2) return false;
  double disc = 1.0;
  for (int i = 0; i < k; ++i)
    for (int j = i + 1; j < k; ++j) disc *= std::norm(roots[i] - roots[j]);
  double cn = 0.0;
  for (const cplx& c : coeffs) cn += std::norm(c);
  return disc < rel * std::pow(std::sqrt(cn), 2 * k - 2);
}

struct FiberData {
  int c0 = 0;
  int multiplicity = 1;
  double c0_error = 0.0;
  std::vector<cplx> moments;
  std::vector<cplx> coeffs;
  std::vector<cplx> roots;
  double consistency = 0.0;  // mismatch of the extra moments
  bool singular = false;
};

inline FiberData fiber_from_moments(const std::vector<cplx>& C, int extra) {
  FiberData f;
  f.moments = C;
  const double c0 = C[0].real();
  int k = int(std::lround(c0));
  f.c0_error = std::max(std::abs(c0 - k), std::abs(C[0].imag()));
  f.c0 = k;
  if (k < 0) {
    f.multiplicity = -1;
    k = -k;
  }
  if (int(C.size()) < k + 1 + extra) fail(ErrorCode::InconsistentSheetCount, "sheet count exceeds moment order");
  std::vector<cplx> p(k);
  for (int m = 1; m <= k; ++m) p[m - 1] = double(f.multiplicity) * C[m];
  f.coeffs = newton_reconstruct(p, k);
  f.roots = polynomial_roots(f.coeffs);
  const auto pred = power_sums_of(f.roots, k + extra);
  for (int m = k + 1; m <= k + extra; ++m)
    f.consistency = std::max(f.consistency, std::abs(pred[m - 1] - double(f.multiplicity) * C[m]));
  f.singular = has_multiple_root(f.roots, f.coeffs);
  return f;
}

/// Fiber over one base point; throws BaseTooClose near the projected cycle.
inline FiberData fiber_at(const FramedCycle& fc, const CVec& base, int max_sheets,
                          const FillOptions& opt = {}) {
  return fiber_from_moments(fiber_power_sums(fc, base, max_sheets + opt.extra_moments, opt),
                            opt.extra_moments);
}

// ---------------------------------------------------------------------------
// leaves

struct LeafCell {
  CVec base;          // frame coordinates
  double size = 0.0;  // edge of the Cauchy-plane cell
  bool boundary = false;
  FiberData fiber;
};

struct LeafChain {
  double level = 0.0;
  int n = 0;
  ProjectionFrame frame;
  std::vector<LeafCell> cells;
  std::optional<HolomorphicPolynomial> graph;  // single-sheet leaves
  double graph_residual = 0.0;
  int max_sheets = 0;
  int multiplicity = 1;
  int singular_cells = 0;
  double max_c0_error = 0.0;
  double max_consistency = 0.0;

  /// Points of the leaf in C^n.
  std::vector<CVec> sample_points() const {
    std::vector<CVec> out;
    for (const LeafCell& c : cells) {
      if (c.boundary) continue;
      for (const cplx& r : c.fiber.roots) {
        CVec y(n);
        y.head(n - 1) = c.base;
        y[n - 1] = r;
        out.push_back(frame.to_ambient(y));
      }
    }
    return out;
  }
};

namespace detail {

inline void fit_graph(LeafChain& leaf, double tol) {
  std::vector<CVec> pts;
  std::vector<cplx> vals;
  double scale = 1.0;
  for (const LeafCell& c : leaf.cells)
    if (!c.boundary && c.fiber.c0 == 1) {
      pts.push_back(c.base);
      vals.push_back(c.fiber.roots[0]);
      scale = std::max(scale, std::abs(c.fiber.roots[0]));
    }
  if (pts.empty()) return;
  const size_t stride = std::max<size_t>(1, pts.size() / 4000);
  if (stride > 1) {
    std::vector<CVec> p2;
    std::vector<cplx> v2;
    for (size_t i = 0; i < pts.size(); i += stride) {
      p2.push_back(pts[i]);
      v2.push_back(vals[i]);
    }
    pts.swap(p2);
    vals.swap(v2);
  }
  for (int d = 0; d <= 8; ++d) {
    HolomorphicPolynomial g(leaf.n - 1, d);
    if (g.size() > int(pts.size())) break;
    const double res = g.fit(pts, vals);
    if (!leaf.graph || res < leaf.graph_residual) {
      leaf.graph = g;
      leaf.graph_residual = res;
    }
    if (res < tol * scale) break;
  }
}

struct QuadCell {
  cplx center;
  double size;
  int depth;
};

}  // namespace detail

/// Fills one level: moments on a grid of line slices with quadtree refinement
/// towards the projected cycle in the Cauchy plane.
inline LeafChain fill_slice(const FramedCycle& fc, const FillOptions& opt = {}) {
  LeafChain leaf;
  leaf.level = fc.level();
  leaf.n = fc.n();
  leaf.frame = fc.frame();
  const int m = fc.n() - 1;
  const int k2 = m - 1;  // complex dimension of the slice base
  const double R = fc.max_radius();
  // slice-base grid (a single empty base for curves in C^2)
  std::vector<CVec> bases;
  if (k2 == 0) {
    bases.push_back(CVec(0));
  } else {
    const RVec c2 = fc.center().head(2 * k2);
    const int g = opt.base_grid;
    const int total = int(std::pow(g, 2 * k2));
    for (int idx = 0; idx < total; ++idx) {
      RVec v(2 * k2);
      int rest = idx;
      for (int a = 0; a < 2 * k2; ++a) {
        v[a] = c2[a] + R * (-1.0 + (2.0 * (rest % g) + 1.0) / g);
        rest /= g;
      }
      if ((v - c2).norm() < R) bases.push_back(complexify(v));
    }
  }
  const int max_sheets = 8;
  std::vector<std::vector<LeafCell>> per_line(bases.size());
  parallel_for(int(bases.size()), [&](int li) {
    const auto curve = fc.line_slice(bases[li], opt.nodes);
    if (!curve) return;
    double lo_x = 1e300, hi_x = -1e300, lo_y = 1e300, hi_y = -1e300;
    for (const cplx& z : curve->z()) {
      lo_x = std::min(lo_x, z.real());
      hi_x = std::max(hi_x, z.real());
      lo_y = std::min(lo_y, z.imag());
      hi_y = std::max(hi_y, z.imag());
    }
    const double side = 1.1 * std::max(hi_x - lo_x, hi_y - lo_y);
    const cplx mid(0.5 * (lo_x + hi_x), 0.5 * (lo_y + hi_y));
    const double h0 = side / opt.cauchy_grid;
    std::vector<detail::QuadCell> stack;
    for (int i = opt.cauchy_grid - 1; i >= 0; --i)
      for (int j = opt.cauchy_grid - 1; j >= 0; --j)
        stack.push_back({mid + cplx(-0.5 * side + (i + 0.5) * h0, -0.5 * side + (j + 0.5) * h0), h0, 0});
    auto& out = per_line[li];
    const double too_close = opt.close_factor * curve->spacing();
    while (!stack.empty()) {
      const detail::QuadCell q = stack.back();
      stack.pop_back();
      const double d = curve->distance(q.center);
      const bool near = d < q.size * M_SQRT2;
      if (near && q.depth < opt.max_depth) {
        const double h = 0.5 * q.size;
        for (int s = 3; s >= 0; --s)
          stack.push_back({q.center + cplx((s % 2 - 0.5) * h, (s / 2 - 0.5) * h), h, q.depth + 1});
        continue;
      }
      LeafCell cell;
      cell.base = CVec(m);
      cell.base.head(k2) = bases[li];
      cell.base[k2] = q.center;
      cell.size = q.size;
      if (d < too_close) {
        cell.boundary = true;
      } else {
        cell.fiber = fiber_from_moments(curve->moments(q.center, max_sheets + opt.extra_moments),
                                        opt.extra_moments);
      }
      out.push_back(std::move(cell));
    }
    // sheet counts agree between touching cells not separated by the cycle
    for (size_t a = 0; a < out.size(); ++a)
      for (size_t b = a + 1; b < out.size(); ++b) {
        const LeafCell &x = out[a], &y = out[b];
        if (x.boundary || y.boundary || x.fiber.c0 == y.fiber.c0) continue;
        const cplx dz = x.base[k2] - y.base[k2];
        const double reach = 0.5 * (x.size + y.size) * (1 + 1e-9);
        if (std::abs(dz.real()) > reach || std::abs(dz.imag()) > reach) continue;
        const double sep = std::min(curve->distance(x.base[k2]) - x.size,
                                    curve->distance(y.base[k2]) - y.size);
        if (sep > 0)
          fail(ErrorCode::InconsistentSheetCount, "sheet count jumps inside a component");
      }
  }, opt.threads);
  int sign = 0;
  for (auto& line : per_line)
    for (auto& c : line) {
      if (!c.boundary && c.fiber.c0 != 0) {
        if (sign != 0 && sign != c.fiber.multiplicity)
          fail(ErrorCode::InconsistentSheetCount, "mixed chain signs within one level");
        sign = c.fiber.multiplicity;
        leaf.max_sheets = std::max(leaf.max_sheets, std::abs(c.fiber.c0));
        leaf.singular_cells += c.fiber.singular;
        leaf.max_consistency = std::max(leaf.max_consistency, c.fiber.consistency);
      }
      if (!c.boundary) leaf.max_c0_error = std::max(leaf.max_c0_error, c.fiber.c0_error);
      leaf.cells.push_back(std::move(c));
    }
  leaf.multiplicity = sign == 0 ? 1 : sign;
  if (leaf.max_sheets == 1) detail::fit_graph(leaf, opt.graph_tol);
  return leaf;
}

inline LeafChain fill_slice(const SlicedCycle& c, const ProjectionFrame& frame,
                            const FillOptions& opt = {}) {
  return fill_slice(FramedCycle(c, frame), opt);
}

/// Holomorphic extension of the fiber values of a cycle that is a graph over
/// its projection.
inline LeafChain graph_extension_fill(const SlicedCycle& c, const ProjectionFrame& frame,
                                      double scale_tol = 1e-4, int grid = 8) {
  const int n = c.n();
  const int m = n - 1;
  std::vector<CVec> base;
  std::vector<cplx> fib;
  double scale = 0.0;
  for (const CVec& p : c.points) {
    const CVec y = frame.to_frame(p);
    base.push_back(y.head(m));
    fib.push_back(y[m]);
    scale = std::max(scale, y.norm());
  }
  scale = std::max(scale, 1e-300);
  // injectivity of the projection, by spatial hashing
  const double cell = 1e-6 * std::max(c.diameter(), 1e-300);
  std::map<std::vector<long long>, std::vector<int>> buckets;
  auto key = [&](const CVec& b, const std::vector<int>& shift) {
    std::vector<long long> k(2 * m);
    for (int i = 0; i < m; ++i) {
      k[2 * i] = (long long)std::floor(b[i].real() / cell) + shift[2 * i];
      k[2 * i + 1] = (long long)std::floor(b[i].imag() / cell) + shift[2 * i + 1];
    }
    return k;
  };
  const std::vector<int> none(2 * m, 0);
  for (int i = 0; i < int(base.size()); ++i) buckets[key(base[i], none)].push_back(i);
  const int nshift = int(std::pow(3, 2 * m));
  for (int i = 0; i < int(base.size()); ++i)
    for (int s = 0; s < nshift; ++s) {
      std::vector<int> shift(2 * m);
      int rest = s;
      for (int a = 0; a < 2 * m; ++a, rest /= 3) shift[a] = rest % 3 - 1;
      const auto it = buckets.find(key(base[i], shift));
      if (it == buckets.end()) continue;
      for (int j : it->second)
        if (j > i && (base[i] - base[j]).norm() < cell && std::abs(fib[i] - fib[j]) > 1e-4 * scale)
          fail(ErrorCode::NonGraphOrbit, "projection of the cycle is not injective");
    }
  LeafChain leaf;
  leaf.level = c.level;
  leaf.n = n;
  leaf.frame = frame;
  const double fscale = std::max(1.0, std::abs(fib[0]));
  for (int d = 1; d <= 8; ++d) {
    HolomorphicPolynomial g(m, d);
    const double res = g.fit(base, fib);
    if (!leaf.graph || res < leaf.graph_residual) {
      leaf.graph = g;
      leaf.graph_residual = res;
    }
    if (res < 1e-12 * fscale) break;
  }
  if (leaf.graph_residual > scale_tol * fscale)
    fail(ErrorCode::PoorFit, "boundary values are not holomorphic to degree 8");
  leaf.max_sheets = 1;
  const FramedCycle fc(c, frame);
  const RVec ctr = fc.center();
  const double R = fc.max_radius();
  const int total = int(std::pow(grid, 2 * m));
  for (int idx = 0; idx < total; ++idx) {
    RVec v(2 * m);
    int rest = idx;
    for (int a = 0; a < 2 * m; ++a, rest /= grid)
      v[a] = ctr[a] + R * (-1.0 + (2.0 * (rest % grid) + 1.0) / grid);
    const bool inside = fc.radial_fraction(v) < 1.0;
    LeafCell cell;
    cell.base = complexify(v);
    cell.size = 2.0 * R / grid;
    if (inside) {
      cell.fiber.c0 = 1;
      cell.fiber.roots = {(*leaf.graph)(cell.base)};
    }
    leaf.cells.push_back(std::move(cell));
  }
  return leaf;
}

// ---------------------------------------------------------------------------
// Stokes check

struct StokesOptions {
  int eta_nodes = 16;
  int xi_nodes = 32;
  int rho_nodes = 8;
  int max_degree = 2;       // coefficient degree of the test forms
  double tolerance = 1e-3;  // the normalized residual to be certified
};

struct StokesReport {
  double residual = 0.0;       // max_beta |leaf - cycle| / scale
  double scale = 0.0;
  double self_estimate = 0.0;  // fine vs coarse mesh
  int forms = 0;
  int mesh_points = 0;
  std::vector<double> per_form;
};

namespace detail {

inline std::vector<double> gauss_nodes(int k, std::vector<double>& weights) {
  RMat J = RMat::Zero(k, k);
  for (int i = 1; i < k; ++i) J(i, i - 1) = J(i - 1, i) = i / std::sqrt(4.0 * i * i - 1.0);
  Eigen::SelfAdjointEigenSolver<RMat> es(J);
  std::vector<double> x(k);
  weights.assign(k, 0.0);
  for (int i = 0; i < k; ++i) {
    x[i] = es.eigenvalues()[i];
    weights[i] = 2.0 * std::pow(es.eigenvectors()(0, i), 2);
  }
  return x;
}

/// Test form coeff(y, ybar) dy_I ^ dybar_J.
struct TestForm {
  std::vector<int> alpha, gamma;  // exponents of y and ybar
  std::vector<int> I, J;
};

inline std::vector<std::vector<int>> subsets(int n, int k) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur;
  std::function<void(int)> rec = [&](int start) {
    if (int(cur.size()) == k) {
      out.push_back(cur);
      return;
    }
    for (int i = start; i < n; ++i) {
      cur.push_back(i);
      rec(i + 1);
      cur.pop_back();
    }
  };
  rec(0);
  return out;
}

inline std::vector<TestForm> test_dictionary(int n, int max_degree) {
  const int m = n - 1;
  std::vector<std::vector<int>> monos;
  std::vector<int> e(2 * n, 0);
  std::function<void(int, int)> rec = [&](int i, int left) {
    if (i == 2 * n) {
      monos.push_back(e);
      return;
    }
    for (int k = 0; k <= left; ++k) {
      e[i] = k;
      rec(i + 1, left - k);
    }
    e[i] = 0;
  };
  rec(0, max_degree);
  std::vector<TestForm> out;
  for (int p : {m, m - 1}) {
    const int q = 2 * m - 1 - p;
    for (const auto& I : subsets(n, p))
      for (const auto& J : subsets(n, q))
        for (const auto& mono : monos)
          out.push_back({std::vector<int>(mono.begin(), mono.begin() + n),
                         std::vector<int>(mono.begin() + n, mono.end()), I, J});
  }
  return out;
}

inline cplx monomial(const CVec& y, const std::vector<int>& a, const std::vector<int>& g) {
  cplx v = 1.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    for (int k = 0; k < a[i]; ++k) v *= y[i];
    for (int k = 0; k < g[i]; ++k) v *= std::conj(y[i]);
  }
  return v;
}

/// Pullback of dy_I ^ dybar_J to the parameter frame V (columns).
inline cplx pullback(const CMat& V, const std::vector<int>& I, const std::vector<int>& J) {
  const Eigen::Index k = V.cols();
  CMat M(k, k);
  Eigen::Index r = 0;
  for (int i : I) M.row(r++) = V.row(i);
  for (int j : J) M.row(r++) = V.row(j).conjugate();
  return M.determinant();
}

inline std::pair<int, std::vector<int>> insert_sorted(const std::vector<int>& S, int j) {
  if (std::find(S.begin(), S.end(), j) != S.end()) return {0, {}};
  std::vector<int> out = S;
  int before = 0;
  for (int s : S) before += s < j;
  out.insert(out.begin() + before, j);
  return {before % 2 == 0 ? 1 : -1, out};
}

/// Sphere coordinates of the base directions: theta(t) and d theta / d t.
inline void sphere_chart(int m, const RVec& t, RVec& theta, RMat& dtheta) {
  theta.resize(2 * m);
  dtheta.setZero(2 * m, 2 * m - 1);
  if (m == 1) {
    theta << std::cos(t[0]), std::sin(t[0]);
    dtheta.col(0) << -std::sin(t[0]), std::cos(t[0]);
    return;
  }
  const double ce = std::cos(t[0]), se = std::sin(t[0]);
  const double c1 = std::cos(t[1]), s1 = std::sin(t[1]), c2 = std::cos(t[2]), s2 = std::sin(t[2]);
  theta << ce * c1, ce * s1, se * c2, se * s2;
  dtheta.col(0) << -se * c1, -se * s1, ce * c2, ce * s2;
  dtheta.col(1) << -ce * s1, ce * c1, 0, 0;
  dtheta.col(2) << 0, 0, -se * s2, se * c2;
}

struct StokesIntegrals {
  std::vector<cplx> leaf, cycle;
  int points = 0;
};

inline StokesIntegrals stokes_integrals(const HolomorphicPolynomial& g, const FramedCycle& fc,
                                        const std::vector<TestForm>& forms, int ne, int nx, int nr) {
  const int n = fc.n();
  const int m = n - 1;
  if (m != 1 && m != 2)
    fail(ErrorCode::MeshTooCoarse, "no sphere quadrature for this base dimension");
  const int tdim = 2 * m - 1;
  std::vector<double> we, wr;
  std::vector<double> xe = gauss_nodes(ne, we), xr = gauss_nodes(nr, wr);
  // parameter grid on the sphere of base directions
  std::vector<RVec> ts;
  std::vector<double> tw;
  const double dxi = 2.0 * kPi / nx;
  if (m == 1) {
    for (int a = 0; a < nx; ++a) {
      ts.push_back((RVec(1) << a * dxi).finished());
      tw.push_back(dxi);
    }
  } else {
    for (int i = 0; i < ne; ++i)
      for (int a = 0; a < nx; ++a)
        for (int b = 0; b < nx; ++b) {
          ts.push_back((RVec(3) << 0.25 * kPi * (xe[i] + 1.0), a * dxi, b * dxi).finished());
          tw.push_back(0.25 * kPi * we[i] * dxi * dxi);
        }
  }
  // tables: coefficient monomials, cycle index sets and (m, m) index sets
  std::map<std::vector<int>, int> mono_id;
  std::vector<std::vector<int>> monos;
  auto mono_index = [&](const std::vector<int>& al, const std::vector<int>& ga) {
    std::vector<int> key = al;
    key.insert(key.end(), ga.begin(), ga.end());
    const auto it = mono_id.find(key);
    if (it != mono_id.end()) return it->second;
    mono_id[key] = int(monos.size());
    monos.push_back(key);
    return int(monos.size()) - 1;
  };
  std::map<std::pair<std::vector<int>, std::vector<int>>, int> set_id;
  std::vector<std::pair<std::vector<int>, std::vector<int>>> sets;
  auto set_index = [&](const std::vector<int>& I, const std::vector<int>& J) {
    const auto key = std::make_pair(I, J);
    const auto it = set_id.find(key);
    if (it != set_id.end()) return it->second;
    set_id[key] = int(sets.size());
    sets.push_back(key);
    return int(sets.size()) - 1;
  };
  std::map<std::pair<std::vector<int>, std::vector<int>>, int> top_id;
  std::vector<std::pair<std::vector<int>, std::vector<int>>> top;
  for (const auto& I : subsets(n, m))
    for (const auto& J : subsets(n, m)) {
      top_id[{I, J}] = int(top.size());
      top.push_back({I, J});
    }
  struct Term {
    double factor;
    int mono, set;
  };
  std::vector<std::pair<int, int>> cyc(forms.size());
  std::vector<std::vector<Term>> lf(forms.size());
  for (size_t f = 0; f < forms.size(); ++f) {
    const TestForm& F = forms[f];
    cyc[f] = {mono_index(F.alpha, F.gamma), set_index(F.I, F.J)};
    if (int(F.I.size()) == m) {
      // dybar_j ^ dy_I ^ dybar_J = (-1)^|I| dy_I ^ dybar_j ^ dybar_J
      for (int j = 0; j < n; ++j) {
        if (F.gamma[j] == 0) continue;
        const auto [sg, Jj] = insert_sorted(F.J, j);
        if (sg == 0) continue;
        std::vector<int> gm = F.gamma;
        gm[j] -= 1;
        const double sI = (m % 2 == 0) ? 1.0 : -1.0;
        lf[f].push_back({F.gamma[j] * sI * sg, mono_index(F.alpha, gm), top_id.at({F.I, Jj})});
      }
    } else {
      for (int i = 0; i < n; ++i) {
        if (F.alpha[i] == 0) continue;
        const auto [sg, Ii] = insert_sorted(F.I, i);
        if (sg == 0) continue;
        std::vector<int> al = F.alpha;
        al[i] -= 1;
        lf[f].push_back({double(F.alpha[i] * sg), mono_index(al, F.gamma), top_id.at({Ii, F.J})});
      }
    }
  }
  auto mono_values = [&](const CVec& y) {
    std::vector<cplx> v(monos.size());
    for (size_t k = 0; k < monos.size(); ++k) {
      cplx p = 1.0;
      for (int i = 0; i < n; ++i) {
        for (int e = 0; e < monos[k][i]; ++e) p *= y[i];
        for (int e = 0; e < monos[k][n + i]; ++e) p *= std::conj(y[i]);
      }
      v[k] = p;
    }
    return v;
  };
  StokesIntegrals out;
  out.leaf.assign(forms.size(), 0.0);
  out.cycle.assign(forms.size(), 0.0);
  const RVec c = fc.center();
  std::vector<cplx> D(top.size()), S(sets.size());
  for (size_t q = 0; q < ts.size(); ++q) {
    RVec th;
    RMat dth;
    sphere_chart(m, ts[q], th, dth);
    const double r = fc.radius(th);
    const RVec gr = fc.radius_gradient(th);
    RMat db(2 * m, tdim);  // d(r theta)/dt
    for (int a = 0; a < tdim; ++a) db.col(a) = gr.dot(dth.col(a)) * th + r * dth.col(a);
    // cycle: base c + r theta, fiber from the cycle fit
    {
      CVec y(n);
      y.head(m) = complexify(RVec(c + r * th));
      y[m] = fc.fiber(th);
      const RMat fg = fc.fiber_gradient(th);
      CMat V(n, tdim);
      for (int a = 0; a < tdim; ++a) {
        V.col(a).head(m) = complexify(RVec(db.col(a)));
        V(m, a) = cplx(fg.col(0).dot(dth.col(a)), fg.col(1).dot(dth.col(a)));
      }
      const auto mv = mono_values(y);
      for (size_t k = 0; k < sets.size(); ++k) S[k] = pullback(V, sets[k].first, sets[k].second);
      for (size_t f = 0; f < forms.size(); ++f) out.cycle[f] += tw[q] * mv[cyc[f].first] * S[cyc[f].second];
      ++out.points;
    }
    // leaf: base c + rho r theta, fiber g(base)
    for (int k = 0; k < nr; ++k) {
      const double rho = 0.5 * (xr[k] + 1.0);
      const double w = tw[q] * 0.5 * wr[k];
      CVec y(n);
      y.head(m) = complexify(RVec(c + rho * r * th));
      y[m] = g(y.head(m));
      const CVec gg = g.gradient(y.head(m));
      CMat V(n, tdim + 1);
      auto fill_col = [&](int col, const RVec& dbr) {
        const CVec dbc = complexify(dbr);
        V.col(col).head(m) = dbc;
        V(m, col) = (gg.transpose() * dbc)(0, 0);
      };
      fill_col(0, RVec(r * th));
      for (int a = 0; a < tdim; ++a) fill_col(a + 1, RVec(rho * db.col(a)));
      for (size_t t = 0; t < top.size(); ++t) D[t] = pullback(V, top[t].first, top[t].second);
      const auto mv = mono_values(y);
      for (size_t f = 0; f < forms.size(); ++f) {
        cplx val = 0.0;
        for (const Term& T : lf[f]) val += T.factor * mv[T.mono] * D[T.set];
        out.leaf[f] += w * val;
      }
      ++out.points;
    }
  }
  return out;
}

}  // namespace detail

/// Compares the integral of d(beta) over the leaf with the integral of beta
/// over the cycle for every form of the test dictionary.
inline StokesReport verify_boundary(const LeafChain& leaf, const FramedCycle& fc,
                                    const StokesOptions& opt = {}) {
  StokesReport r;
  if (!leaf.graph) fail(ErrorCode::NonGraphOrbit, "Stokes check needs a single-sheet leaf");
  const auto forms = detail::test_dictionary(fc.n(), opt.max_degree);
  r.forms = int(forms.size());
  const auto fine = detail::stokes_integrals(*leaf.graph, fc, forms, opt.eta_nodes, opt.xi_nodes,
                                             opt.rho_nodes);
  const auto coarse = detail::stokes_integrals(*leaf.graph, fc, forms, opt.eta_nodes / 2,
                                               opt.xi_nodes / 2, opt.rho_nodes / 2);
  r.mesh_points = fine.points;
  for (size_t f = 0; f < forms.size(); ++f)
    r.scale = std::max({r.scale, std::abs(fine.leaf[f]), std::abs(fine.cycle[f])});
  if (r.scale == 0.0) return r;
  for (size_t f = 0; f < forms.size(); ++f) {
    const double res = std::abs(fine.leaf[f] - fine.cycle[f]) / r.scale;
    r.per_form.push_back(res);
    r.residual = std::max(r.residual, res);
    r.self_estimate = std::max({r.self_estimate, std::abs(fine.leaf[f] - coarse.leaf[f]) / r.scale,
                                std::abs(fine.cycle[f] - coarse.cycle[f]) / r.scale});
  }
  if (r.self_estimate > opt.tolerance)
    fail(ErrorCode::MeshTooCoarse, "quadrature does not resolve the test forms");
  return r;
}

// ---------------------------------------------------------------------------
// projection invariance

struct InvarianceReport {
  double discrepancy = 0.0;
  int compared = 0;
};

/// Fills with both frames and compares the fiber point sets on the common
/// regular region (symmetric Hausdorff distance over interior samples).
inline InvarianceReport projection_invariance_check(const SlicedCycle& c, const ProjectionFrame& f1,
                                                    const ProjectionFrame& f2,
                                                    const FillOptions& opt = {},
                                                    int max_points = 120) {
  const FramedCycle c1(c, f1), c2(c, f2);
  const LeafChain l1 = fill_slice(c1, opt), l2 = fill_slice(c2, opt);
  InvarianceReport r;
  auto one_way = [&](const LeafChain& from, const FramedCycle& to) {
    std::vector<CVec> pts;
    const FramedCycle& own = &to == &c1 ? c2 : c1;
    for (const LeafCell& cell : from.cells) {
      if (cell.boundary || cell.fiber.c0 == 0 || cell.fiber.singular) continue;
      if (own.radial_fraction(realify(cell.base)) > 0.8) continue;
      for (const cplx& w : cell.fiber.roots) {
        CVec y(from.n);
        y.head(from.n - 1) = cell.base;
        y[from.n - 1] = w;
        pts.push_back(from.frame.to_ambient(y));
      }
    }
    const int stride = std::max<int>(1, int(pts.size()) / max_points);
    for (size_t i = 0; i < pts.size(); i += stride) {
      const CVec y = to.frame().to_frame(pts[i]);
      const CVec base = y.head(to.n() - 1);
      if (to.radial_fraction(realify(base)) > 0.8) continue;
      FiberData fd;
      try {
        fd = fiber_at(to, base, std::max(1, from.max_sheets + 1), opt);
      } catch (const Error&) {
        continue;
      }
      if (fd.roots.empty() || fd.singular) continue;
      double best = 1e300;
      for (const cplx& w : fd.roots) best = std::min(best, std::abs(w - y[to.n() - 1]));
      r.discrepancy = std::max(r.discrepancy, best);
      ++r.compared;
    }
  };
  one_way(l1, c2);
  one_way(l2, c1);
  if (r.compared == 0) fail(ErrorCode::NoOverlap, "frames share no regular base points");
  return r;
}

}  // namespace crflat
