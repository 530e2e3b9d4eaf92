#pragma once

// Convexity utilities: minimal enclosing balls, convex gluing of sampled
// functions and convex-hull membership.

#include <algorithm>
#include <functional>
#include <map>
#include <random>
#include <vector>

#include "crflat/error.hpp"
#include "crflat/filler.hpp"
#include "crflat/linalg.hpp"
#include "crflat/orbits.hpp"

namespace crflat {

// ---------------------------------------------------------------------------
// minimal enclosing ball

struct Ball {
  RVec center;
  double radius = 0.0;

  bool contains(const RVec& p, double tol = 1e-12) const {
    return (p - center).norm() <= radius * (1 + tol) + tol;
  }
};

namespace detail {

/// Smallest ball with every point of R on its boundary (circumsphere in the
/// affine hull of R).
inline Ball ball_through(const std::vector<RVec>& R, int dim) {
  Ball b;
  if (R.empty()) {
    b.center = RVec::Zero(dim);
    b.radius = -1.0;
    return b;
  }
  const RVec& p0 = R[0];
  const int k = int(R.size()) - 1;
  if (k == 0) {
    b.center = p0;
    return b;
  }
  RMat D(dim, k);
  for (int i = 0; i < k; ++i) D.col(i) = R[i + 1] - p0;
  const RMat A = 2.0 * D.transpose() * D;
  RVec rhs(k);
  for (int i = 0; i < k; ++i) rhs[i] = D.col(i).squaredNorm();
  const RVec lam = A.completeOrthogonalDecomposition().solve(rhs);
  b.center = p0 + D * lam;
  for (const RVec& p : R) b.radius = std::max(b.radius, (p - b.center).norm());
  return b;
}

inline Ball welzl(std::vector<RVec>& P, int n, std::vector<RVec>& R, int dim) {
  Ball b = ball_through(R, dim);
  if (int(R.size()) == dim + 1) return b;
  for (int i = 0; i < n; ++i) {
    if (b.radius >= 0 && b.contains(P[i])) continue;
    R.push_back(P[i]);
    b = welzl(P, i, R, dim);
    R.pop_back();
    std::rotate(P.begin(), P.begin() + i, P.begin() + i + 1);
  }
  return b;
}

}  // namespace detail

/// Smallest ball containing all points (Welzl, move-to-front).
inline Ball minimal_enclosing_ball(std::vector<RVec> pts, unsigned seed = 1) {
  if (pts.empty()) fail(ErrorCode::EmptyInput, "no points");
  const int dim = int(pts[0].size());
  std::mt19937 rng(seed);
  std::shuffle(pts.begin(), pts.end(), rng);
  std::vector<RVec> R;
  Ball b = detail::welzl(pts, int(pts.size()), R, dim);
  b.radius = std::max(b.radius, 0.0);
  return b;
}

// ---------------------------------------------------------------------------
// convex gluing on a grid

struct GlueResult {
  std::vector<double> rho;
  double margin = 0.0;  // smallest second difference quotient
  int profile = 0;
  double inner = 0.0, outer = 0.0;  // window fractions, or (A, eps) for the maximum family
};

/// Smallest second difference quotient over the interior grid points.
inline double convexity_margin(const std::vector<double>& x, const std::vector<double>& f) {
  double m = 1e300;
  for (size_t i = 1; i + 1 < x.size(); ++i) {
    const double hl = x[i] - x[i - 1], hr = x[i + 1] - x[i];
    const double q = 2.0 * ((f[i + 1] - f[i]) / hr - (f[i] - f[i - 1]) / hl) / (hl + hr);
    m = std::min(m, q);
  }
  return m;
}

namespace detail {

/// Transition profiles from 1 (t <= 0) to 0 (t >= 1).
inline double glue_profile(int kind, double t) {
  if (t <= 0) return 1.0;
  if (t >= 1) return 0.0;
  switch (kind) {
    case 0: return 1.0 - smooth_level(t);
    case 1: return 1.0 - t * t * (3 - 2 * t);
    case 2: return 1.0 - t * t * t * (10 + t * (-15 + 6 * t));
    default: return 1.0 - t;
  }
}

/// C^2 even convex function equal to |d| for |d| >= eps.
inline double soft_abs(double d, double eps) {
  const double a = std::abs(d);
  if (a >= eps) return a;
  return 3 * eps / 8 + 3 * d * d / (4 * eps) - d * d * d * d / (8 * eps * eps * eps);
}

}  // namespace detail

/// Glues rho (kept on U1) to rho0 (kept outside U2). Two families are
/// searched: rho0 + chi (rho - rho0) with a bump weight chi, and the
/// regularized maximum of rho - A dist(x, U1)^2 and rho0. The member with
/// the largest convexity margin that stays between rho0 and rho wins;
/// GlueInfeasible when none is convex on the grid.
inline GlueResult convex_glue_1d(const std::vector<double>& x, const std::vector<double>& rho0,
                                 const std::vector<double>& rho, std::array<double, 2> U1,
                                 std::array<double, 2> U2, int windows = 12) {
  if (x.size() != rho0.size() || x.size() != rho.size() || x.size() < 3)
    fail(ErrorCode::GlueInfeasible, "grid and samples disagree");
  if (!(U2[0] <= U1[0] && U1[0] < U1[1] && U1[1] <= U2[1]))
    fail(ErrorCode::GlueInfeasible, "U1 is not inside U2");
  double gap_scale = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    if (rho0[i] > rho[i] + 1e-12) fail(ErrorCode::GlueInfeasible, "rho0 exceeds rho");
    gap_scale = std::max(gap_scale, rho[i] - rho0[i]);
  }
  auto in_u1 = [&](double t) { return t >= U1[0] && t <= U1[1]; };
  auto in_u2 = [&](double t) { return t > U2[0] && t < U2[1]; };
  GlueResult best;
  best.margin = -1e300;
  auto consider = [&](std::vector<double> f, int kind, double s, double t) {
    for (size_t i = 0; i < x.size(); ++i) {
      if (in_u1(x[i])) f[i] = rho[i];
      else if (!in_u2(x[i])) f[i] = rho0[i];
      if (f[i] < rho0[i] - 1e-14 || f[i] > rho[i] + 1e-14) return;
    }
    const double m = convexity_margin(x, f);
    if (m > best.margin) {
      best.margin = m;
      best.rho = std::move(f);
      best.profile = kind;
      best.inner = s;
      best.outer = t;
    }
  };
  std::vector<double> f(x.size());
  for (int kind = 0; kind < 4; ++kind)
    for (int a = 0; a < windows; ++a)
      for (int b = a + 1; b <= windows; ++b) {
        const double s = double(a) / windows, t = double(b) / windows;
        for (size_t i = 0; i < x.size(); ++i) {
          double chi = 1.0;
          if (x[i] < U1[0]) {
            const double gap = U1[0] - U2[0];
            chi = detail::glue_profile(kind, ((U1[0] - x[i]) / gap - s) / (t - s));
          } else if (x[i] > U1[1]) {
            const double gap = U2[1] - U1[1];
            chi = detail::glue_profile(kind, ((x[i] - U1[1]) / gap - s) / (t - s));
          }
          f[i] = rho0[i] + chi * (rho[i] - rho0[i]);
        }
        consider(f, kind, s, t);
      }
  // regularized maxima: A on a geometric grid, eps relative to the gap
  const double width = std::max(U2[1] - U2[0], 1e-300);
  for (int k = 0; k <= 240 && gap_scale > 0; ++k) {
    const double A = gap_scale / (width * width) * std::pow(10.0, -2.0 + 6.0 * k / 240);
    for (double e : {1e-3, 1e-2, 1e-1}) {
      const double eps = e * gap_scale;
      for (size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] < U1[0] ? U1[0] - x[i] : (x[i] > U1[1] ? x[i] - U1[1] : 0.0);
        const double lift = rho[i] - A * d * d;
        f[i] = 0.5 * (lift + rho0[i]) + 0.5 * detail::soft_abs(lift - rho0[i], eps);
      }
      consider(f, 4, A, eps);
    }
  }
  if (!(best.margin > 0))
    fail(ErrorCode::GlueInfeasible, "no weight keeps the glued function convex");
  return best;
}

// ---------------------------------------------------------------------------
// convex hull membership

namespace detail {

/// Phase-one simplex: min sum of artificials subject to A lam = b, lam >= 0
/// (b >= 0 after row sign flips). Returns the optimal L1 residual.
inline double phase_one(RMat A, RVec b) {
  const int m = int(A.rows()), n = int(A.cols());
  for (int i = 0; i < m; ++i)
    if (b[i] < 0) {
      A.row(i) *= -1;
      b[i] = -b[i];
    }
  // tableau [A I | b], basis = artificials
  RMat T = RMat::Zero(m + 1, n + m + 1);
  T.topLeftCorner(m, n) = A;
  T.block(0, n, m, m) = RMat::Identity(m, m);
  T.block(0, n + m, m, 1) = b;
  std::vector<int> basis(m);
  for (int i = 0; i < m; ++i) basis[i] = n + i;
  // reduced costs of the phase-one objective
  for (int j = 0; j < n + m + 1; ++j) T(m, j) = -T.block(0, j, m, 1).sum();
  for (int i = 0; i < m; ++i) T(m, n + i) = 0.0;
  const double eps = 1e-12;
  int stall = 0;
  for (int iter = 0; iter < 50 * (n + m); ++iter) {
    // Dantzig pricing, Bland's rule after degenerate pivots
    int enter = -1;
    double most = -eps;
    for (int j = 0; j < n + m; ++j)
      if (T(m, j) < most) {
        enter = j;
        if (stall > 2 * m) break;
        most = T(m, j);
      }
    if (enter < 0) break;
    int leave = -1;
    double ratio = 1e300;
    for (int i = 0; i < m; ++i)
      if (T(i, enter) > eps) {
        const double r = T(i, n + m) / T(i, enter);
        if (leave < 0 || r < ratio - 1e-15 || (std::abs(r - ratio) <= 1e-15 && basis[i] < basis[leave])) {
          ratio = r;
          leave = i;
        }
      }
    if (leave < 0) break;
    T.row(leave) /= T(leave, enter);
    for (int i = 0; i <= m; ++i)
      if (i != leave && T(i, enter) != 0.0) T.row(i) -= T(i, enter) * T.row(leave);
    basis[leave] = enter;
    stall = ratio < 1e-14 ? stall + 1 : 0;
  }
  return -T(m, n + m);
}

}  // namespace detail

/// Whether every leaf point lies in the convex hull of the cycle points
/// inflated by rel_inflation * diameter.
inline bool convex_hull_check(const std::vector<CVec>& leaf, const std::vector<CVec>& cycle,
                              double rel_inflation = 1e-6, int max_vertices = 4000,
                              int max_queries = 0) {
  if (leaf.empty()) return true;
  if (cycle.empty()) return false;
  const size_t stride = std::max<size_t>(1, cycle.size() / std::max(1, max_vertices));
  std::vector<RVec> verts;
  for (size_t i = 0; i < cycle.size(); i += stride) verts.push_back(realify(cycle[i]));
  const int d = int(verts[0].size());
  double diam = 0.0;
  for (const RVec& v : verts) diam = std::max(diam, (v - verts[0]).norm());
  diam *= 2.0;
  const double tol = rel_inflation * std::max(diam, 1e-300);
  // centering keeps the tableau well scaled
  RVec c = RVec::Zero(d);
  for (const RVec& v : verts) c += v;
  c /= double(verts.size());
  RMat A(d + 1, verts.size());
  for (size_t j = 0; j < verts.size(); ++j) {
    A.block(0, j, d, 1) = verts[j] - c;
    A(d, j) = 1.0;
  }
  const size_t qstride = max_queries > 0 ? std::max<size_t>(1, leaf.size() / max_queries) : 1;
  for (size_t i = 0; i < leaf.size(); i += qstride) {
    RVec b(d + 1);
    b.head(d) = realify(leaf[i]) - c;
    b[d] = 1.0;
    if (detail::phase_one(A, b) > tol) return false;
  }
  return true;
}

/// Leaf points are tested against the hull of the line-slice curve through
/// them, which lies on the cycle; a point inside that hull is inside the
/// hull of the cycle.
inline bool convex_hull_check(const LeafChain& leaf, const FramedCycle& fc,
                              double rel_inflation = 1e-6, int max_queries = 400,
                              const FillOptions& fopt = {}) {
  const int m = leaf.n - 1, k2 = m - 1;
  std::map<std::vector<double>, std::vector<CVec>> lines;
  std::vector<int> ids;
  for (int i = 0; i < int(leaf.cells.size()); ++i)
    if (!leaf.cells[i].boundary && leaf.cells[i].fiber.c0 != 0) ids.push_back(i);
  const size_t stride = max_queries > 0 ? std::max<size_t>(1, ids.size() / max_queries) : 1;
  for (size_t k = 0; k < ids.size(); k += stride) {
    const LeafCell& c = leaf.cells[ids[k]];
    std::vector<double> key;
    for (int a = 0; a < k2; ++a) {
      key.push_back(c.base[a].real());
      key.push_back(c.base[a].imag());
    }
    for (const cplx& r : c.fiber.roots) {
      CVec y(leaf.n);
      y.head(m) = c.base;
      y[m] = r;
      lines[key].push_back(y);
    }
  }
  const double diam = 2.0 * fc.max_radius();
  for (const auto& [key, pts] : lines) {
    CVec zeta2(k2);
    for (int a = 0; a < k2; ++a) zeta2[a] = cplx(key[2 * a], key[2 * a + 1]);
    const auto curve = fc.line_slice(zeta2, fopt.nodes);
    if (!curve) return false;
    std::vector<CVec> verts;
    for (size_t j = 0; j < curve->z().size(); ++j) {
      CVec y(leaf.n);
      y.head(k2) = zeta2;
      y[k2] = curve->z()[j];
      y[m] = curve->w()[j];
      verts.push_back(y);
    }
    double d = diam;
    for (const CVec& v : verts) d = std::max(d, (v - verts[0]).norm());
    if (!convex_hull_check(pts, verts, rel_inflation * diam / d, int(verts.size())))
      return false;
  }
  return true;
}

}  // namespace crflat
