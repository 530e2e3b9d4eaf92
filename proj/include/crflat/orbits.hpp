#pragma once

// Global CR orbits: the ellipsoid projection, lifting of paths on G through
// the orbit distribution, the level function nu and the census.

#include "crflat/crgeom.hpp"
#include "crflat/error.hpp"
#include "crflat/linalg.hpp"
#include "crflat/parallel.hpp"
#include "crflat/quadform.hpp"
#include "crflat/surface.hpp"

#include <algorithm>
#include <array>
#include <optional>
#include <memory>
#include <numeric>
#include <random>
#include <string>
#include <vector>

namespace crflat {

// ---------------------------------------------------------------------------
// complex points

/// Residual vanishing exactly at complex points: P_N J P_T flattened.
inline RVec complex_point_residual(const SurfaceModel& s, const RVec& u) {
  const TangentData t = tangent_data(s, u);
  const RMat R = projector(t.N) * complex_structure(s.n()) * projector(t.T);
  return Eigen::Map<const RVec>(R.data(), R.size());
}

namespace detail {

inline std::vector<RVec> parameter_samples(const SurfaceModel& s, int count, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> U(-s.box(), s.box());
  std::vector<RVec> out;
  const int p = s.param_dim();
  for (int i = 0; i < count; ++i) {
    RVec u(p);
    for (int k = 0; k < p; ++k) u[k] = s.domain() == Domain::Sphere ? g(rng) : U(rng);
    out.push_back(s.project_param(u));
  }
  return out;
}

/// Levenberg-Marquardt on the complex point residual in tangent coordinates.
inline RVec refine_complex_point(const SurfaceModel& s, RVec u, double target) {
  auto res = [&](const RVec& v) {
    try {
      return complex_point_residual(s, v);
    } catch (const Error&) {
      return RVec(RVec::Constant(4 * s.n() * s.n(), 1e3));
    }
  };
  RVec r = res(u);
  double mu = 1e-6;
  for (int it = 0; it < 80; ++it) {
    if (tangent_data(s, u).cr_angle < target) break;
    const RMat A = s.param_tangent_basis(u);
    const double h = 1e-7;
    RMat J(r.size(), A.cols());
    for (Eigen::Index k = 0; k < A.cols(); ++k)
      J.col(k) = (res(s.project_param(u + h * A.col(k))) - res(s.project_param(u - h * A.col(k)))) /
                 (2 * h);
    const RMat JtJ = J.transpose() * J;
    bool accepted = false;
    for (int tries = 0; tries < 12 && !accepted; ++tries) {
      const RMat M = JtJ + mu * RMat::Identity(A.cols(), A.cols());
      const RVec step = M.ldlt().solve(-J.transpose() * r);
      const RVec un = s.project_param(u + A * step);
      const RVec rn = res(un);
      if (rn.norm() < r.norm()) {
        u = un;
        r = rn;
        mu = std::max(mu / 10, 1e-15);
        accepted = true;
      } else {
        mu *= 10;
      }
    }
    if (!accepted) break;
  }
  return u;
}

}  // namespace detail

struct ComplexPointSearch {
  int samples = 4000;
  int max_seeds = 12;
  unsigned seed = 7;
};

/// Complex points found by sampling the parameter domain and refining the
/// best separated candidates.
inline std::vector<RVec> find_complex_points(const SurfaceModel& s, const CRTolerances& tol = {},
                                             const ComplexPointSearch& opt = {}) {
  const std::vector<RVec> pts = detail::parameter_samples(s, opt.samples, opt.seed);
  std::vector<double> score(pts.size());
  for (size_t i = 0; i < pts.size(); ++i) {
    try {
      score[i] = tangent_data(s, pts[i], tol).cr_angle;
    } catch (const Error&) {
      score[i] = 1e3;
    }
  }
  std::vector<size_t> order(pts.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) { return score[a] < score[b]; });
  const double sep = 0.3 * (s.domain() == Domain::Sphere ? 1.0 : s.box());
  std::vector<RVec> seeds;
  for (size_t i : order) {
    if (int(seeds.size()) >= opt.max_seeds) break;
    bool far = true;
    for (const auto& q : seeds) far = far && (q - pts[i]).norm() > sep;
    if (far) seeds.push_back(pts[i]);
  }
  std::vector<RVec> found;
  for (const auto& seed : seeds) {
    const RVec u = detail::refine_complex_point(s, seed, 0.01 * tol.complex_angle);
    double ang;
    try {
      ang = tangent_data(s, u, tol).cr_angle;
    } catch (const Error&) {
      continue;
    }
    if (ang >= tol.complex_angle) continue;
    if (s.domain() == Domain::Plane && u.cwiseAbs().maxCoeff() > s.box()) continue;
    bool dup = false;
    for (const auto& q : found) dup = dup || (q - u).norm() < 1e-5;
    if (!dup) found.push_back(u);
  }
  // deterministic order: descending last coordinate, then lexicographic
  std::sort(found.begin(), found.end(), [](const RVec& a, const RVec& b) {
    for (Eigen::Index k = a.size() - 1; k >= 0; --k)
      if (std::abs(a[k] - b[k]) > 1e-9) return a[k] > b[k];
    return false;
  });
  return found;
}

/// A complex point with its classification.
struct Pole {
  RVec u;
  CVec point;
  AdaptedQuadric adapted;
  QuadraticForm normal;
  FlatnessReport flat;
  EllipticityReport ellipticity;
  bool elliptic_flat = false;
  std::string failure;  // "", "flatness", "ellipticity"
};

inline Pole classify_pole(const SurfaceModel& s, const RVec& u, const CRTolerances& tol = {}) {
  Pole p;
  p.u = s.project_param(u);
  p.point = s.point(p.u);
  p.adapted = adapted_quadric(s, p.u, tol);
  p.flat = is_flat(p.adapted.form);
  if (!p.flat.flat) {
    p.failure = "flatness";
    return p;
  }
  p.normal = flat_normal_form(p.adapted.form);
  p.ellipticity = is_elliptic(p.normal);
  if (!p.ellipticity.elliptic) {
    p.failure = "ellipticity";
    return p;
  }
  p.elliptic_flat = true;
  return p;
}

// ---------------------------------------------------------------------------
// projection to the unit ellipsoid G

/// pi(q) = z / sqrt(Q(z)) in parameter z-coordinates centred at the pole,
/// with Q the sign-normalized real quadric of the pole.
class EllipsoidProjection {
 public:
  EllipsoidProjection() = default;

  EllipsoidProjection(const SurfaceModel& s, const Pole& pole) {
    if (!pole.elliptic_flat)
      fail(ErrorCode::PoleClassificationFailure, "projection needs an elliptic flat complex point");
    m_ = s.n() - 1;
    param_dim_ = s.param_dim();
    center_ = RVec::Zero(2 * m_);
    if (s.domain() == Domain::Plane) center_ = pole.u.head(2 * m_);
    const double sign = pole.ellipticity.sign;
    std::vector<CVec> Z(2 * m_);
    for (int i = 0; i < 2 * m_; ++i) {
      RVec e = RVec::Zero(param_dim_);
      e[i] = 1.0;
      Z[i] = pole.adapted.z_of(e);
    }
    auto q = [&](const CVec& z) { return sign * pole.normal(z).real(); };
    G_.resize(2 * m_, 2 * m_);
    for (int i = 0; i < 2 * m_; ++i) G_(i, i) = q(Z[i]);
    for (int i = 0; i < 2 * m_; ++i)
      for (int j = i + 1; j < 2 * m_; ++j)
        G_(i, j) = G_(j, i) = 0.5 * (q(Z[i] + Z[j]) - G_(i, i) - G_(j, j));
  }

  /// Build directly from a positive definite matrix (tests, model quadrics).
  EllipsoidProjection(const RMat& G, const RVec& center, int param_dim)
      : m_(int(G.rows()) / 2), param_dim_(param_dim), G_(G), center_(center) {}

  int m() const { return m_; }
  const RMat& G() const { return G_; }
  const RVec& center() const { return center_; }

  RVec v(const RVec& u) const { return u.head(2 * m_) - center_; }
  double level(const RVec& u) const {
    const RVec x = v(u);
    return x.dot(G_ * x);
  }
  double gnorm(const RVec& x) const { return std::sqrt(x.dot(G_ * x)); }
  double gdot(const RVec& a, const RVec& b) const { return a.dot(G_ * b); }

  RVec operator()(const RVec& u) const {
    const RVec x = v(u);
    const double q = x.dot(G_ * x);
    if (!(q > 1e-28)) fail(ErrorCode::AtComplexPoint, "projection undefined at the complex point");
    return x / std::sqrt(q);
  }

  /// Derivative of pi with respect to the parameter (2m x P).
  RMat jacobian(const RVec& u) const {
    const RVec x = v(u);
    const double q = x.dot(G_ * x);
    if (!(q > 1e-28)) fail(ErrorCode::AtComplexPoint, "projection undefined at the complex point");
    const double r = std::sqrt(q);
    RMat Jz = (RMat::Identity(2 * m_, 2 * m_) - x * (G_ * x).transpose() / q) / r;
    RMat J = RMat::Zero(2 * m_, param_dim_);
    J.leftCols(2 * m_) = Jz;
    return J;
  }

  /// G-orthonormal basis of the tangent space of G at g.
  RMat tangent_basis(const RVec& g) const {
    RMat n(2 * m_, 1);
    n.col(0) = G_ * g;
    RMat B = orthogonal_complement(n);
    // Gram-Schmidt in the G inner product
    for (Eigen::Index k = 0; k < B.cols(); ++k) {
      RVec b = B.col(k);
      for (Eigen::Index j = 0; j < k; ++j) b -= gdot(B.col(j), b) * B.col(j);
      B.col(k) = b / gnorm(b);
    }
    return B;
  }

 private:
  int m_ = 0;
  int param_dim_ = 0;
  RMat G_;
  RVec center_;
};

/// Project a point of S (given by parameter) to G; AtComplexPoint at the pole.
inline RVec project_to_G(const EllipsoidProjection& pi, const RVec& u) { return pi(u); }

// ---------------------------------------------------------------------------
// lifting

struct OrbitOptions {
  double rk_step = 1e-2;
  int directions = 64;
  int max_halvings = 6;
  double closure_rel = 1e-3;
  double drift_tol = 1e-3;
  unsigned seed = 3;
  CRTolerances cr;
  int threads = 1;
};

/// Lifts curves on G to S through the orbit distribution.
class OrbitLifter {
 public:
  OrbitLifter(const SurfaceModel& s, const EllipsoidProjection& pi, const OrbitOptions& opt)
      : s_(s), pi_(pi), opt_(opt) {}

  /// du/ds for the lift of a curve with velocity gdot on G.
  RVec velocity(const RVec& u, const RVec& gdot) const {
    RMat PE, M;
    system(u, PE, M);
    Eigen::JacobiSVD<RMat> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    if (sv[sv.size() - 1] < 1e-8 * sv[0])
      fail(ErrorCode::StepFailure, "orbit does not project submersively onto G");
    return PE * svd.solve(gdot);
  }

  /// One correction step pulling pi(u) onto the target along E.
  RVec correct(const RVec& u, const RVec& g) const {
    RMat PE, M;
    system(u, PE, M);
    const RVec delta = g - pi_(u);
    return s_.project_param(u + PE * M.completeOrthogonalDecomposition().solve(delta));
  }

  /// Lift of g(s) = cos(s) g0 + sin(s) d for s in [s0, s1] with `steps`
  /// uniform steps; samples after every step are appended to `out`.
  RVec lift_arc(RVec u, const RVec& g0, const RVec& d, double s0, double s1, int steps,
                std::vector<RVec>* out = nullptr) const {
    const double h = (s1 - s0) / steps;
    for (int k = 0; k < steps; ++k) {
      u = step(u, g0, d, s0 + k * h, h, 0);
      if (out) out->push_back(u);
    }
    return u;
  }

  const EllipsoidProjection& projection() const { return pi_; }
  const SurfaceModel& surface() const { return s_; }
  const OrbitOptions& options() const { return opt_; }

 private:
  void system(const RVec& u, RMat& PE, RMat& M) const {
    const TangentData t = tangent_data(s_, u, opt_.cr);
    const CRFrame f = detail::first_order_frame(s_, t, opt_.cr);
    PE = t.A * (t.DA_pinv * f.E);
    M = pi_.jacobian(t.u) * PE;
  }

  static RVec curve(const RVec& g0, const RVec& d, double s) {
    return std::cos(s) * g0 + std::sin(s) * d;
  }
  static RVec curve_dot(const RVec& g0, const RVec& d, double s) {
    return -std::sin(s) * g0 + std::cos(s) * d;
  }

  RVec step(const RVec& u, const RVec& g0, const RVec& d, double s, double h, int depth) const {
    try {
      const RVec k1 = velocity(u, curve_dot(g0, d, s));
      const RVec k2 = velocity(s_.project_param(u + 0.5 * h * k1), curve_dot(g0, d, s + 0.5 * h));
      const RVec k3 = velocity(s_.project_param(u + 0.5 * h * k2), curve_dot(g0, d, s + 0.5 * h));
      const RVec k4 = velocity(s_.project_param(u + h * k3), curve_dot(g0, d, s + h));
      RVec un = s_.project_param(u + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4));
      const RVec target = curve(g0, d, s + h);
      if ((pi_(un) - target).norm() > opt_.drift_tol)
        fail(ErrorCode::StepFailure, "lift drifted off the path on G");
      return un;
    } catch (const Error& e) {
      if (e.code() == ErrorCode::MinimalityDetected) throw;
      if (depth >= opt_.max_halvings)
        fail(ErrorCode::StepFailure, std::string("step failed after halving: ") + e.what());
      const RVec mid = step(u, g0, d, s, 0.5 * h, depth + 1);
      return step(mid, g0, d, s + 0.5 * h, 0.5 * h, depth + 1);
    }
  }

  const SurfaceModel& s_;
  const EllipsoidProjection& pi_;
  OrbitOptions opt_;
};

// ---------------------------------------------------------------------------
// orbits

struct Orbit {
  RVec anchor;
  double nu = 0.0;
  std::vector<RVec> params;            // params[0] is the anchor
  std::vector<CVec> points;
  std::vector<std::pair<int, int>> edges;
  std::vector<RVec> directions;        // G-unit tangent directions at pi(anchor)
  int steps_per_path = 0;              // per full great circle
  std::vector<CVec> antipodes;         // lifts of -pi(anchor), one per circle
  std::vector<CVec> returns;           // lifts of the full circle, one per circle
  double closure_residual = 0.0;
  double diameter = 0.0;
  bool closed = false;

  /// Index of the sample at path p, step k (1 <= k <= steps_per_path).
  int index(int p, int k) const { return 1 + p * steps_per_path + (k - 1); }
};

namespace detail {

/// Nearly uniform points on S^2.
inline std::vector<Eigen::Vector3d> fibonacci_sphere(int count) {
  std::vector<Eigen::Vector3d> out;
  const double golden = kPi * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < count; ++i) {
    const double y = 1.0 - 2.0 * (i + 0.5) / count;
    const double r = std::sqrt(std::max(0.0, 1.0 - y * y));
    out.emplace_back(r * std::cos(golden * i), y, r * std::sin(golden * i));
  }
  return out;
}

/// Coefficient vectors (in a tangent basis of dimension dim) of the great
/// circles through the anchor: the basis vectors first, then a spread over a
/// hemisphere (each circle covers d and -d).
inline std::vector<RVec> fan_coefficients(int dim, int count, unsigned seed) {
  std::vector<RVec> out;
  for (int k = 0; k < dim; ++k) out.push_back(RVec::Unit(dim, k));
  const int rest = std::max(0, count - dim);
  if (dim == 3) {
    for (const auto& p : fibonacci_sphere(2 * rest))
      if (p[1] > 0) out.push_back(p);
  } else {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    for (int i = 0; i < rest; ++i) {
      RVec c(dim);
      for (int k = 0; k < dim; ++k) c[k] = g(rng);
      if (c[0] < 0) c = -c;
      out.push_back(c.normalized());
    }
  }
  return out;
}

inline double max_pairwise(const std::vector<CVec>& pts) {
  double d = 0.0;
  for (size_t i = 0; i < pts.size(); ++i)
    for (size_t j = i + 1; j < pts.size(); ++j) d = std::max(d, (pts[i] - pts[j]).norm());
  return d;
}

}  // namespace detail

/// Traces the orbit through u by lifting great circles of G through pi(u).
/// Lifts of the antipode must agree and each lifted loop must return to u;
/// the worst mismatch is the closure residual (NonClosure when too large).
inline Orbit trace_orbit(const SurfaceModel& s, const EllipsoidProjection& pi, const RVec& u_anchor,
                         const OrbitOptions& opt = {}) {
  const OrbitLifter lifter(s, pi, opt);
  Orbit o;
  o.anchor = s.project_param(u_anchor);
  const RVec g0 = pi(o.anchor);
  const RMat B = pi.tangent_basis(g0);
  for (const RVec& c : detail::fan_coefficients(int(B.cols()), std::max(1, opt.directions / 2), opt.seed))
    o.directions.push_back(B * c / pi.gnorm(B * c));
  const int steps = 4 * int(std::ceil(kPi / (2 * opt.rk_step)));
  o.steps_per_path = steps;
  const int paths = int(o.directions.size());
  std::vector<std::vector<RVec>> lifted(paths);
  parallel_for(paths, [&](int p) {
    lifted[p].reserve(steps);
    lifter.lift_arc(o.anchor, g0, o.directions[p], 0.0, 2 * kPi, steps, &lifted[p]);
  }, opt.threads);
  o.params.push_back(o.anchor);
  o.points.push_back(s.point(o.anchor));
  for (int p = 0; p < paths; ++p) {
    for (int k = 0; k < steps; ++k) {
      const int idx = int(o.params.size());
      o.params.push_back(lifted[p][k]);
      o.points.push_back(s.point(lifted[p][k]));
      o.edges.emplace_back(k == 0 ? 0 : idx - 1, idx);
    }
    o.antipodes.push_back(o.points[o.index(p, steps / 2)]);
    o.returns.push_back(o.points.back());
  }
  o.closure_residual = detail::max_pairwise(o.antipodes);
  for (const CVec& r : o.returns) o.closure_residual = std::max(o.closure_residual, (r - o.points[0]).norm());
  std::vector<CVec> sub;
  const int stride = std::max(1, steps / 16);
  for (int p = 0; p < paths; ++p)
    for (int k = stride; k <= steps; k += stride) sub.push_back(o.points[o.index(p, k)]);
  sub.push_back(o.points[0]);
  o.diameter = detail::max_pairwise(sub);
  o.closed = o.closure_residual < opt.closure_rel * o.diameter;
  if (!o.closed)
    fail(ErrorCode::NonClosure, "lifted loops do not close: residual " +
                                    std::to_string(o.closure_residual));
  return o;
}

/// Number of connected components of the sample graph.
inline int orbit_components(const Orbit& o) {
  std::vector<int> parent(o.points.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (auto [a, b] : o.edges) parent[find(a)] = find(b);
  // lifts of the antipode and of the closed loops are identified when closed
  if (o.closed)
    for (int p = 0; p < int(o.directions.size()); ++p) {
      parent[find(o.index(p, o.steps_per_path / 2))] = find(o.index(0, o.steps_per_path / 2));
      parent[find(o.index(p, o.steps_per_path))] = find(0);
    }
  int count = 0;
  for (int i = 0; i < int(parent.size()); ++i) count += find(i) == i;
  return count;
}

/// Euler characteristic of the boundary of the cross-polytope on the lifted
/// axis points of the orbit, counting only nondegenerate simplices.
inline int orbit_euler_characteristic(const Orbit& o) {
  const int dim = int(o.directions.size() > 0 ? o.directions[0].size() : 0);
  if (int(o.directions.size()) < dim - 1) return 0;
  const int q = o.steps_per_path / 4;
  // vertex (axis, sign): axis 0 is pi(anchor) itself, axis k the k-th circle
  std::vector<std::array<CVec, 2>> verts(dim);
  CVec antipode = CVec::Zero(o.points[0].size());
  for (const auto& e : o.antipodes) antipode += e;
  antipode /= double(o.antipodes.size());
  verts[0] = {o.points[0], antipode};
  for (int k = 1; k < dim; ++k) verts[k] = {o.points[o.index(k - 1, q)], o.points[o.index(k - 1, 3 * q)]};
  const double tol = 1e-6 * std::max(o.diameter, 1e-300);
  int chi = 0;
  std::vector<int> choice(dim, 0);  // 0 absent, 1 plus, 2 minus
  int total = 1;
  for (int k = 0; k < dim; ++k) total *= 3;
  for (int code = 1; code < total; ++code) {
    int c = code;
    std::vector<CVec> face;
    for (int k = 0; k < dim; ++k, c /= 3)
      if (c % 3) face.push_back(verts[k][c % 3 - 1]);
    if (int(face.size()) > dim) continue;
    RMat diffs(2 * face[0].size(), face.size() - 1);
    for (size_t j = 1; j < face.size(); ++j) diffs.col(j - 1) = realify(CVec(face[j] - face[0]));
    bool nondegenerate = true;
    if (diffs.cols() > 0) {
      Eigen::JacobiSVD<RMat> svd(diffs);
      nondegenerate = svd.singularValues()[diffs.cols() - 1] > tol;
    }
    if (nondegenerate) chi += (face.size() % 2 == 1) ? 1 : -1;
  }
  return chi;
}

// ---------------------------------------------------------------------------
// transversal and the level function

/// Curve through the fiber pi^{-1}(g*) from the pole: the meridian
/// (sin(pi t) g*, +-cos(pi t)) on a sphere domain, z = center + sqrt(t) g*
/// on a plane domain.
class Transversal {
 public:
  Transversal() = default;
  Transversal(const SurfaceModel& s, const EllipsoidProjection& pi, const Pole& pole)
      : domain_(s.domain()), param_dim_(s.param_dim()), m_(s.n() - 1) {
    RVec e = RVec::Zero(2 * m_);
    e[0] = 1.0;
    gstar_ = e / pi.gnorm(e);
    gdir_ = e;
    center_ = pi.center();
    pole_sign_ = domain_ == Domain::Sphere ? (pole.u[param_dim_ - 1] >= 0 ? 1.0 : -1.0) : 1.0;
    if (domain_ == Domain::Plane) {
      const RMat Gi = pi.G().inverse();
      t_max_ = 0.9 * s.box() * s.box() / Gi.diagonal().maxCoeff();
    }
  }

  Domain domain() const { return domain_; }
  const RVec& gstar() const { return gstar_; }
  /// Largest admissible transversal parameter.
  double t_max() const { return t_max_; }

  RVec at(double t) const {
    RVec u = RVec::Zero(param_dim_);
    if (domain_ == Domain::Sphere) {
      u.head(2 * m_) = std::sin(kPi * t) * gdir_;
      u[param_dim_ - 1] = pole_sign_ * std::cos(kPi * t);
    } else {
      u.head(2 * m_) = center_ + std::sqrt(std::max(t, 0.0)) * gstar_;
    }
    return u;
  }

  double param_of(const RVec& u) const {
    if (domain_ == Domain::Sphere)
      return std::acos(std::clamp(pole_sign_ * u[param_dim_ - 1], -1.0, 1.0)) / kPi;
    const RVec v = u.head(2 * m_) - center_;
    return v.squaredNorm() / gstar_.squaredNorm();
  }

  double miss(const RVec& u) const { return (u - at(param_of(u))).norm(); }

 private:
  Domain domain_ = Domain::Plane;
  int param_dim_ = 0;
  int m_ = 0;
  RVec gstar_, gdir_, center_;
  double pole_sign_ = 1.0;
  double t_max_ = 1.0;
};

struct ExceptionalLevel {
  double level = 0.0;
  ErrorCode code = ErrorCode::Ok;
  std::string reason;
};

struct AtlasOptions {
  int levels = 20;
  std::vector<double> extra_levels;  // in units of the normalized level
  bool smooth = false;
  OrbitOptions orbit;
  ComplexPointSearch search;
  int threads = thread_hint();
};

/// e^{-1/t} glued symmetrically: flat at both ends, strictly increasing.
inline double smooth_level(double t) {
  auto f = [](double x) { return x > 0 ? std::exp(-1.0 / x) : 0.0; };
  if (t <= 0) return 0.0;
  if (t >= 1) return 1.0;
  return f(t) / (f(t) + f(1.0 - t));
}

struct FoliationAtlas {
  std::shared_ptr<const SurfaceModel> surface;
  std::vector<Pole> complex_points;
  Pole pole;                       // the pole used for the projection
  EllipsoidProjection projection;
  Transversal transversal;
  std::vector<Orbit> orbits;       // ascending nu
  std::vector<ExceptionalLevel> exceptional;
  bool smoothed = false;
  OrbitOptions orbit_options;

  /// Level-range scale: nu in [0, 1] on spheres, [0, t_max] on local models.
  double scale() const {
    return transversal.domain() == Domain::Sphere ? 1.0 : transversal.t_max();
  }

  /// Transversal parameter of the orbit through u (before smoothing).
  double raw_nu(const RVec& u) const {
    const SurfaceModel& s = *surface;
    const RVec uu = s.project_param(u);
    const RVec gs = transversal.gstar();
    const RVec g0 = projection(uu);
    const double c = std::clamp(projection.gdot(g0, gs), -1.0, 1.0);
    const double ang = std::acos(c);
    RVec end = uu;
    if (ang > 1e-14) {
      RVec d = gs - c * g0;
      if (projection.gnorm(d) < 1e-9) d = projection.tangent_basis(g0).col(0);
      d /= projection.gnorm(d);
      const OrbitLifter lifter(s, projection, orbit_options);
      const int steps = std::max(4, int(std::ceil(ang / orbit_options.rk_step)));
      end = lifter.lift_arc(uu, g0, d, 0.0, ang, steps);
    }
    const double t = transversal.param_of(end);
    const double scale = std::max(1.0, uu.norm());
    if (transversal.miss(end) > 1e-6 * scale)
      fail(ErrorCode::TransversalMiss, "lift does not reach the transversal");
    return t;
  }

  double nu(const RVec& u) const {
    const double t = raw_nu(u);
    return smoothed ? smooth_level(t / scale()) * scale() : t;
  }
};

/// Finds and classifies the complex points, fixes the projection and the
/// transversal, and traces the orbits at the requested levels.
inline FoliationAtlas build_nu(const SurfaceModel& s, const AtlasOptions& opt = {}) {
  FoliationAtlas a;
  a.surface = std::make_shared<const SurfaceModel>(s);
  a.smoothed = opt.smooth;
  a.orbit_options = opt.orbit;
  for (const RVec& u : find_complex_points(s, opt.orbit.cr, opt.search))
    a.complex_points.push_back(classify_pole(s, u, opt.orbit.cr));
  if (a.complex_points.empty())
    fail(ErrorCode::PoleClassificationFailure, "no complex point found");
  for (const auto& p : a.complex_points)
    if (!p.elliptic_flat)
      fail(ErrorCode::PoleClassificationFailure, "complex point fails " + p.failure);
  if (s.domain() == Domain::Sphere && a.complex_points.size() != 2)
    fail(ErrorCode::PoleClassificationFailure,
         "expected two complex points, found " + std::to_string(a.complex_points.size()));
  a.pole = a.complex_points.front();
  a.projection = EllipsoidProjection(s, a.pole);
  a.transversal = Transversal(s, a.projection, a.pole);
  std::vector<double> levels;
  for (int k = 1; k <= opt.levels; ++k) levels.push_back(double(k) / (opt.levels + 1));
  for (double t : opt.extra_levels) levels.push_back(t);
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end(),
                           [](double x, double y) { return std::abs(x - y) < 1e-12; }),
               levels.end());
  std::vector<std::optional<Orbit>> traced(levels.size());
  std::vector<ExceptionalLevel> failures(levels.size());
  OrbitOptions inner = opt.orbit;
  inner.threads = 1;
  parallel_for(int(levels.size()), [&](int i) {
    const double t = levels[i] * a.scale();
    try {
      Orbit o = trace_orbit(s, a.projection, a.transversal.at(t), inner);
      o.nu = a.smoothed ? smooth_level(levels[i]) * a.scale() : t;
      traced[i] = std::move(o);
    } catch (const Error& e) {
      failures[i] = {t, e.code(), e.what()};
    }
  }, opt.threads);
  for (size_t i = 0; i < levels.size(); ++i) {
    if (traced[i]) a.orbits.push_back(std::move(*traced[i]));
    else a.exceptional.push_back(failures[i]);
  }
  return a;
}

// ---------------------------------------------------------------------------
// census

struct CensusOptions {
  AtlasOptions atlas;
  int cr_samples = 48;
};

struct CensusReport {
  std::vector<Pole> complex_points;
  int cr_sampled = 0;
  int zero_levi = 0;
  int minimal = 0;
  int indeterminate = 0;
  int orbits_traced = 0;
  int orbits_closed = 0;
  int orbits_connected = 0;
  std::vector<int> euler;
  int euler_expected = 0;
  std::vector<double> levels;
  std::vector<ExceptionalLevel> exceptional;
  std::string violation;  // empty when every hypothesis holds
  std::string detail;

  bool ok() const { return violation.empty(); }
};

/// Checks the global hypotheses: classification of the complex points and
/// the CR structure at sampled points.
inline CensusReport hypothesis_census(const SurfaceModel& s, const CensusOptions& opt = {}) {
  CensusReport r;
  const int d = 2 * s.n() - 2;
  r.euler_expected = 1 + ((d - 1) % 2 == 0 ? 1 : -1);
  const CRTolerances& tol = opt.atlas.orbit.cr;
  std::vector<RVec> cps = find_complex_points(s, tol, opt.atlas.search);
  for (const RVec& u : cps) r.complex_points.push_back(classify_pole(s, u, tol));
  for (const auto& p : r.complex_points)
    if (!p.elliptic_flat) {
      r.violation = p.failure;
      r.detail = "complex point is not " + std::string(p.failure == "flatness" ? "flat" : "elliptic");
      return r;
    }
  // CR samples away from the complex points
  for (const RVec& u : detail::parameter_samples(s, 4 * opt.cr_samples, opt.atlas.search.seed + 1)) {
    if (r.cr_sampled >= opt.cr_samples) break;
    bool near = false;
    for (const RVec& c : cps) near = near || (c - u).norm() < 0.1;
    if (near) continue;
    try {
      ++r.cr_sampled;
      orbit_distribution(s, u, tol);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::ZeroLeviForm) ++r.zero_levi;
      else if (e.code() == ErrorCode::MinimalityDetected) ++r.minimal;
      else if (e.code() == ErrorCode::IndeterminateRank) ++r.indeterminate;
      else if (e.code() != ErrorCode::NotCRPoint) throw;
    }
  }
  if (r.zero_levi > 0) {
    r.violation = "(iii)";
    r.detail = "Levi form vanishes identically at sampled CR points";
    return r;
  }
  if (r.minimal > 0) {
    r.violation = "(i)";
    r.detail = "minimal CR points found";
    return r;
  }
  if (r.complex_points.empty() ||
      (s.domain() == Domain::Sphere && r.complex_points.size() != 2)) {
    r.violation = "(ii)";
    r.detail = "found " + std::to_string(r.complex_points.size()) + " complex points";
  }
  return r;
}

/// Hypotheses plus the sphere structure of the traced orbits.
inline CensusReport census(const SurfaceModel& s, const CensusOptions& opt = {}) {
  CensusReport r = hypothesis_census(s, opt);
  if (!r.ok()) return r;
  const FoliationAtlas atlas = build_nu(s, opt.atlas);
  r.exceptional = atlas.exceptional;
  r.orbits_traced = int(atlas.orbits.size() + atlas.exceptional.size());
  for (const Orbit& o : atlas.orbits) {
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
  return r;
}

inline CensusReport orbit_census(const SurfaceModel& s, const CensusOptions& opt = {}) {
  CensusReport r = census(s, opt);
  if (!r.ok()) fail(ErrorCode::HypothesisViolation, r.violation + ": " + r.detail);
  return r;
}

}  // namespace crflat
