#pragma once

// Pointwise CR structure of a codimension-2 surface: tangent and complex
// tangent spaces, the vector-valued Levi form, and the orbit distribution E.

#include "crflat/error.hpp"
#include "crflat/linalg.hpp"
#include "crflat/surface.hpp"

#include <optional>
#include <vector>

namespace crflat {

struct CRTolerances {
  double complex_angle = 1e-7;   // largest principal angle T vs iT
  double rank_low = 1e-8;        // below: bracket direction absent
  double rank_high = 1e-6;       // above: bracket direction present
  double zero_levi = 1e-8;       // Levi form vanishes below this (scaled)
  double degenerate = 1e-10;     // defining differentials dependent
};

/// First-order data at a parameter point.
struct TangentData {
  RVec u;              // parameter
  SurfaceJet jet;
  RMat A;              // orthonormal basis of the parameter-domain tangent space
  RMat DA;             // jet.d1 * A : spans T_qS
  RMat T;              // orthonormal basis of T_qS (2n x (2n-2))
  RMat N;              // orthonormal basis of the normal space (2n x 2)
  RMat B;              // N^T J T ; vanishes exactly at complex points
  double cr_angle = 0; // largest principal angle between T and iT
  RMat DA_pinv;        // pseudo-inverse of DA
  RVec B_sv;           // singular values of B, descending
  RMat B_V;            // right singular vectors of B
};

inline TangentData tangent_data(const SurfaceModel& s, const RVec& u_in,
                                const CRTolerances& tol = {}) {
  TangentData t;
  t.u = s.project_param(u_in);
  t.jet = s.jet(t.u);
  t.A = s.param_tangent_basis(t.u);
  t.DA = t.jet.d1 * t.A;
  Eigen::JacobiSVD<RMat> svd(t.DA, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const Eigen::Index d = s.dim();
  if (sv[0] == 0.0 || sv[d - 1] < tol.degenerate * sv[0])
    fail(ErrorCode::DegenerateDefiningFunctions, "surface differential has rank < 2n-2");
  t.T = svd.matrixU().leftCols(d);
  t.N = svd.matrixU().rightCols(2);
  // DA = U S W^T, so DA^+ = W S^-1 U^T on the leading block
  t.DA_pinv = svd.matrixV() * sv.cwiseInverse().asDiagonal() * t.T.transpose();
  t.B = t.N.transpose() * complex_structure(s.n()) * t.T;
  Eigen::JacobiSVD<RMat> bsvd(t.B, Eigen::ComputeFullV);
  t.B_sv = bsvd.singularValues();
  t.B_V = bsvd.matrixV();
  t.cr_angle = std::asin(std::min(1.0, t.B_sv[0]));
  return t;
}

namespace detail {

inline int b_rank(const TangentData& t, const CRTolerances& tol) {
  int rank = 0;
  for (Eigen::Index k = 0; k < t.B_sv.size(); ++k)
    if (t.B_sv[k] > tol.complex_angle) ++rank;
  return rank;
}

}  // namespace detail

/// Parameter-space preimage of a tangent vector X in T_qS.
inline RVec param_preimage(const TangentData& t, const RVec& x) {
  return t.A * (t.DA_pinv * x);
}

/// Second derivative of the embedding along parameter directions a, b,
/// including the curvature term of a spherical parameter domain.
inline RVec embedding_hessian(const SurfaceModel& s, const TangentData& t, const RVec& a,
                              const RVec& b) {
  RVec out(2 * s.n());
  for (int r = 0; r < 2 * s.n(); ++r) out[r] = a.dot(t.jet.d2[r] * b);
  if (s.domain() == Domain::Sphere) out -= a.dot(b) * (t.jet.d1 * t.u);
  return out;
}

/// Normal-valued second fundamental form II(X, Y) in the basis N.
inline Eigen::Vector2d second_fundamental_form(const SurfaceModel& s, const TangentData& t,
                                               const RVec& x, const RVec& y) {
  const RVec a = param_preimage(t, x);
  const RVec b = param_preimage(t, y);
  return t.N.transpose() * embedding_hessian(s, t, a, b);
}

enum class PointKind { CR, Complex };

struct PointClass {
  PointKind kind = PointKind::CR;
  int cr_dim = 0;
  double cr_angle = 0;
};

struct LeviData {
  RMat K;                    // orthonormal basis of T (-) H, 2n x 2
  RMat values;               // 2 x (h*h): bracket components of L(h_a, h_b) in K coordinates
  Eigen::Vector2d singular;  // singular values of `values`
  Eigen::Vector2d direction; // leading left singular vector (K coordinates)
  RMat hermitian;            // scalar Levi form on the H basis along `direction`
  RVec eigenvalues;          // of `hermitian`, ascending
  bool definite = false;
  double norm = 0;           // Frobenius norm of the vector-valued form
};

struct CRFrame {
  RVec u;
  CVec point;
  RMat T;
  RMat H;        // real orthonormal basis, J-invariant, 2n x 2*cr_dim
  int cr_dim = 0;
  bool complex_point = false;
  std::optional<LeviData> levi;
  RMat E;        // orbit distribution basis
};

inline PointClass classify_point(const SurfaceModel& s, const RVec& u,
                                 const CRTolerances& tol = {}) {
  const TangentData t = tangent_data(s, u, tol);
  PointClass pc;
  pc.cr_angle = t.cr_angle;
  if (t.cr_angle < tol.complex_angle) {
    pc.kind = PointKind::Complex;
    pc.cr_dim = s.n() - 1;
  } else {
    const int rank = detail::b_rank(t, tol);
    pc.kind = PointKind::CR;
    pc.cr_dim = (s.dim() - rank) / 2;
  }
  return pc;
}

namespace detail {

inline RMat complex_tangent_basis(const TangentData& t, const CRTolerances& tol) {
  if (t.cr_angle < tol.complex_angle) return t.T;
  const int rank = b_rank(t, tol);
  return t.T * t.B_V.rightCols(t.B_V.cols() - rank);
}

inline RMat bracket_complement(const TangentData& t, const CRTolerances& tol) {
  return t.T * t.B_V.leftCols(b_rank(t, tol));
}

}  // namespace detail

/// T, H and CR dimension at a point.
inline CRFrame tangent_frame(const SurfaceModel& s, const RVec& u, const CRTolerances& tol = {}) {
  const TangentData t = tangent_data(s, u, tol);
  CRFrame f;
  f.u = t.u;
  f.point = s.point(t.u);
  f.T = t.T;
  f.complex_point = t.cr_angle < tol.complex_angle;
  f.H = detail::complex_tangent_basis(t, tol);
  f.cr_dim = int(f.H.cols()) / 2;
  return f;
}

inline LeviData levi_form(const SurfaceModel& s, const TangentData& t,
                          const CRTolerances& tol = {}) {
  if (t.cr_angle < tol.complex_angle) fail(ErrorCode::NotCRPoint, "Levi form requested at a complex point");
  const RMat H = detail::complex_tangent_basis(t, tol);
  LeviData L;
  L.K = detail::bracket_complement(t, tol);
  const RMat J = complex_structure(s.n());
  const RMat M = t.N.transpose() * J * L.K;
  const auto Minv = M.fullPivLu();
  const Eigen::Index h = H.cols();
  // II(X, Y) + II(JX, JY) for all pairs of H basis vectors at once
  const RMat Ph = t.A * (t.DA_pinv * H);
  const RMat Pj = t.A * (t.DA_pinv * (J * H));
  RMat ell(2 * s.n(), h * h);
  for (int r = 0; r < 2 * s.n(); ++r) {
    const RMat S = Ph.transpose() * t.jet.d2[r] * Ph + Pj.transpose() * t.jet.d2[r] * Pj;
    for (Eigen::Index a = 0; a < h; ++a)
      for (Eigen::Index b = 0; b < h; ++b) ell(r, a * h + b) = S(a, b);
  }
  if (s.domain() == Domain::Sphere) {
    const RVec du = t.jet.d1 * t.u;
    const RMat G = Ph.transpose() * Ph + Pj.transpose() * Pj;
    for (Eigen::Index a = 0; a < h; ++a)
      for (Eigen::Index b = 0; b < h; ++b) ell.col(a * h + b) -= G(a, b) * du;
  }
  L.values = Minv.solve(RMat(t.N.transpose() * ell));
  L.norm = L.values.norm();
  if (h == 0) {
    L.singular.setZero();
    L.direction = Eigen::Vector2d(1, 0);
    return L;
  }
  Eigen::JacobiSVD<RMat> svd(L.values, Eigen::ComputeFullU);
  L.singular = svd.singularValues().head<2>();
  L.direction = svd.matrixU().col(0);
  L.hermitian.resize(h, h);
  for (Eigen::Index a = 0; a < h; ++a)
    for (Eigen::Index b = 0; b < h; ++b)
      L.hermitian(a, b) = L.direction.dot(L.values.col(a * h + b));
  L.hermitian = 0.5 * (L.hermitian + L.hermitian.transpose()).eval();
  if (L.hermitian.trace() < 0) {
    L.hermitian = -L.hermitian;
    L.direction = -L.direction;
  }
  Eigen::SelfAdjointEigenSolver<RMat> es(L.hermitian);
  L.eigenvalues = es.eigenvalues();
  const double emax = L.eigenvalues.cwiseAbs().maxCoeff();
  L.definite = emax > 0 && (L.eigenvalues.minCoeff() > 1e-9 * emax ||
                            L.eigenvalues.maxCoeff() < -1e-9 * emax);
  return L;
}

inline LeviData levi_form(const SurfaceModel& s, const RVec& u, const CRTolerances& tol = {}) {
  return levi_form(s, tangent_data(s, u, tol), tol);
}

namespace detail {

/// E from the pointwise Levi form alone.
inline CRFrame first_order_frame(const SurfaceModel& s, const TangentData& t,
                                 const CRTolerances& tol) {
  CRFrame f;
  f.u = t.u;
  f.point = s.point(t.u);
  f.T = t.T;
  f.complex_point = t.cr_angle < tol.complex_angle;
  if (f.complex_point) fail(ErrorCode::NotCRPoint, "orbit distribution at a complex point");
  f.H = complex_tangent_basis(t, tol);
  f.cr_dim = int(f.H.cols()) / 2;
  LeviData L = levi_form(s, t, tol);
  // scale of the second-order data
  double scale = 1.0;
  for (const auto& d2 : t.jet.d2) scale = std::max(scale, d2.cwiseAbs().maxCoeff());
  scale = std::max(scale, t.jet.d1.cwiseAbs().maxCoeff());
  if (L.singular[0] < tol.zero_levi * scale) {
    f.E = f.H;
    f.levi = std::move(L);
    fail(ErrorCode::ZeroLeviForm, "Levi form vanishes; orbit is complex of dimension 2n-4");
  }
  const double ratio = L.singular[1] / L.singular[0];
  if (ratio > tol.rank_high) fail(ErrorCode::MinimalityDetected, "bracket span reaches T_qS");
  if (ratio > tol.rank_low) fail(ErrorCode::IndeterminateRank, "bracket rank in the indeterminate band");
  RVec dir = L.K * L.direction;
  // orientation: first significant component positive
  for (Eigen::Index k = 0; k < dir.size(); ++k)
    if (std::abs(dir[k]) > 1e-9 * dir.norm()) {
      if (dir[k] < 0) dir = -dir;
      break;
    }
  f.E.resize(f.H.rows(), f.H.cols() + 1);
  f.E << f.H, dir.normalized();
  f.levi = std::move(L);
  return f;
}

/// Largest component outside E of the brackets of the fields
/// X_i(u) = P_E(u) e_i, relative to the leading Levi singular value.
/// Vanishes exactly when E is integrable near the point.
inline double bracket_defect(const SurfaceModel& s, const TangentData& t, const CRFrame& f,
                             const CRTolerances& tol) {
  const Eigen::Index k = f.E.cols();
  const RMat E0 = f.E;
  const double h = 1e-3 * std::min(1.0, std::max(t.cr_angle, 1e-3)) *
                   std::max(1.0, t.u.norm());
  // parameter fields a_i(u) = A (DA)^+ P_E(u) e_i
  auto fields = [&](const RVec& u) {
    const TangentData tu = tangent_data(s, u, tol);
    const CRFrame fu = first_order_frame(s, tu, tol);
    const RMat X = projector(fu.E) * E0;
    return RMat(tu.A * (tu.DA_pinv * X));
  };
  const RMat a0 = fields(t.u);
  // directional derivative of all fields along a0.col(j), fourth-order stencil
  std::vector<RMat> D(k);
  for (Eigen::Index j = 0; j < k; ++j) {
    const RVec w = a0.col(j);
    const RMat p1 = fields(t.u + h * w), m1 = fields(t.u - h * w);
    const RMat p2 = fields(t.u + 2 * h * w), m2 = fields(t.u - 2 * h * w);
    D[j] = (8.0 * (p1 - m1) - (p2 - m2)) / (12.0 * h);
  }
  const RMat Q = RMat::Identity(t.T.rows(), t.T.rows()) - projector(E0);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = i + 1; j < k; ++j) {
      // [a_i, a_j] = D a_j [a_i] - D a_i [a_j]
      const RVec br = D[i].col(j) - D[j].col(i);
      RVec v = t.jet.d1 * br;
      worst = std::max(worst, (Q * v).norm());
    }
  return worst / f.levi->singular[0];
}

}  // namespace detail

/// Orbit distribution E = H + bracket direction, with the full CR frame.
/// With check_brackets the higher brackets are also tested, which is what
/// decides minimality when the CR dimension is 1.
inline CRFrame orbit_distribution(const SurfaceModel& s, const RVec& u,
                                  const CRTolerances& tol = {}, bool check_brackets = true) {
  const TangentData t = tangent_data(s, u, tol);
  CRFrame f = detail::first_order_frame(s, t, tol);
  if (!check_brackets || f.E.cols() >= s.dim()) return f;
  const double defect = detail::bracket_defect(s, t, f, tol);
  if (defect > tol.rank_high) fail(ErrorCode::MinimalityDetected, "iterated brackets leave E");
  if (defect > tol.rank_low) fail(ErrorCode::IndeterminateRank, "bracket defect in the indeterminate band");
  return f;
}

inline bool minimality_test(const SurfaceModel& s, const RVec& u, const CRTolerances& tol = {}) {
  try {
    orbit_distribution(s, u, tol);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::MinimalityDetected) return true;
    if (e.code() == ErrorCode::ZeroLeviForm) return false;
    throw;
  }
  return false;
}

}  // namespace crflat
