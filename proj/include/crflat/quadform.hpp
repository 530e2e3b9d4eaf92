#pragma once

// The fundamental quadratic form w = Q(z) + O(|z|^3) at a complex point and
// its flat / elliptic classification.

#include "crflat/crgeom.hpp"
#include "crflat/error.hpp"
#include "crflat/linalg.hpp"
#include "crflat/surface.hpp"

#include <random>
#include <vector>

namespace crflat {

/// Q(z) = sum a_ij z_i z_j + b_ij z_i zbar_j + c_ij zbar_i zbar_j with a, c
/// symmetric.
class QuadraticForm {
 public:
  QuadraticForm() = default;
  QuadraticForm(const CMat& a, const CMat& b, const CMat& c)
      : a_(0.5 * (a + a.transpose())), b_(b), c_(0.5 * (c + c.transpose())) {}

  static QuadraticForm zero(int m) {
    return {CMat::Zero(m, m), CMat::Zero(m, m), CMat::Zero(m, m)};
  }

  /// Ambient dimension n; the form lives on C^{n-1}.
  int n() const { return int(b_.rows()) + 1; }
  int m() const { return int(b_.rows()); }
  const CMat& a() const { return a_; }
  const CMat& b() const { return b_; }
  const CMat& c() const { return c_; }

  cplx operator()(const CVec& z) const {
    const CVec zb = z.conjugate();
    return (z.transpose() * a_ * z)(0, 0) + (z.transpose() * b_ * zb)(0, 0) +
           (zb.transpose() * c_ * zb)(0, 0);
  }

  /// w -> mu w
  QuadraticForm scaled(cplx mu) const { return {mu * a_, mu * b_, mu * c_}; }

  /// Q(U z) for a complex linear change of variables.
  QuadraticForm composed(const CMat& U) const {
    return {U.transpose() * a_ * U, U.transpose() * b_ * U.conjugate(),
            U.adjoint() * c_ * U.conjugate()};
  }

  QuadraticForm with_a(const CMat& a) const { return {a, b_, c_}; }

  /// Real symmetric matrix of Re Q in the layout v = (Re z, Im z).
  RMat real_matrix() const { return realified(false); }
  RMat imag_matrix() const { return realified(true); }

 private:
  RMat realified(bool imag_part) const {
    const int k = 2 * m();
    auto basis = [&](int i) {
      CVec z = CVec::Zero(m());
      if (i < m()) z[i] = 1.0;
      else z[i - m()] = kI;
      return z;
    };
    auto val = [&](const CVec& z) {
      const cplx q = (*this)(z);
      return imag_part ? q.imag() : q.real();
    };
    RMat M(k, k);
    for (int i = 0; i < k; ++i) M(i, i) = val(basis(i));
    for (int i = 0; i < k; ++i)
      for (int j = i + 1; j < k; ++j)
        M(i, j) = M(j, i) = 0.5 * (val(basis(i) + basis(j)) - M(i, i) - M(j, j));
    return M;
  }

  CMat a_, b_, c_;
};

struct FlatnessReport {
  bool flat = false;
  cplx lambda{1.0, 0.0};
  CMat h1, h2;                       // b = h1 + i h2, both Hermitian
  double dependency_residual = 0.0;  // second singular value of the realified pair
};

struct EllipticityReport {
  bool elliptic = false;
  int sign = 0;
  RVec eigenvalues;             // ascending
  bool b_positive_definite = false;  // after sign normalization
};

struct QuadTolerances {
  double flat_rel = 1e-9;
  double eig_rel = 1e-9;
  double normal_form = 1e-9;
};

/// Adapted coordinates at a complex point: Z = Ut^* (q - p) along T_pS and
/// W = nu^* (q - p) along the normal line.
struct AdaptedQuadric {
  QuadraticForm form;
  CMat Ut;
  CVec nu;
  TangentData tangent;

  /// Z-coordinates of the parameter tangent vector a (parameter space).
  CVec z_of(const RVec& a) const {
    return Ut.adjoint() * complexify(RVec(tangent.jet.d1 * a));
  }
};

inline AdaptedQuadric adapted_quadric(const SurfaceModel& s, const RVec& u,
                                      const CRTolerances& tol = {}) {
  AdaptedQuadric out;
  out.tangent = tangent_data(s, u, tol);
  const TangentData& t = out.tangent;
  if (t.cr_angle >= tol.complex_angle)
    fail(ErrorCode::NotComplexPoint, "tangent space is not a complex hyperplane");
  const int n = s.n();
  const int m = n - 1;
  // complex orthonormal frame of T_pS and its normal line
  CMat cols(n, t.T.cols());
  for (Eigen::Index k = 0; k < t.T.cols(); ++k) cols.col(k) = complexify(RVec(t.T.col(k)));
  Eigen::JacobiSVD<CMat> csvd(cols, Eigen::ComputeFullU);
  out.Ut = csvd.matrixU().leftCols(m);
  out.nu = csvd.matrixU().col(m);
  const RMat RZ = realify(CMat(out.Ut.adjoint()));  // 2m x 2n
  const RMat RW = realify(CMat(out.nu.adjoint()));  // 2 x 2n
  const RMat L = RZ * t.DA;                          // 2m x 2m
  const RMat Linv = L.inverse();
  // Hessian of W in A-coordinates
  const Eigen::Index p = t.A.cols();
  RMat hw_re(p, p), hw_im(p, p);
  for (Eigen::Index i = 0; i < p; ++i)
    for (Eigen::Index j = 0; j < p; ++j) {
      const RVec h = embedding_hessian(s, t, t.A.col(i), t.A.col(j));
      const RVec w = RW * h;
      hw_re(i, j) = w[0];
      hw_im(i, j) = w[1];
    }
  const RMat Hre = Linv.transpose() * hw_re * Linv;
  const RMat Him = Linv.transpose() * hw_im * Linv;
  // Q(v) = 1/2 v^T (Hre + i Him) v in interleaved coordinates v of Z.
  CMat a(m, m), b(m, m), c(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      auto H = [&](int r, int s2) { return cplx(Hre(r, s2), Him(r, s2)); };
      const cplx xx = H(2 * i, 2 * j), xy = H(2 * i, 2 * j + 1), yx = H(2 * i + 1, 2 * j),
                 yy = H(2 * i + 1, 2 * j + 1);
      // Wirtinger second derivatives of 1/2 v^T H v
      a(i, j) = 0.5 * 0.25 * (xx - kI * xy - kI * yx - yy);
      b(i, j) = 0.25 * (xx + kI * xy - kI * yx + yy);
      c(i, j) = 0.5 * 0.25 * (xx + kI * xy + kI * yx - yy);
    }
  out.form = QuadraticForm(a, b, c);
  return out;
}

/// Fundamental form at a complex point, in adapted coordinates with z
/// tangent and w normal.
inline QuadraticForm extract_quadric(const SurfaceModel& s, const RVec& u,
                                     const CRTolerances& tol = {}) {
  return adapted_quadric(s, u, tol).form;
}

inline FlatnessReport is_flat(const QuadraticForm& q, const QuadTolerances& tol = {}) {
  FlatnessReport r;
  const CMat& b = q.b();
  r.h1 = 0.5 * (b + b.adjoint());
  r.h2 = (b - b.adjoint()) / (2.0 * kI);
  const Eigen::Index m = b.rows();
  RMat stacked(2 * m * m, 2);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j) {
      const Eigen::Index k = 2 * (i * m + j);
      stacked(k, 0) = r.h1(i, j).real();
      stacked(k + 1, 0) = r.h1(i, j).imag();
      stacked(k, 1) = r.h2(i, j).real();
      stacked(k + 1, 1) = r.h2(i, j).imag();
    }
  Eigen::JacobiSVD<RMat> svd(stacked, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  r.dependency_residual = s[1];
  r.flat = s[1] < tol.flat_rel * (s[0] + 1e-300);
  if (!r.flat || s[0] == 0.0) {
    r.lambda = 1.0;
    return r;
  }
  // v1 h1 + v2 h2 = 0 with (v1, v2) = (-sin t, cos t)
  const Eigen::Vector2d v = svd.matrixV().col(1);
  double sn = -v[0], cs = v[1];
  if (sn < 0 || (sn == 0 && cs < 0)) sn = -sn, cs = -cs;
  if (std::abs(sn) < 1e-15) sn = 0.0, cs = 1.0;
  r.lambda = cplx(cs, sn);
  return r;
}

/// Coordinates in which Q is real: w -> conj(lambda) w, then the holomorphic
/// part replaced by the conjugate of the antiholomorphic one.
inline QuadraticForm flat_normal_form(const QuadraticForm& q, const QuadTolerances& tol = {}) {
  const FlatnessReport f = is_flat(q, tol);
  if (!f.flat) fail(ErrorCode::NotFlat, "mixed term does not take values in a real line");
  const QuadraticForm r = q.scaled(std::conj(f.lambda));
  // b is Hermitian up to rounding
  const CMat b = 0.5 * (r.b() + r.b().adjoint());
  return {r.c().conjugate(), b, r.c()};
}

inline double normal_form_defect(const QuadraticForm& q) {
  const RMat im = q.imag_matrix();
  return im.size() ? im.cwiseAbs().maxCoeff() : 0.0;
}

inline EllipticityReport is_elliptic(const QuadraticForm& q, const QuadTolerances& tol = {}) {
  const double scale = std::max({max_abs(q.a()), max_abs(q.b()), max_abs(q.c()), 1e-300});
  if (normal_form_defect(q) > tol.normal_form * std::max(scale, 1.0))
    fail(ErrorCode::NotNormalForm, "quadric is not real-valued");
  EllipticityReport r;
  Eigen::SelfAdjointEigenSolver<RMat> es(q.real_matrix());
  r.eigenvalues = es.eigenvalues();
  const double emax = r.eigenvalues.cwiseAbs().maxCoeff();
  const double cutoff = tol.eig_rel * emax;
  if (emax == 0.0 || r.eigenvalues.cwiseAbs().minCoeff() < cutoff) {
    r.sign = 0;
  } else if (r.eigenvalues.minCoeff() > 0) {
    r.sign = 1;
  } else if (r.eigenvalues.maxCoeff() < 0) {
    r.sign = -1;
  }
  r.elliptic = r.sign != 0;
  if (r.sign != 0) {
    const CMat bh = double(r.sign) * 0.5 * (q.b() + q.b().adjoint());
    Eigen::SelfAdjointEigenSolver<CMat> bs(bh);
    r.b_positive_definite = bs.eigenvalues().minCoeff() > cutoff;
  }
  return r;
}

/// The ellipsoid {Q(z) = c, w = c} of the model quadric: residual and sampler.
class QuadricOrbitOracle {
 public:
  QuadricOrbitOracle(const QuadraticForm& q, double level) : q_(q), level_(level) {
    const auto r = is_elliptic(q);
    if (!r.elliptic) fail(ErrorCode::NotElliptic, "quadric orbit oracle needs an elliptic form");
    sign_ = r.sign;
  }

  double level() const { return level_; }

  double residual(const CVec& z) const { return sign_ * q_(z).real() - level_; }

  /// Points of the level set; the single point 0 when the level is 0.
  std::vector<CVec> sample(int count, unsigned seed = 1) const {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    std::vector<CVec> out;
    for (int i = 0; i < count; ++i) {
      CVec v(q_.m());
      for (int k = 0; k < q_.m(); ++k) v[k] = cplx(g(rng), g(rng));
      const double qv = sign_ * q_(v).real();
      out.push_back(v * std::sqrt(level_ / qv));
    }
    return out;
  }

 private:
  QuadraticForm q_;
  double level_;
  int sign_ = 1;
};

}  // namespace crflat
