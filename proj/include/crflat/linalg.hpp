#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

namespace crflat {

using cplx = std::complex<double>;
using RVec = Eigen::VectorXd;
using RMat = Eigen::MatrixXd;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;

inline constexpr double kPi = std::numbers::pi;
inline constexpr cplx kI{0.0, 1.0};

// Real coordinates of C^n are interleaved: (Re z1, Im z1, Re z2, Im z2, ...).

inline RVec realify(const CVec& z) {
  RVec v(2 * z.size());
  for (Eigen::Index k = 0; k < z.size(); ++k) {
    v[2 * k] = z[k].real();
    v[2 * k + 1] = z[k].imag();
  }
  return v;
}

inline CVec complexify(const RVec& v) {
  CVec z(v.size() / 2);
  for (Eigen::Index k = 0; k < z.size(); ++k) z[k] = cplx(v[2 * k], v[2 * k + 1]);
  return z;
}

/// Multiplication by i on R^{2n}.
inline RMat complex_structure(Eigen::Index n) {
  RMat J = RMat::Zero(2 * n, 2 * n);
  for (Eigen::Index k = 0; k < n; ++k) {
    J(2 * k + 1, 2 * k) = 1.0;
    J(2 * k, 2 * k + 1) = -1.0;
  }
  return J;
}

inline RVec apply_j(const RVec& v) {
  RVec out(v.size());
  for (Eigen::Index k = 0; k + 1 < v.size(); k += 2) {
    out[k] = -v[k + 1];
    out[k + 1] = v[k];
  }
  return out;
}

/// Realified matrix of a complex linear map in interleaved coordinates.
inline RMat realify(const CMat& a) {
  RMat r(2 * a.rows(), 2 * a.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      const cplx c = a(i, j);
      r(2 * i, 2 * j) = c.real();
      r(2 * i, 2 * j + 1) = -c.imag();
      r(2 * i + 1, 2 * j) = c.imag();
      r(2 * i + 1, 2 * j + 1) = c.real();
    }
  return r;
}

/// Orthonormal basis of the column space, keeping directions whose singular
/// value exceeds rel_tol times the leading one.
inline RMat orthonormal_basis(const RMat& a, double rel_tol = 1e-10) {
  if (a.cols() == 0) return RMat(a.rows(), 0);
  Eigen::JacobiSVD<RMat> svd(a, Eigen::ComputeThinU);
  const auto& s = svd.singularValues();
  Eigen::Index rank = 0;
  const double lead = s.size() ? s[0] : 0.0;
  for (Eigen::Index k = 0; k < s.size(); ++k)
    if (s[k] > rel_tol * lead && s[k] > 0.0) ++rank;
  return svd.matrixU().leftCols(rank);
}

/// Orthonormal basis of the orthogonal complement of span(a) in R^rows.
inline RMat orthogonal_complement(const RMat& a, double rel_tol = 1e-10) {
  const Eigen::Index m = a.rows();
  if (a.cols() == 0) return RMat::Identity(m, m);
  Eigen::JacobiSVD<RMat> svd(a, Eigen::ComputeFullU);
  const auto& s = svd.singularValues();
  Eigen::Index rank = 0;
  for (Eigen::Index k = 0; k < s.size(); ++k)
    if (s[k] > rel_tol * s[0] && s[k] > 0.0) ++rank;
  return svd.matrixU().rightCols(m - rank);
}

/// Orthogonal projector onto span(basis); basis columns must be orthonormal.
inline RMat projector(const RMat& basis) { return basis * basis.transpose(); }

/// Spectral-norm distance between the orthogonal projectors of two subspaces
/// (sine of the largest principal angle when dimensions agree).
inline double subspace_distance(const RMat& a, const RMat& b) {
  const RMat qa = orthonormal_basis(a);
  const RMat qb = orthonormal_basis(b);
  const RMat d = projector(qa) - projector(qb);
  Eigen::JacobiSVD<RMat> svd(d);
  return svd.singularValues().size() ? svd.singularValues()[0] : 0.0;
}

/// Principal angles (radians, ascending) between two subspaces given by
/// orthonormal bases.
inline std::vector<double> principal_angles(const RMat& qa, const RMat& qb) {
  Eigen::JacobiSVD<RMat> svd(qa.transpose() * qb);
  std::vector<double> out;
  for (Eigen::Index k = 0; k < svd.singularValues().size(); ++k)
    out.push_back(std::acos(std::clamp(svd.singularValues()[k], -1.0, 1.0)));
  std::sort(out.begin(), out.end());
  return out;
}

inline double max_abs(const CMat& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace crflat
