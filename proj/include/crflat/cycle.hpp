#pragma once

// Boundary cycles of one level: sampled point clouds, their star-shaped fits
// in a projection frame, and the closed curves cut out by complex lines.

#include "crflat/error.hpp"
#include "crflat/linalg.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <numeric>
#include <optional>
#include <vector>

namespace crflat {

/// Real monomials of total degree <= d in dim variables.
class RealPolyBasis {
 public:
  RealPolyBasis() = default;
  RealPolyBasis(int dim, int degree) : dim_(dim), degree_(degree) {
    std::vector<int> e(dim, 0);
    for (int total = 0; total <= degree; ++total) emit(e, 0, total);
  }

  int size() const { return int(exps_.size()); }
  int degree() const { return degree_; }

  RVec values(const RVec& t) const {
    const RMat pw = powers(t);
    RVec v(size());
    for (int k = 0; k < size(); ++k) {
      double p = 1.0;
      for (int i = 0; i < dim_; ++i) p *= pw(i, exps_[k][i]);
      v[k] = p;
    }
    return v;
  }

  /// size() x dim matrix of partial derivatives.
  RMat gradient(const RVec& t) const {
    const RMat pw = powers(t);
    RMat g = RMat::Zero(size(), dim_);
    for (int k = 0; k < size(); ++k)
      for (int j = 0; j < dim_; ++j) {
        const int ej = exps_[k][j];
        if (ej == 0) continue;
        double p = ej * pw(j, ej - 1);
        for (int i = 0; i < dim_; ++i)
          if (i != j) p *= pw(i, exps_[k][i]);
        g(k, j) = p;
      }
    return g;
  }

 private:
  void emit(std::vector<int>& e, int i, int left) {
    if (i == dim_ - 1) {
      e[i] = left;
      exps_.push_back(e);
      return;
    }
    for (int k = left; k >= 0; --k) {
      e[i] = k;
      emit(e, i + 1, left - k);
    }
  }

  RMat powers(const RVec& t) const {
    RMat pw(dim_, degree_ + 1);
    for (int i = 0; i < dim_; ++i) {
      pw(i, 0) = 1.0;
      for (int k = 1; k <= degree_; ++k) pw(i, k) = pw(i, k - 1) * t[i];
    }
    return pw;
  }

  int dim_ = 0;
  int degree_ = 0;
  std::vector<std::vector<int>> exps_;
};

/// Holomorphic polynomial in m complex variables.
class HolomorphicPolynomial {
 public:
  HolomorphicPolynomial() = default;
  HolomorphicPolynomial(int m, int degree) : m_(m), degree_(degree) {
    std::vector<int> e(m, 0);
    for (int total = 0; total <= degree; ++total) emit(e, 0, total);
    coeffs_ = CVec::Zero(int(exps_.size()));
  }

  int m() const { return m_; }
  int degree() const { return degree_; }
  int size() const { return int(exps_.size()); }
  CVec& coeffs() { return coeffs_; }
  const CVec& coeffs() const { return coeffs_; }
  const std::vector<std::vector<int>>& exponents() const { return exps_; }

  CVec monomials(const CVec& z) const {
    CVec v(size());
    for (int k = 0; k < size(); ++k) {
      cplx p = 1.0;
      for (int i = 0; i < m_; ++i) p *= std::pow(z[i], exps_[k][i]);
      v[k] = p;
    }
    return v;
  }

  cplx operator()(const CVec& z) const { return (monomials(z).transpose() * coeffs_)(0, 0); }

  /// Complex gradient (d/dz_i).
  CVec gradient(const CVec& z) const {
    CVec g = CVec::Zero(m_);
    for (int k = 0; k < size(); ++k)
      for (int j = 0; j < m_; ++j) {
        const int ej = exps_[k][j];
        if (ej == 0) continue;
        cplx p = double(ej) * std::pow(z[j], ej - 1);
        for (int i = 0; i < m_; ++i)
          if (i != j) p *= std::pow(z[i], exps_[k][i]);
        g[j] += coeffs_[k] * p;
      }
    return g;
  }

  /// Least-squares fit of values at points; returns the max residual.
  double fit(const std::vector<CVec>& pts, const std::vector<cplx>& vals) {
    CMat A(pts.size(), size());
    CVec b(pts.size());
    for (size_t i = 0; i < pts.size(); ++i) {
      A.row(i) = monomials(pts[i]).transpose();
      b[i] = vals[i];
    }
    coeffs_ = A.completeOrthogonalDecomposition().solve(b);
    return (A * coeffs_ - b).cwiseAbs().maxCoeff();
  }

 private:
  void emit(std::vector<int>& e, int i, int left) {
    if (i == m_ - 1) {
      e[i] = left;
      exps_.push_back(e);
      return;
    }
    for (int k = left; k >= 0; --k) {
      e[i] = k;
      emit(e, i + 1, left - k);
    }
  }

  int m_ = 0;
  int degree_ = 0;
  std::vector<std::vector<int>> exps_;
  CVec coeffs_;
};

/// Unitary frame of C^n: frame coordinates y = U^* p. The first n-2 columns
/// span the slice base, column n-2 is the Cauchy direction and column n-1 the
/// fiber direction.
struct ProjectionFrame {
  CMat U;

  static ProjectionFrame identity(int n) { return {CMat::Identity(n, n)}; }

  /// Rotation of the base block (first n-1 coordinates) by a unitary R.
  static ProjectionFrame rotated_base(const CMat& R) {
    const Eigen::Index m = R.rows();
    CMat U = CMat::Identity(m + 1, m + 1);
    U.topLeftCorner(m, m) = R;
    return {U};
  }

  int n() const { return int(U.rows()); }
  CVec to_frame(const CVec& p) const { return U.adjoint() * p; }
  CVec to_ambient(const CVec& y) const { return U * y; }
};

/// A sampled boundary cycle at one level: points in C^n, connectivity edges
/// and the size of the level differential at each sample.
struct SlicedCycle {
  double level = 0.0;
  std::vector<CVec> points;
  std::vector<std::pair<int, int>> edges;
  std::vector<double> dx;
  bool ordered_curve = false;  // n = 2 only: points are one equispaced closed curve

  int n() const { return points.empty() ? 0 : int(points[0].size()); }

  double diameter() const {
    double d = 0.0;
    for (const CVec& p : points) d = std::max(d, (p - points[0]).norm());
    return 2.0 * d;
  }
};

/// Closed curve in C^2 with coordinates (z, w), sampled at equispaced values
/// of a periodic parameter.
class CurveSlice {
 public:
  CurveSlice() = default;
  CurveSlice(std::vector<cplx> z, std::vector<cplx> w) : z_(std::move(z)), w_(std::move(w)) {
    const int N = int(z_.size());
    Eigen::FFT<double> fft;
    std::vector<cplx> zh;
    fft.fwd(zh, z_);
    for (int j = 0; j < N; ++j) {
      int k = j <= N / 2 ? j : j - N;
      if (2 * j == N) k = 0;
      zh[j] *= cplx(0.0, double(k));
    }
    fft.inv(dz_, zh);
    spacing_ = 0.0;
    for (int k = 0; k < N; ++k) spacing_ = std::max(spacing_, std::abs(z_[(k + 1) % N] - z_[k]));
  }

  int size() const { return int(z_.size()); }
  const std::vector<cplx>& z() const { return z_; }
  const std::vector<cplx>& w() const { return w_; }
  const std::vector<cplx>& dz() const { return dz_; }
  double spacing() const { return spacing_; }

  double distance(cplx zeta) const {
    double d = 1e300;
    for (const cplx& q : z_) d = std::min(d, std::abs(q - zeta));
    return d;
  }

  /// C_m = (1/2 pi i) \oint w^m dz / (z - zeta) for m = 0..M.
  std::vector<cplx> moments(cplx zeta, int M) const {
    const int N = size();
    std::vector<cplx> c(M + 1, 0.0);
    for (int k = 0; k < N; ++k) {
      const cplx base = dz_[k] / (z_[k] - zeta);
      cplx wm = 1.0;
      for (int m = 0; m <= M; ++m) {
        c[m] += wm * base;
        wm *= w_[k];
      }
    }
    const cplx scale = 1.0 / (cplx(0.0, 1.0) * double(N));
    for (auto& v : c) v *= scale;
    return c;
  }

 private:
  std::vector<cplx> z_, w_, dz_;
  double spacing_ = 0.0;
};

/// Star-shaped description of a cycle in a frame: base b = c + r(theta) theta
/// over the unit sphere of the base, fiber y_n = f(theta).
struct CycleFitOptions {
  int max_degree = 6;
  int max_rows = 3000;
  double fit_tol = 1e-10;
};

class FramedCycle {
 public:
  FramedCycle() = default;
  FramedCycle(const SlicedCycle& cycle, const ProjectionFrame& frame,
              const CycleFitOptions& opt = {})
      : frame_(frame), level_(cycle.level) {
    if (cycle.points.empty()) fail(ErrorCode::LineSliceEmpty, "empty cycle");
    n_ = cycle.n();
    m_ = n_ - 1;
    std::vector<RVec> base;
    std::vector<cplx> fib;
    for (const CVec& p : cycle.points) {
      const CVec y = frame.to_frame(p);
      base.push_back(realify(CVec(y.head(m_))));
      fib.push_back(y[m_]);
    }
    center_ = RVec::Zero(2 * m_);
    for (const RVec& b : base) center_ += b;
    center_ /= double(base.size());
    std::vector<RVec> theta(base.size());
    RVec rad(base.size());
    for (size_t i = 0; i < base.size(); ++i) {
      const RVec d = base[i] - center_;
      rad[i] = d.norm();
      if (!(rad[i] > 0)) fail(ErrorCode::NonGraphOrbit, "cycle passes through its own center");
      theta[i] = d / rad[i];
    }
    r_mean_ = rad.mean();
    r_max_ = rad.maxCoeff();
    if (cycle.ordered_curve && n_ == 2) {
      for (size_t i = 0; i < base.size(); ++i) {
        curve_z_.emplace_back(base[i][0], base[i][1]);
        curve_w_.push_back(fib[i]);
      }
    }
    const int stride = std::max<int>(1, int(base.size()) / opt.max_rows);
    std::vector<int> rows;
    for (int i = 0; i < int(base.size()); i += stride) rows.push_back(i);
    fit_radius_ = fit_residual_ = 1e300;
    const double fscale = std::max(1.0, std::abs(fib[0]));
    bool r_done = false, f_done = false;
    for (int d = 0; d <= opt.max_degree && !(r_done && f_done); ++d) {
      const RealPolyBasis B(2 * m_, d);
      RMat A(rows.size(), B.size());
      for (size_t i = 0; i < rows.size(); ++i) A.row(i) = B.values(theta[rows[i]]).transpose();
      const auto cod = A.completeOrthogonalDecomposition();
      auto max_res = [&](auto eval) {
        double r = 0.0;
        for (size_t i = 0; i < base.size(); ++i) r = std::max(r, eval(i));
        return r;
      };
      if (!r_done) {
        RVec rhs(rows.size());
        for (size_t i = 0; i < rows.size(); ++i) rhs[i] = rad[rows[i]];
        const RVec c = cod.solve(rhs);
        const double res = max_res([&](size_t i) { return std::abs(B.values(theta[i]).dot(c) - rad[i]); });
        if (res < fit_radius_) {
          fit_radius_ = res;
          rbasis_ = B;
          rcoef_ = c;
        }
        r_done = res < opt.fit_tol * r_max_;
      }
      if (!f_done) {
        RVec re(rows.size()), im(rows.size());
        for (size_t i = 0; i < rows.size(); ++i) {
          re[i] = fib[rows[i]].real();
          im[i] = fib[rows[i]].imag();
        }
        const RVec cr = cod.solve(re), ci = cod.solve(im);
        const double res = max_res([&](size_t i) {
          const RVec v = B.values(theta[i]);
          return std::abs(cplx(v.dot(cr), v.dot(ci)) - fib[i]);
        });
        if (res < fit_residual_) {
          fit_residual_ = res;
          fbasis_ = B;
          fre_ = cr;
          fim_ = ci;
        }
        f_done = res < opt.fit_tol * fscale;
      }
    }
  }

  int n() const { return n_; }
  double level() const { return level_; }
  const ProjectionFrame& frame() const { return frame_; }
  const RVec& center() const { return center_; }
  double radius_fit_residual() const { return fit_radius_; }
  double fiber_fit_residual() const { return fit_residual_; }
  double max_radius() const { return r_max_; }

  double radius(const RVec& theta) const { return rbasis_.values(theta).dot(rcoef_); }
  RVec radius_gradient(const RVec& theta) const { return rbasis_.gradient(theta).transpose() * rcoef_; }
  cplx fiber(const RVec& theta) const {
    const RVec v = fbasis_.values(theta);
    return {v.dot(fre_), v.dot(fim_)};
  }
  /// Real and imaginary gradients as the columns of a 2m x 2 matrix.
  RMat fiber_gradient(const RVec& theta) const {
    const RMat g = fbasis_.gradient(theta);
    RMat out(g.cols(), 2);
    out.col(0) = g.transpose() * fre_;
    out.col(1) = g.transpose() * fim_;
    return out;
  }

  /// Base point (real coordinates) of the cycle in direction theta.
  RVec base_point(const RVec& theta) const { return center_ + radius(theta) * theta; }

  /// Whether a base point (real coordinates) lies strictly inside the
  /// projected cycle, and its radial fraction.
  double radial_fraction(const RVec& b) const {
    const RVec d = b - center_;
    const double r = d.norm();
    if (r == 0.0) return 0.0;
    return r / radius(d / r);
  }

  /// The closed curve cut out by the complex line {base'' = zeta2} (frame
  /// coordinates), parametrized by the angle of the Cauchy coordinate around
  /// the center. Empty when the line misses the cycle.
  std::optional<CurveSlice> line_slice(const CVec& zeta2, int nodes) const {
    if (!curve_z_.empty()) return CurveSlice(curve_z_, curve_w_);
    const int k = m_ - 1;  // complex dimension of the slice base
    std::vector<cplx> zs(nodes), ws(nodes);
    CVec th2 = CVec::Zero(k);
    if (k > 0) {
      const CVec c2 = complexify(RVec(center_.head(2 * k)));
      th2 = (zeta2 - c2) / r_mean_;
      if (th2.norm() >= 1.0) return std::nullopt;
    }
    const cplx clast(center_[2 * k], center_[2 * k + 1]);
    for (int j = 0; j < nodes; ++j) {
      const double beta = 2.0 * kPi * j / nodes;
      const cplx rot = std::polar(1.0, beta);
      auto theta_of = [&](const CVec& t2) {
        CVec t(m_);
        t.head(k) = t2;
        t[k] = std::sqrt(std::max(0.0, 1.0 - t2.squaredNorm())) * rot;
        return realify(t);
      };
      if (k > 0) {
        const CVec c2 = complexify(RVec(center_.head(2 * k)));
        auto F = [&](const RVec& x) {
          const CVec t2 = complexify(x);
          const RVec th = theta_of(t2);
          return RVec(realify(CVec(c2 + radius(th) * t2 - zeta2)));
        };
        RVec x = realify(th2);
        bool ok = false;
        for (int it = 0; it < 40; ++it) {
          const RVec f = F(x);
          if (f.norm() < 1e-13 * std::max(1.0, r_max_)) {
            ok = true;
            break;
          }
          RMat Jm(2 * k, 2 * k);
          const double h = 1e-7;
          for (int c = 0; c < 2 * k; ++c) {
            RVec xp = x, xm = x;
            xp[c] += h;
            xm[c] -= h;
            Jm.col(c) = (F(xp) - F(xm)) / (2 * h);
          }
          RVec dx = Jm.fullPivLu().solve(-f);
          double step = 1.0;
          while (complexify(RVec(x + step * dx)).norm() >= 1.0 && step > 1e-6) step *= 0.5;
          x += step * dx;
        }
        if (!ok) return std::nullopt;
        th2 = complexify(x);
      }
      const RVec th = theta_of(th2);
      const double r = radius(th);
      zs[j] = clast + r * cplx(th[2 * k], th[2 * k + 1]);
      ws[j] = fiber(th);
    }
    return CurveSlice(std::move(zs), std::move(ws));
  }

 private:
  ProjectionFrame frame_;
  double level_ = 0.0;
  int n_ = 0, m_ = 0;
  RVec center_;
  double r_mean_ = 0.0, r_max_ = 0.0;
  RealPolyBasis rbasis_, fbasis_;
  RVec rcoef_, fre_, fim_;
  double fit_radius_ = 0.0, fit_residual_ = 0.0;
  std::vector<cplx> curve_z_, curve_w_;
};

}  // namespace crflat
