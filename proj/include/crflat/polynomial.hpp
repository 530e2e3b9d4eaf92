#pragma once

#include "crflat/linalg.hpp"

#include <algorithm>
#include <map>
#include <tuple>
#include <vector>

namespace crflat {

/// c * z^zdeg * zbar^zbardeg * x^xdeg
struct Monomial {
  std::vector<int> zdeg;
  std::vector<int> zbardeg;
  int xdeg = 0;
  cplx coeff{0.0, 0.0};

  int degree() const {
    int d = xdeg;
    for (int k : zdeg) d += k;
    for (int k : zbardeg) d += k;
    return d;
  }
};

/// Powers of z, zbar and x up to a fixed degree, shared by many evaluations
/// at one point.
struct PowerTable {
  int m = 0;
  int dmax = 0;
  std::vector<cplx> zp, zbp;  // [k * (dmax + 1) + e]
  std::vector<double> xp;

  PowerTable(const CVec& z, double x, int degree) : m(int(z.size())), dmax(std::max(degree, 1)) {
    const int w = dmax + 1;
    zp.assign(m * w, 1.0);
    zbp.assign(m * w, 1.0);
    xp.assign(w, 1.0);
    for (int k = 0; k < m; ++k)
      for (int e = 1; e <= dmax; ++e) {
        zp[k * w + e] = zp[k * w + e - 1] * z[k];
        zbp[k * w + e] = zbp[k * w + e - 1] * std::conj(z[k]);
      }
    for (int e = 1; e <= dmax; ++e) xp[e] = xp[e - 1] * x;
  }

  cplx z(int k, int e) const { return zp[k * (dmax + 1) + e]; }
  cplx zbar(int k, int e) const { return zbp[k * (dmax + 1) + e]; }
};

/// Complex-coefficient polynomial in (z, zbar) with z in C^m, optionally also
/// in one real variable x. Differentiation is exact.
class Polynomial {
 public:
  Polynomial() = default;
  Polynomial(int num_z, bool has_x) : num_z_(num_z), has_x_(has_x) {}

  int num_z() const { return num_z_; }
  bool has_x() const { return has_x_; }
  const std::vector<Monomial>& terms() const { return terms_; }

  /// Number of real parameters: 2 per complex variable (+1 for x).
  int num_real_params() const { return 2 * num_z_ + (has_x_ ? 1 : 0); }

  void add(const std::vector<int>& zdeg, const std::vector<int>& zbardeg, int xdeg, cplx coeff) {
    Monomial m{zdeg, zbardeg, xdeg, coeff};
    m.zdeg.resize(num_z_, 0);
    m.zbardeg.resize(num_z_, 0);
    terms_.push_back(std::move(m));
    canonicalize();
  }

  static Polynomial variable_z(int num_z, bool has_x, int k, cplx c = 1.0) {
    Polynomial p(num_z, has_x);
    std::vector<int> d(num_z, 0);
    d[k] = 1;
    p.add(d, std::vector<int>(num_z, 0), 0, c);
    return p;
  }

  int degree() const {
    int d = 0;
    for (const auto& t : terms_) d = std::max(d, t.degree());
    return d;
  }

  bool is_zero() const { return terms_.empty(); }

  cplx eval(const CVec& z, double x = 0.0) const { return eval(PowerTable(z, x, degree())); }

  /// Evaluation from precomputed powers; the table degree must cover ours.
  cplx eval(const PowerTable& p) const {
    cplx sum = 0.0;
    for (const auto& t : terms_) {
      cplx v = t.coeff;
      for (int k = 0; k < num_z_; ++k) {
        if (t.zdeg[k]) v *= p.z(k, t.zdeg[k]);
        if (t.zbardeg[k]) v *= p.zbar(k, t.zbardeg[k]);
      }
      if (t.xdeg) v *= p.xp[t.xdeg];
      sum += v;
    }
    return sum;
  }

  Polynomial diff_z(int k) const {
    Polynomial out(num_z_, has_x_);
    for (auto t : terms_) {
      if (t.zdeg[k] == 0) continue;
      t.coeff *= double(t.zdeg[k]);
      --t.zdeg[k];
      out.terms_.push_back(std::move(t));
    }
    out.canonicalize();
    return out;
  }

  Polynomial diff_zbar(int k) const {
    Polynomial out(num_z_, has_x_);
    for (auto t : terms_) {
      if (t.zbardeg[k] == 0) continue;
      t.coeff *= double(t.zbardeg[k]);
      --t.zbardeg[k];
      out.terms_.push_back(std::move(t));
    }
    out.canonicalize();
    return out;
  }

  Polynomial diff_x() const {
    Polynomial out(num_z_, has_x_);
    for (auto t : terms_) {
      if (t.xdeg == 0) continue;
      t.coeff *= double(t.xdeg);
      --t.xdeg;
      out.terms_.push_back(std::move(t));
    }
    out.canonicalize();
    return out;
  }

  /// Derivative along real parameter `index` in the layout
  /// (Re z1, Im z1, ..., Re zm, Im zm[, x]).
  Polynomial diff_real(int index) const {
    if (index == 2 * num_z_) return diff_x();
    const int k = index / 2;
    if (index % 2 == 0) return diff_z(k) + diff_zbar(k);
    return (diff_z(k) - diff_zbar(k)) * kI;
  }

  Polynomial operator+(const Polynomial& o) const {
    Polynomial out(std::max(num_z_, o.num_z_), has_x_ || o.has_x_);
    out.terms_ = terms_;
    out.terms_.insert(out.terms_.end(), o.terms_.begin(), o.terms_.end());
    out.canonicalize();
    return out;
  }

  Polynomial operator-(const Polynomial& o) const { return *this + o * cplx(-1.0); }

  Polynomial operator*(cplx s) const {
    Polynomial out = *this;
    for (auto& t : out.terms_) t.coeff *= s;
    out.canonicalize();
    return out;
  }

  Polynomial operator*(const Polynomial& o) const {
    Polynomial out(std::max(num_z_, o.num_z_), has_x_ || o.has_x_);
    for (const auto& a : terms_)
      for (const auto& b : o.terms_) {
        Monomial m;
        m.zdeg.assign(out.num_z_, 0);
        m.zbardeg.assign(out.num_z_, 0);
        for (int k = 0; k < out.num_z_; ++k) {
          if (k < int(a.zdeg.size())) m.zdeg[k] += a.zdeg[k], m.zbardeg[k] += a.zbardeg[k];
          if (k < int(b.zdeg.size())) m.zdeg[k] += b.zdeg[k], m.zbardeg[k] += b.zbardeg[k];
        }
        m.xdeg = a.xdeg + b.xdeg;
        m.coeff = a.coeff * b.coeff;
        out.terms_.push_back(std::move(m));
      }
    out.canonicalize();
    return out;
  }

  bool operator==(const Polynomial& o) const {
    if (num_z_ != o.num_z_ || terms_.size() != o.terms_.size()) return false;
    for (size_t i = 0; i < terms_.size(); ++i) {
      const auto& a = terms_[i];
      const auto& b = o.terms_[i];
      if (a.zdeg != b.zdeg || a.zbardeg != b.zbardeg || a.xdeg != b.xdeg || a.coeff != b.coeff)
        return false;
    }
    return true;
  }

 private:
  void canonicalize() {
    using Key = std::tuple<std::vector<int>, std::vector<int>, int>;
    std::map<Key, cplx> acc;
    for (auto& t : terms_) {
      t.zdeg.resize(num_z_, 0);
      t.zbardeg.resize(num_z_, 0);
      acc[Key{t.zdeg, t.zbardeg, t.xdeg}] += t.coeff;
    }
    terms_.clear();
    for (auto& [k, c] : acc) {
      if (c == cplx(0.0, 0.0)) continue;
      terms_.push_back(Monomial{std::get<0>(k), std::get<1>(k), std::get<2>(k), c});
    }
  }

  int num_z_ = 0;
  bool has_x_ = false;
  std::vector<Monomial> terms_;
};

}  // namespace crflat
