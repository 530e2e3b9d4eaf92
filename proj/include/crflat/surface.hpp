#pragma once

#include "crflat/error.hpp"
#include "crflat/linalg.hpp"
#include "crflat/polynomial.hpp"

#include <string>
#include <utility>
#include <vector>

namespace crflat {

/// Parameter domain of a surface.
///  - Plane: parameters z in C^{n-1} (a local model over a box).
///  - Sphere: parameters (z, x) on the unit sphere |z|^2 + x^2 = 1 in C^{n-1} x R.
enum class Domain { Plane, Sphere };

/// Value, first and second real derivatives of the embedding at a parameter.
struct SurfaceJet {
  RVec point;               // R^{2n}
  RMat d1;                  // 2n x P
  std::vector<RMat> d2;     // 2n entries, each P x P
};

/// Real codimension-2 surface S in C^n given as the image of a polynomial map
/// from its parameter domain. A graph {w = phi(z, zbar)} is the plane-domain
/// map z -> (z, phi(z)).
class SurfaceModel {
 public:
  SurfaceModel() = default;

  SurfaceModel(int n, Domain domain, std::vector<Polynomial> components, std::string name = {})
      : n_(n), domain_(domain), components_(std::move(components)), name_(std::move(name)) {
    if (n_ < 2) fail(ErrorCode::SchemaError, "ambient dimension must be at least 2");
    if (int(components_.size()) != n_)
      fail(ErrorCode::SchemaError, "need one component polynomial per ambient coordinate");
    degree_ = std::max(1, degree());
    const int p = param_dim();
    d1_.resize(n_);
    d2_.resize(n_);
    for (int c = 0; c < n_; ++c) {
      Polynomial& poly = components_[c];
      if (poly.num_z() != n_ - 1) {
        Polynomial fixed(n_ - 1, domain_ == Domain::Sphere);
        fixed = fixed + poly;
        poly = fixed;
      }
      d1_[c].resize(p);
      d2_[c].resize(p);
      for (int i = 0; i < p; ++i) {
        d1_[c][i] = diff_param(poly, i);
        d2_[c][i].resize(p);
        for (int j = 0; j < p; ++j) d2_[c][i][j] = diff_param(d1_[c][i], j);
      }
    }
  }

  static SurfaceModel graph(int n, const Polynomial& phi, std::string name = {}) {
    std::vector<Polynomial> comps;
    for (int k = 0; k < n - 1; ++k) comps.push_back(Polynomial::variable_z(n - 1, false, k));
    Polynomial f(n - 1, false);
    comps.push_back(f + phi);
    SurfaceModel s(n, Domain::Plane, std::move(comps), std::move(name));
    s.graph_ = true;
    return s;
  }

  int n() const { return n_; }
  Domain domain() const { return domain_; }
  const std::string& name() const { return name_; }
  bool is_graph() const { return graph_; }
  const std::vector<Polynomial>& components() const { return components_; }

  /// Half-width of the parameter box for plane-domain models.
  double box() const { return box_; }
  void set_box(double b) { box_ = b; }

  int param_dim() const { return 2 * (n_ - 1) + (domain_ == Domain::Sphere ? 1 : 0); }
  int dim() const { return 2 * n_ - 2; }

  /// Parameter vector from (z, x); x ignored for plane domains.
  RVec param(const CVec& z, double x = 0.0) const {
    RVec u(param_dim());
    u.head(2 * (n_ - 1)) = realify(z);
    if (domain_ == Domain::Sphere) u[2 * (n_ - 1)] = x;
    return u;
  }

  CVec param_z(const RVec& u) const { return complexify(RVec(u.head(2 * (n_ - 1)))); }
  double param_x(const RVec& u) const {
    return domain_ == Domain::Sphere ? u[2 * (n_ - 1)] : 0.0;
  }

  /// Pulls a parameter back onto the domain (sphere normalization).
  RVec project_param(const RVec& u) const {
    if (domain_ == Domain::Sphere) return u / u.norm();
    return u;
  }

  int degree() const {
    int d = 0;
    for (const auto& c : components_) d = std::max(d, c.degree());
    return d;
  }

  CVec point(const RVec& u) const {
    const PowerTable pt(param_z(u), param_x(u), degree_);
    CVec p(n_);
    for (int c = 0; c < n_; ++c) p[c] = components_[c].eval(pt);
    return p;
  }

  SurfaceJet jet(const RVec& u) const {
    const PowerTable pt(param_z(u), param_x(u), degree_);
    const int p = param_dim();
    SurfaceJet j;
    j.point.resize(2 * n_);
    j.d1.resize(2 * n_, p);
    j.d2.assign(2 * n_, RMat(p, p));
    for (int c = 0; c < n_; ++c) {
      const cplx v = components_[c].eval(pt);
      j.point[2 * c] = v.real();
      j.point[2 * c + 1] = v.imag();
      for (int a = 0; a < p; ++a) {
        const cplx g = d1_[c][a].eval(pt);
        j.d1(2 * c, a) = g.real();
        j.d1(2 * c + 1, a) = g.imag();
        for (int b = a; b < p; ++b) {
          const cplx h = d2_[c][a][b].eval(pt);
          j.d2[2 * c](a, b) = j.d2[2 * c](b, a) = h.real();
          j.d2[2 * c + 1](a, b) = j.d2[2 * c + 1](b, a) = h.imag();
        }
      }
    }
    return j;
  }

  /// Orthonormal basis (columns) of the tangent space of the parameter domain.
  RMat param_tangent_basis(const RVec& u) const {
    const int p = param_dim();
    if (domain_ == Domain::Plane) return RMat::Identity(p, p);
    RMat uu(p, 1);
    uu.col(0) = u.normalized();
    return orthogonal_complement(uu);
  }

 private:
  Polynomial diff_param(const Polynomial& poly, int i) const { return poly.diff_real(i); }

  int n_ = 0;
  Domain domain_ = Domain::Plane;
  std::vector<Polynomial> components_;
  std::string name_;
  bool graph_ = false;
  double box_ = 1.0;
  int degree_ = 1;
  std::vector<std::vector<Polynomial>> d1_;
  std::vector<std::vector<std::vector<Polynomial>>> d2_;
};

}  // namespace crflat
