#pragma once

// Closed-form surfaces used by tests, samples and the acceptance driver.

#include "crflat/cycle.hpp"
#include "crflat/polynomial.hpp"
#include "crflat/quadform.hpp"
#include "crflat/surface.hpp"

#include <vector>

namespace crflat::fixtures {

namespace detail {

inline std::vector<int> unit(int m, int k, int e = 1) {
  std::vector<int> d(m, 0);
  d[k] = e;
  return d;
}

}  // namespace detail

/// Graph of a quadratic form on C^{n-1}.
inline SurfaceModel quadric(const QuadraticForm& q, std::string name = "quadric") {
  const int m = q.m();
  Polynomial phi(m, false);
  const std::vector<int> zero(m, 0);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      auto zi = detail::unit(m, i);
      auto zizj = zi;
      zizj[j] += 1;
      phi.add(zizj, zero, 0, q.a()(i, j));
      phi.add(zi, detail::unit(m, j), 0, q.b()(i, j));
      phi.add(zero, zizj, 0, q.c()(i, j));
    }
  return SurfaceModel::graph(m + 1, phi, std::move(name));
}

/// w = |z1|^2 + ... + |z_{n-1}|^2
inline SurfaceModel sq(int n = 3) {
  const int m = n - 1;
  return quadric({CMat::Zero(m, m), CMat::Identity(m, m), CMat::Zero(m, m)}, "SQ" + std::to_string(n));
}

/// w = |z1|^2 + i |z2|^2: not flat at 0.
inline SurfaceModel snf() {
  CMat b = CMat::Zero(2, 2);
  b(0, 0) = 1.0;
  b(1, 1) = kI;
  return quadric({CMat::Zero(2, 2), b, CMat::Zero(2, 2)}, "SNF");
}

/// w = |z|^2 + eps * Re(z1^2 zbar2), a nonminimal cubic perturbation of SQ3.
inline SurfaceModel perturbed_quadric(double eps = 0.05) {
  Polynomial phi(2, false);
  phi.add({1, 0}, {1, 0}, 0, 1.0);
  phi.add({0, 1}, {0, 1}, 0, 1.0);
  phi.add({2, 0}, {0, 1}, 0, 0.5 * eps);
  phi.add({0, 1}, {2, 0}, 0, 0.5 * eps);
  return SurfaceModel::graph(3, phi, "perturbed");
}

/// Image of the unit sphere of C^{n-1} x R under id x gamma, gamma a
/// polynomial curve given by its coefficients in x (ascending).
inline SurfaceModel sphere_curve(int n, const std::vector<cplx>& gamma, std::string name) {
  const int m = n - 1;
  std::vector<Polynomial> comps;
  for (int k = 0; k < m; ++k) comps.push_back(Polynomial::variable_z(m, true, k));
  Polynomial w(m, true);
  const std::vector<int> zero(m, 0);
  for (size_t e = 0; e < gamma.size(); ++e)
    if (gamma[e] != cplx(0.0)) w.add(zero, zero, int(e), gamma[e]);
  comps.push_back(w);
  return SurfaceModel(n, Domain::Sphere, std::move(comps), std::move(name));
}

/// Unit sphere embedded by w = x.
inline SurfaceModel sph(int n = 3) { return sphere_curve(n, {0.0, 1.0}, "SPH"); }

/// gamma(x) = p(x + 0.2), p(t) = (t^2 - 1/4) + i (t^3 - t/4): an immersion
/// with gamma(0.3) = gamma(-0.7).
inline std::vector<cplx> crossing_gamma() {
  // expand p(x + s) with s = 0.2
  const double s = 0.2;
  const cplx c0(s * s - 0.25, s * s * s - 0.25 * s);
  const cplx c1(2 * s, 3 * s * s - 0.25);
  const cplx c2(1.0, 3 * s);
  const cplx c3(0.0, 1.0);
  return {c0, c1, c2, c3};
}

inline SurfaceModel crossing_sphere(int n = 3) {
  return sphere_curve(n, crossing_gamma(), "crossing");
}

inline constexpr double kCrossingLevels[2] = {0.3, -0.7};

/// {Im w = 0, Im z1 = 0}: Levi-flat, parametrized by (z1, z2) -> (Re z1, z2, Im z1).
inline SurfaceModel levi_flat_fixture() {
  Polynomial re(2, false), im(2, false);
  re.add({1, 0}, {0, 0}, 0, 0.5);
  re.add({0, 0}, {1, 0}, 0, 0.5);
  im.add({1, 0}, {0, 0}, 0, cplx(0.0, -0.5));
  im.add({0, 0}, {1, 0}, 0, cplx(0.0, 0.5));
  return SurfaceModel(3, Domain::Plane, {re, Polynomial::variable_z(2, false, 1), im}, "leviflat");
}

/// w = z1^2 + |z1|^2
inline SurfaceModel holomorphic_square() {
  Polynomial phi(2, false);
  phi.add({2, 0}, {0, 0}, 0, 1.0);
  phi.add({1, 0}, {1, 0}, 0, 1.0);
  return SurfaceModel::graph(3, phi, "zsq");
}

/// Boundary {(e^{it}, x e^{it})} of the disc graph z2 = x z1 in C^2.
/// Boundary of the branched graph {w^2 = (1 + x) z} over the unit disc.
inline SlicedCycle branched_cycle(double x, int count = 512) {
  SlicedCycle c;
  c.level = x;
  c.ordered_curve = true;
  const double r = std::sqrt(1.0 + x);
  for (int k = 0; k < count; ++k) {
    const double t = 2.0 * kPi * k / count;
    c.points.push_back((CVec(2) << std::polar(1.0, 2 * t), std::polar(r, t)).finished());
    c.edges.emplace_back(k, (k + 1) % count);
    c.dx.push_back(1.0);
  }
  return c;
}

inline SlicedCycle fam_cycle(double x, int count = 512) {
  SlicedCycle c;
  c.level = x;
  for (int k = 0; k < count; ++k) {
    const cplx e = std::polar(1.0, 2.0 * kPi * k / count);
    c.points.push_back((CVec(2) << e, x * e).finished());
    c.edges.emplace_back(k, (k + 1) % count);
    c.dx.push_back(1.0);
  }
  return c;
}

/// Grid on the sphere |z|^2 = radius^2 of C^2 lifted to C^3 by the fiber
/// function w(z); neighbours in the Hopf coordinates are joined by edges.
template <class Fiber>
SlicedCycle hopf_cycle(double level, double radius, Fiber w, int eta = 12, int xi = 24) {
  SlicedCycle c;
  c.level = level;
  auto id = [&](int i, int a, int b) { return (i * xi + a) * xi + b; };
  for (int i = 0; i < eta; ++i) {
    const double e = 0.5 * kPi * (i + 0.5) / eta;
    for (int a = 0; a < xi; ++a)
      for (int b = 0; b < xi; ++b) {
        CVec z(2);
        z << radius * std::cos(e) * std::polar(1.0, 2 * kPi * a / xi),
            radius * std::sin(e) * std::polar(1.0, 2 * kPi * b / xi);
        CVec p(3);
        p << z[0], z[1], w(z);
        c.points.push_back(p);
        c.dx.push_back(1.0);
        c.edges.emplace_back(id(i, a, b), id(i, (a + 1) % xi, b));
        c.edges.emplace_back(id(i, a, b), id(i, a, (b + 1) % xi));
        if (i + 1 < eta) c.edges.emplace_back(id(i, a, b), id(i + 1, a, b));
      }
  }
  return c;
}

/// Latitude orbit {|z|^2 = 1 - x^2, w = x} of SPH.
inline SlicedCycle latitude_cycle(double x, int eta = 12, int xi = 24) {
  return hopf_cycle(x, std::sqrt(1.0 - x * x), [x](const CVec&) { return cplx(x); }, eta, xi);
}

}  // namespace crflat::fixtures
