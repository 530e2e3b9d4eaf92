#include "crflat/fixtures.hpp"
#include "crflat/orbits.hpp"

#include <gtest/gtest.h>

using namespace crflat;

namespace {

OrbitOptions fast(int directions = 16) {
  OrbitOptions o;
  o.directions = directions;
  return o;
}

RVec sphere_param(const CVec& z, double x) {
  RVec u(2 * z.size() + 1);
  for (Eigen::Index k = 0; k < z.size(); ++k) {
    u[2 * k] = z[k].real();
    u[2 * k + 1] = z[k].imag();
  }
  u[u.size() - 1] = x;
  return u.normalized();
}

Pole pole_of(const SurfaceModel& s) {
  const auto cps = find_complex_points(s);
  EXPECT_FALSE(cps.empty());
  return classify_pole(s, cps.front());
}

}  // namespace

TEST(ProjectToG, UnitSphere) {
  const EllipsoidProjection pi(RMat::Identity(4, 4), RVec::Zero(4), 4);
  RVec u = RVec::Zero(4);
  u[0] = 0.5;
  const RVec g = project_to_G(pi, u);
  EXPECT_NEAR(g[0], 1.0, 1e-15);
  EXPECT_NEAR(g.tail(3).norm(), 0.0, 1e-15);
}

TEST(ProjectToG, WeightedEllipsoid) {
  // Q = |z1|^2 + 2|z2|^2
  RMat G = RMat::Identity(4, 4);
  G(2, 2) = G(3, 3) = 2.0;
  const EllipsoidProjection pi(G, RVec::Zero(4), 4);
  RVec u = RVec::Zero(4);
  u[2] = 0.5;
  const RVec g = pi(u);
  EXPECT_NEAR(g[2], 1.0 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(pi.level(g), 1.0, 1e-15);
}

TEST(ProjectToG, PoleRejected) {
  const EllipsoidProjection pi(RMat::Identity(4, 4), RVec::Zero(4), 4);
  try {
    pi(RVec::Zero(4));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::AtComplexPoint);
  }
}

TEST(ComplexPoints, QuadricHasOneAtOrigin) {
  const SurfaceModel s = fixtures::sq();
  const auto cps = find_complex_points(s);
  ASSERT_EQ(cps.size(), 1u);
  EXPECT_LT(cps[0].norm(), 1e-9);
  const Pole p = classify_pole(s, cps[0]);
  EXPECT_TRUE(p.elliptic_flat);
}

TEST(ComplexPoints, SphereHasTwoPoles) {
  const SurfaceModel s = fixtures::sph();
  const auto cps = find_complex_points(s);
  ASSERT_EQ(cps.size(), 2u);
  EXPECT_NEAR(cps[0][4], 1.0, 1e-9);
  EXPECT_NEAR(cps[1][4], -1.0, 1e-9);
  for (const auto& u : cps) EXPECT_TRUE(classify_pole(s, u).elliptic_flat);
}

TEST(TraceOrbit, QuadricLevelSetIsSphere) {
  const SurfaceModel s = fixtures::sq();
  const EllipsoidProjection pi(s, pole_of(s));
  CVec z(2);
  z << std::sqrt(0.5), 0.0;
  const Orbit o = trace_orbit(s, pi, s.param(z), fast());
  EXPECT_TRUE(o.closed);
  double drift = 0.0;
  for (const CVec& q : o.points) {
    drift = std::max(drift, std::abs(q.head(2).squaredNorm() - 0.5) / 0.5);
    EXPECT_NEAR(std::abs(q[2] - cplx(0.5, 0.0)), 0.0, 1e-4);
  }
  EXPECT_LT(drift, 1e-4);
  EXPECT_EQ(orbit_components(o), 1);
  EXPECT_EQ(orbit_euler_characteristic(o), 0);
}

TEST(TraceOrbit, SamplesProjectOntoG) {
  const SurfaceModel s = fixtures::sq();
  const EllipsoidProjection pi(s, pole_of(s));
  CVec z(2);
  z << 0.0, cplx(0.0, 0.5);
  const Orbit o = trace_orbit(s, pi, s.param(z), fast(8));
  for (const RVec& u : o.params) EXPECT_NEAR(pi.level(pi(u)), 1.0, 1e-9);
}

TEST(TraceOrbit, ClosureImprovesWithStep) {
  const SurfaceModel s = fixtures::sq();
  const EllipsoidProjection pi(s, pole_of(s));
  CVec z(2);
  z << std::sqrt(0.5), 0.0;
  OrbitOptions o1 = fast(8), o2 = fast(8);
  o2.rk_step = 0.5 * o1.rk_step;
  const double r1 = trace_orbit(s, pi, s.param(z), o1).closure_residual;
  const double r2 = trace_orbit(s, pi, s.param(z), o2).closure_residual;
  EXPECT_GT(r1 / r2, 8.0) << r1 << " " << r2;
}

TEST(TraceOrbit, PerturbedQuadricCloses) {
  const SurfaceModel s = fixtures::perturbed_quadric();
  const EllipsoidProjection pi(s, pole_of(s));
  CVec z(2);
  z << std::sqrt(0.3), 0.0;
  const Orbit o = trace_orbit(s, pi, s.param(z), fast());
  EXPECT_TRUE(o.closed);
  EXPECT_LT(o.closure_residual, 1e-3 * o.diameter);
}

TEST(TraceOrbit, SphereLatitude) {
  const SurfaceModel s = fixtures::sph();
  const EllipsoidProjection pi(s, pole_of(s));
  CVec z(2);
  z << std::sqrt(0.75), 0.0;
  const Orbit o = trace_orbit(s, pi, sphere_param(z, 0.5), fast());
  for (const CVec& q : o.points) {
    EXPECT_NEAR(q.head(2).squaredNorm(), 0.75, 1e-6);
    EXPECT_NEAR(q[2].real(), 0.5, 1e-6);
  }
}

TEST(TraceOrbit, PathIndependence) {
  const SurfaceModel s = fixtures::perturbed_quadric();
  const EllipsoidProjection pi(s, pole_of(s));
  CVec z(2);
  z << cplx(0.3, 0.2), cplx(-0.1, 0.25);
  const RVec u = s.param(z);
  const Orbit o = trace_orbit(s, pi, u, fast());
  // two different routes from g0 to the same target
  const OrbitLifter lifter(s, pi, fast());
  const RVec g0 = pi(u);
  const RMat B = pi.tangent_basis(g0);
  const RVec d1 = B.col(0), d2 = B.col(1);
  const RVec mid1 = lifter.lift_arc(u, g0, d1, 0.0, 1.0, 100);
  const RVec mid2 = lifter.lift_arc(u, g0, d2, 0.0, 1.0, 100);
  const RVec gA = std::cos(1.0) * g0 + std::sin(1.0) * d1;
  const RVec gB = std::cos(1.0) * g0 + std::sin(1.0) * d2;
  // close the geodesic triangle g0 -> gA -> gB from both ends
  auto arc_dir = [&](const RVec& from, const RVec& to) {
    RVec d = to - pi.gdot(from, to) * from;
    return RVec(d / pi.gnorm(d));
  };
  const double ang = std::acos(std::clamp(pi.gdot(gA, gB), -1.0, 1.0));
  const RVec endA = lifter.lift_arc(mid1, gA, arc_dir(gA, gB), 0.0, ang, 100);
  EXPECT_LT((s.point(endA) - s.point(mid2)).norm(), 1e-3 * o.diameter);
}

TEST(Smoothing, FlatAtBothEnds) {
  EXPECT_EQ(smooth_level(0.0), 0.0);
  EXPECT_EQ(smooth_level(1.0), 1.0);
  EXPECT_NEAR(smooth_level(0.5), 0.5, 1e-15);
  // strictly increasing while distinguishable in double precision
  double prev = 0.0;
  for (int k = 5; k <= 95; ++k) {
    const double v = smooth_level(k / 100.0);
    EXPECT_GT(v, prev);
    prev = v;
  }
  const double h = 1e-2;
  EXPECT_LT(smooth_level(h) / h, 1e-3);
  EXPECT_LT((1.0 - smooth_level(1.0 - h)) / h, 1e-3);
}

TEST(BuildNu, QuadricLevelEqualsTransversalParameter) {
  const SurfaceModel s = fixtures::sq();
  AtlasOptions opt;
  opt.levels = 3;
  opt.orbit = fast(8);
  const FoliationAtlas a = build_nu(s, opt);
  ASSERT_EQ(a.orbits.size(), 3u);
  for (const Orbit& o : a.orbits) {
    // nu = |z|^2 = w along the transversal sqrt(t) e1
    EXPECT_NEAR(o.nu, o.points[0][2].real(), 1e-9);
    EXPECT_NEAR(a.nu(o.params[o.index(1, 7)]), o.nu, 1e-6);
  }
}

TEST(BuildNu, SphereMonotoneAndDisjoint) {
  const SurfaceModel s = fixtures::sph();
  AtlasOptions opt;
  opt.levels = 5;
  opt.orbit = fast(8);
  const FoliationAtlas a = build_nu(s, opt);
  ASSERT_EQ(a.orbits.size(), 5u);
  EXPECT_TRUE(a.exceptional.empty());
  for (size_t i = 1; i < a.orbits.size(); ++i) EXPECT_GT(a.orbits[i].nu, a.orbits[i - 1].nu);
  // latitude of each orbit is x = cos(pi nu)
  for (const Orbit& o : a.orbits)
    for (const CVec& q : o.points) EXPECT_NEAR(q[2].real(), std::cos(kPi * o.nu), 1e-6);
  auto gap = [&](const Orbit& x, const Orbit& y) {
    double d = 1e300;
    for (const CVec& p : x.points)
      for (const CVec& q : y.points) d = std::min(d, (p - q).norm());
    return d;
  };
  EXPECT_GT(gap(a.orbits[0], a.orbits[1]), 0.0);
  EXPECT_GT(gap(a.orbits[0], a.orbits[2]), gap(a.orbits[0], a.orbits[1]));
  // level function on an off-transversal point of a traced orbit
  const Orbit& o = a.orbits[2];
  EXPECT_NEAR(a.nu(o.params[o.index(3, 11)]), o.nu, 1e-6);
}

TEST(Census, SphereHasTwoPolesAndSphericalOrbits) {
  CensusOptions opt;
  opt.atlas.levels = 4;
  opt.atlas.orbit = fast(8);
  opt.cr_samples = 16;
  const CensusReport r = census(fixtures::sph(), opt);
  EXPECT_TRUE(r.ok()) << r.violation;
  EXPECT_EQ(r.complex_points.size(), 2u);
  EXPECT_EQ(r.orbits_closed, 4);
  EXPECT_EQ(r.orbits_connected, 4);
  for (int e : r.euler) EXPECT_EQ(e, 0);
}

TEST(Census, NonFlatQuadricViolatesFlatness) {
  const CensusReport r = census(fixtures::snf());
  EXPECT_EQ(r.violation, "flatness");
  try {
    orbit_census(fixtures::snf());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::HypothesisViolation);
  }
}

TEST(Census, LeviFlatFixtureViolatesThree) {
  EXPECT_EQ(census(fixtures::levi_flat_fixture()).violation, "(iii)");
}

TEST(Parallel, ThreadCountDoesNotChangeResults) {
  const SurfaceModel s = fixtures::perturbed_quadric();
  const EllipsoidProjection pi(s, pole_of(s));
  CVec z(2);
  z << std::sqrt(0.2), 0.0;
  OrbitOptions a = fast(8), b = fast(8);
  b.threads = 3;
  const Orbit oa = trace_orbit(s, pi, s.param(z), a);
  const Orbit ob = trace_orbit(s, pi, s.param(z), b);
  ASSERT_EQ(oa.points.size(), ob.points.size());
  for (size_t i = 0; i < oa.points.size(); ++i) EXPECT_EQ(oa.points[i], ob.points[i]);
}
