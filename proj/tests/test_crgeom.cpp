#include "crflat/crgeom.hpp"
#include "crflat/fixtures.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace crflat;

namespace {

RVec zparam(const SurfaceModel& s, std::initializer_list<cplx> z) {
  CVec v(z.size());
  int k = 0;
  for (cplx c : z) v[k++] = c;
  return s.param(v);
}

RVec sphere_param(std::initializer_list<cplx> z, double x) {
  RVec u(2 * z.size() + 1);
  int k = 0;
  for (cplx c : z) {
    u[k++] = c.real();
    u[k++] = c.imag();
  }
  u[k] = x;
  return u.normalized();
}

}  // namespace

TEST(ClassifyPoint, QuadricGenericPointIsCR) {
  const SurfaceModel s = fixtures::sq();
  const PointClass pc = classify_point(s, zparam(s, {0.5, 0.0}));
  EXPECT_EQ(pc.kind, PointKind::CR);
  EXPECT_EQ(pc.cr_dim, 1);
}

TEST(ClassifyPoint, QuadricOriginIsComplex) {
  const SurfaceModel s = fixtures::sq();
  const PointClass pc = classify_point(s, zparam(s, {0.0, 0.0}));
  EXPECT_EQ(pc.kind, PointKind::Complex);
  EXPECT_EQ(pc.cr_dim, 2);
}

TEST(ClassifyPoint, SpherePolesComplexEquatorCR) {
  const SurfaceModel s = fixtures::sph();
  EXPECT_EQ(classify_point(s, sphere_param({0.0, 0.0}, 1.0)).kind, PointKind::Complex);
  EXPECT_EQ(classify_point(s, sphere_param({0.0, 0.0}, -1.0)).kind, PointKind::Complex);
  const PointClass eq = classify_point(s, sphere_param({1.0, 0.0}, 0.0));
  EXPECT_EQ(eq.kind, PointKind::CR);
  EXPECT_EQ(eq.cr_dim, 1);
}

TEST(TangentFrame, ComplexTangentIsJInvariant) {
  const SurfaceModel s = fixtures::perturbed_quadric();
  const CRFrame f = tangent_frame(s, zparam(s, {cplx(0.3, 0.1), cplx(-0.2, 0.25)}));
  ASSERT_EQ(f.cr_dim, 1);
  const RMat J = complex_structure(3);
  const RMat P = projector(f.H);
  for (Eigen::Index k = 0; k < f.H.cols(); ++k) {
    const RVec jv = J * f.H.col(k);
    EXPECT_LT((jv - P * jv).norm(), 1e-10);
  }
  EXPECT_LT((f.H - projector(f.T) * f.H).norm(), 1e-10);
}

TEST(TangentFrame, QuadricComplexTangentByHand) {
  // At (0.5, 0): dw = 0.5 dz1 + 0.5 dzbar1, so H = {dz1 = 0} = span_C (0, 1, 0).
  const SurfaceModel s = fixtures::sq();
  const CRFrame f = tangent_frame(s, zparam(s, {0.5, 0.0}));
  RMat e(6, 2);
  e.setZero();
  e(2, 0) = 1.0;
  e(3, 1) = 1.0;
  EXPECT_LT(subspace_distance(f.H, e), 1e-10);
}

TEST(TangentFrame, ComplexPointHasFullTangent) {
  const SurfaceModel s = fixtures::sph();
  const CRFrame f = tangent_frame(s, sphere_param({0.0, 0.0}, 1.0));
  EXPECT_TRUE(f.complex_point);
  EXPECT_EQ(f.cr_dim, 2);
}

TEST(TangentFrame, RealGraphComplexTangentInsideRealHyperplane) {
  const SurfaceModel s = fixtures::levi_flat_fixture();
  const CRFrame f = tangent_frame(s, zparam(s, {cplx(0.2, 0.3), cplx(0.1, -0.4)}));
  // Im w is the last real coordinate
  for (Eigen::Index k = 0; k < f.H.cols(); ++k) EXPECT_NEAR(f.H(5, k), 0.0, 1e-12);
}

TEST(LeviForm, QuadricPositiveDefinite) {
  const SurfaceModel s = fixtures::sq();
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(-0.7, 0.7);
  for (int trial = 0; trial < 20; ++trial) {
    const RVec u = zparam(s, {cplx(U(rng), U(rng)), cplx(U(rng), U(rng))});
    const LeviData L = levi_form(s, u);
    EXPECT_TRUE(L.definite);
  }
}

TEST(LeviForm, ScalesInverselyAlongRays) {
  const SurfaceModel s = fixtures::sq();
  const RVec u = zparam(s, {cplx(0.4, 0.2), cplx(-0.3, 0.5)});
  const double base = levi_form(s, u).norm;
  for (double t : {0.5, 0.1, 0.01}) {
    const double lt = levi_form(s, RVec(t * u)).norm;
    EXPECT_NEAR(lt * t / base, 1.0, 1e-6) << t;
  }
}

TEST(LeviForm, RealPartOfHolomorphicSquareIsDegenerate) {
  CMat a = CMat::Zero(2, 2), c = CMat::Zero(2, 2);
  a(0, 0) = 0.5;
  c(0, 0) = 0.5;
  const SurfaceModel s = fixtures::quadric({a, CMat::Zero(2, 2), c});
  const RVec u = zparam(s, {cplx(0.3, 0.2), cplx(0.1, 0.4)});
  const LeviData L = levi_form(s, u);
  EXPECT_FALSE(L.definite);
}

TEST(LeviForm, ComplexPointRejected) {
  const SurfaceModel s = fixtures::sq();
  try {
    levi_form(s, zparam(s, {0.0, 0.0}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotCRPoint);
  }
}

TEST(OrbitDistribution, QuadricTangentToSphere) {
  const SurfaceModel s = fixtures::sq();
  const CRFrame f = orbit_distribution(s, zparam(s, {0.5, 0.0}));
  ASSERT_EQ(f.E.cols(), 3);
  // orbit {|z|^2 = 0.25, w = 0.25}: normals d|z|^2 = (1,0,0,0,0,0) and dw directions
  RMat normals = RMat::Zero(6, 3);
  normals(0, 0) = 1.0;
  normals(4, 1) = 1.0;
  normals(5, 2) = 1.0;
  EXPECT_LT((normals.transpose() * f.E).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LT((f.E - projector(f.T) * f.E).norm(), 1e-10);
}

TEST(OrbitDistribution, NonFlatQuadricIsMinimal) {
  const SurfaceModel s = fixtures::snf();
  try {
    orbit_distribution(s, zparam(s, {1.0, 1.0}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MinimalityDetected);
  }
  EXPECT_TRUE(minimality_test(s, zparam(s, {1.0, 1.0})));
}

TEST(OrbitDistribution, LeviFlatFixtureHasZeroLeviForm) {
  const SurfaceModel s = fixtures::levi_flat_fixture();
  const RVec u = zparam(s, {cplx(0.2, 0.3), cplx(0.1, -0.4)});
  try {
    orbit_distribution(s, u);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ZeroLeviForm);
  }
  EXPECT_FALSE(minimality_test(s, u));
  EXPECT_EQ(tangent_frame(s, u).H.cols(), 2);  // 2n - 4
}

TEST(OrbitDistribution, RealGraphNeverMinimal) {
  const SurfaceModel s = fixtures::perturbed_quadric();
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(-0.6, 0.6);
  for (int trial = 0; trial < 30; ++trial) {
    const RVec u = zparam(s, {cplx(U(rng), U(rng)), cplx(U(rng), U(rng))});
    EXPECT_FALSE(minimality_test(s, u));
  }
}

TEST(OrbitDistribution, ContainsComplexTangent) {
  const SurfaceModel s = fixtures::sph();
  const RVec u = sphere_param({cplx(0.3, 0.1), cplx(0.2, -0.4)}, 0.3);
  const CRFrame f = orbit_distribution(s, u);
  EXPECT_LT((f.H - projector(f.E) * f.H).norm(), 1e-10);
}

TEST(OrbitDistribution, PerturbedQuadricApproachesModel) {
  // E at (z, phi(z)) compared to E0 at (z, Q(z)); the distance shrinks with |z|
  const SurfaceModel s = fixtures::perturbed_quadric();
  const SurfaceModel s0 = fixtures::sq();
  const CVec dir = (CVec(2) << cplx(0.6, 0.3), cplx(-0.2, 0.7)).finished().normalized();
  double prev = 1e9;
  for (double r : {1e-1, 1e-2, 1e-3}) {
    const RVec u = s.param(r * dir);
    const double d = subspace_distance(orbit_distribution(s, u).E, orbit_distribution(s0, u).E);
    EXPECT_LT(d, prev);
    prev = d;
  }
}
