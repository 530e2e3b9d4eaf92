#include "crflat/filler.hpp"
#include "crflat/fixtures.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace crflat;

namespace {

SlicedCycle quadric_cycle(double c) {
  return fixtures::hopf_cycle(c, std::sqrt(c), [c](const CVec&) { return cplx(c); });
}

CVec base2(cplx a, cplx b) { return (CVec(2) << a, b).finished(); }

}  // namespace

TEST(ConditionH, SingleOrbitPasses) {
  const HReport r = check_condition_H(quadric_cycle(0.5));
  EXPECT_TRUE(r.ok());
  EXPECT_EQ(r.components, 1);
}

TEST(ConditionH, TwoCirclesFailConnectivity) {
  SlicedCycle c = fixtures::fam_cycle(0.5, 64);
  const SlicedCycle d = fixtures::fam_cycle(0.5, 64);
  for (int k = 0; k < 64; ++k) {
    c.points.push_back(d.points[k] * 3.0);
    c.edges.emplace_back(64 + k, 64 + (k + 1) % 64);
    c.dx.push_back(1.0);
  }
  const HReport r = check_condition_H(c);
  EXPECT_EQ(r.failure, "connectivity");
  EXPECT_EQ(r.components, 2);
}

TEST(ConditionH, FoldedCycleFailsTransversality) {
  SlicedCycle c = fixtures::fam_cycle(0.5, 64);
  c.dx[17] = 0.0;
  EXPECT_EQ(check_condition_H(c).failure, "transversality");
}

TEST(ConditionH, EmptyCycle) { EXPECT_EQ(check_condition_H(SlicedCycle{}).failure, "empty"); }

TEST(Moments, DiscGraphClosedForm) {
  // boundary (e^{it}, x e^{it}): C_m(zeta) = (x zeta)^m inside the disc
  const FramedCycle fc(fixtures::fam_cycle(0.5), ProjectionFrame::identity(2));
  const auto C = fiber_power_sums(fc, (CVec(1) << 0.3).finished(), 2);
  EXPECT_NEAR(std::abs(C[0] - 1.0), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(C[1] - 0.15), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(C[2] - 0.0225), 0.0, 1e-12);
}

TEST(Moments, OutsideBaseGivesZero) {
  const FramedCycle fc(fixtures::fam_cycle(0.5), ProjectionFrame::identity(2));
  for (cplx z : {cplx(1.5, 0.2), cplx(-2.0, 0.0), cplx(0.0, 1.3)})
    for (const cplx& c : fiber_power_sums(fc, (CVec(1) << z).finished(), 4))
      EXPECT_LT(std::abs(c), 1e-10);
}

TEST(Moments, SphereLatitudeSlice) {
  const FramedCycle fc(fixtures::latitude_cycle(0.5), ProjectionFrame::identity(3));
  const auto C = fiber_power_sums(fc, base2(0.3, 0.4), 2);
  EXPECT_NEAR(std::abs(C[0] - 1.0), 0.0, 1e-10);
  EXPECT_NEAR(std::abs(C[1] - 0.5), 0.0, 1e-10);
  // a complex line that misses the cycle
  for (const cplx& c : fiber_power_sums(fc, base2(0.9, 0.0), 2)) EXPECT_EQ(c, cplx(0.0));
}

TEST(Moments, BaseTooClose) {
  const FramedCycle fc(fixtures::fam_cycle(0.5), ProjectionFrame::identity(2));
  try {
    fiber_power_sums(fc, (CVec(1) << 0.9999).finished(), 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BaseTooClose);
  }
}

TEST(Moments, QuadratureConverges) {
  const FramedCycle fc(fixtures::fam_cycle(0.5), ProjectionFrame::identity(2));
  FillOptions opt;
  opt.close_factor = 0.0;
  const cplx zeta(0.6, 0.2);
  double prev = 1e300;
  for (int nodes : {16, 32, 64}) {
    opt.nodes = nodes;
    const auto C = fiber_power_sums(fc, (CVec(1) << zeta).finished(), 2, opt);
    const double err = std::abs(C[2] - std::pow(0.5 * zeta, 2));
    if (prev > 1e-13) {
      EXPECT_LT(err, prev / 4) << nodes;
    }
    prev = err;
  }
}

TEST(Newton, QuadraticByHand) {
  const auto c = newton_reconstruct({5.0, 13.0}, 2);
  ASSERT_EQ(c.size(), 3u);
  EXPECT_NEAR(std::abs(c[0] - 6.0), 0.0, 1e-14);
  EXPECT_NEAR(std::abs(c[1] + 5.0), 0.0, 1e-14);
  EXPECT_EQ(c[2], cplx(1.0));
  const auto r = polynomial_roots(c);
  EXPECT_NEAR(std::abs(r[0] - 2.0), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(r[1] - 3.0), 0.0, 1e-12);
}

TEST(Newton, EmptyAndSingleSheet) {
  EXPECT_EQ(newton_reconstruct({}, 0), std::vector<cplx>{1.0});
  const cplx w0(0.3, -0.7);
  const auto c = newton_reconstruct({w0}, 1);
  EXPECT_EQ(c[0], -w0);
  EXPECT_EQ(c[1], cplx(1.0));
}

TEST(Newton, NegativeSheetCount) {
  try {
    newton_reconstruct({1.0}, -1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NegativeSheetCount);
  }
  // moments of the inverse case: reconstructed with flipped sign
  const FiberData f = fiber_from_moments({-1.0, -0.25, -0.0625, -0.015625}, 2);
  EXPECT_EQ(f.c0, -1);
  EXPECT_EQ(f.multiplicity, -1);
  EXPECT_NEAR(std::abs(f.roots[0] - 0.25), 0.0, 1e-14);
  EXPECT_LT(f.consistency, 1e-14);
}

TEST(Newton, RoundTrip) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int k = 1 + trial % 6;
    std::vector<cplx> roots(k);
    for (auto& r : roots) r = cplx(U(rng), U(rng));
    // coefficients of prod (z - r)
    std::vector<cplx> coeffs{1.0};
    for (const cplx& r : roots) {
      std::vector<cplx> next(coeffs.size() + 1, 0.0);
      for (size_t i = 0; i < coeffs.size(); ++i) {
        next[i + 1] += coeffs[i];
        next[i] -= r * coeffs[i];
      }
      coeffs = next;
    }
    const auto back = newton_reconstruct(power_sums_of(roots, k), k);
    for (int i = 0; i <= k; ++i) EXPECT_LT(std::abs(back[i] - coeffs[i]), 1e-8);
    const auto p = power_sums_of(polynomial_roots(back), k);
    const auto p0 = power_sums_of(roots, k);
    for (int i = 0; i < k; ++i) EXPECT_LT(std::abs(p[i] - p0[i]), 1e-8);
  }
}

TEST(Newton, MultipleRootDetected) {
  const auto c = newton_reconstruct(power_sums_of({0.5, 0.5}, 2), 2);
  EXPECT_TRUE(has_multiple_root(polynomial_roots(c), c));
  const auto d = newton_reconstruct(power_sums_of({0.5, -0.5}, 2), 2);
  EXPECT_FALSE(has_multiple_root(polynomial_roots(d), d));
}

TEST(FillSlice, DiscGraph) {
  const LeafChain leaf = fill_slice(fixtures::fam_cycle(0.5), ProjectionFrame::identity(2));
  EXPECT_EQ(leaf.max_sheets, 1);
  double err = 0.0;
  int inside = 0, outside = 0;
  for (const LeafCell& c : leaf.cells) {
    if (c.boundary) continue;
    const bool in = std::abs(c.base[0]) < 1.0;
    EXPECT_EQ(c.fiber.c0, in ? 1 : 0);
    if (!in) {
      ++outside;
      continue;
    }
    ++inside;
    err = std::max(err, std::abs(c.fiber.roots[0] - 0.5 * c.base[0]));
  }
  EXPECT_GT(inside, 0);
  EXPECT_GT(outside, 0);
  EXPECT_LT(err, 1e-6);
  ASSERT_TRUE(leaf.graph.has_value());
}

TEST(FillSlice, SphereLatitudeLeaf) {
  const LeafChain leaf = fill_slice(fixtures::latitude_cycle(0.5), ProjectionFrame::identity(3));
  EXPECT_EQ(leaf.max_sheets, 1);
  EXPECT_LT(leaf.max_c0_error, 1e-6);
  for (const LeafCell& c : leaf.cells) {
    if (c.boundary) continue;
    const bool in = c.base.squaredNorm() < 0.75;
    EXPECT_EQ(c.fiber.c0, in ? 1 : 0);
    if (in) {
      EXPECT_LT(std::abs(c.fiber.roots[0] - 0.5), 1e-6);
    }
  }
}

TEST(FillSlice, QuadricOrbitLeaf) {
  const LeafChain leaf = fill_slice(quadric_cycle(0.3), ProjectionFrame::identity(3));
  for (const CVec& p : leaf.sample_points()) {
    EXPECT_LT(std::abs(p[2] - 0.3), 1e-8);
    EXPECT_LT(p.head(2).squaredNorm(), 0.3);
  }
}

TEST(FillSlice, MaximumPrinciple) {
  const SlicedCycle c = fixtures::fam_cycle(0.5);
  const LeafChain leaf = fill_slice(c, ProjectionFrame::identity(2));
  // fiber samples lie on |w| = 0.5; inscribed polygon bound
  const double inscribed = 0.5 * std::cos(kPi / 512);
  for (const CVec& p : leaf.sample_points()) EXPECT_LT(std::abs(p[1]), inscribed + 1e-6);
}

TEST(FillSlice, FibersAreHolomorphic) {
  const SlicedCycle c = fixtures::hopf_cycle(0.0, 0.8, [](const CVec& z) { return 0.3 * z[0] * z[0] * z[1] + 0.2 * z[1]; });
  const FramedCycle fc(c, ProjectionFrame::identity(3));
  const double h = 1e-3;
  for (cplx z1 : {cplx(0.1, 0.2), cplx(-0.3, 0.1)})
    for (cplx z2 : {cplx(0.2, -0.1), cplx(0.0, 0.3)}) {
      auto f = [&](cplx a, cplx b) { return fiber_at(fc, base2(a, b), 2).roots[0]; };
      const cplx dx = (f(z1, z2 + h) - f(z1, z2 - h)) / (2 * h);
      const cplx dy = (f(z1, z2 + cplx(0, h)) - f(z1, z2 - cplx(0, h))) / (2 * h);
      // dbar f = (dx + i dy) / 2
      EXPECT_LT(std::abs(0.5 * (dx + cplx(0, 1) * dy)), 1e-6);
    }
}

TEST(GraphExtension, QuadricOrbitIsConstant) {
  const LeafChain leaf = graph_extension_fill(quadric_cycle(0.5), ProjectionFrame::identity(3));
  EXPECT_LT(leaf.graph_residual, 1e-12);
  for (const LeafCell& c : leaf.cells)
    if (c.fiber.c0 == 1) {
      EXPECT_LT(std::abs(c.fiber.roots[0] - 0.5), 1e-12);
    }
}

TEST(GraphExtension, DiscGraphCoefficients) {
  const LeafChain leaf = graph_extension_fill(fixtures::fam_cycle(0.5), ProjectionFrame::identity(2));
  const HolomorphicPolynomial& g = *leaf.graph;
  for (int k = 0; k < g.size(); ++k) {
    const cplx expect = g.exponents()[k][0] == 1 ? cplx(0.5) : cplx(0.0);
    EXPECT_LT(std::abs(g.coeffs()[k] - expect), 1e-8);
  }
}

TEST(GraphExtension, AgreesWithFillSlice) {
  const SlicedCycle c = fixtures::latitude_cycle(-0.4);
  const LeafChain a = graph_extension_fill(c, ProjectionFrame::identity(3));
  const LeafChain b = fill_slice(c, ProjectionFrame::identity(3));
  for (const LeafCell& cell : b.cells)
    if (!cell.boundary && cell.fiber.c0 == 1) {
      EXPECT_LT(std::abs((*a.graph)(cell.base) - cell.fiber.roots[0]), 1e-6);
    }
}

TEST(GraphExtension, NonInjectiveProjection) {
  SlicedCycle c = fixtures::fam_cycle(0.5, 64);
  const int k = int(c.points.size());
  for (int i = 0; i < k; ++i) {
    CVec p = c.points[i];
    p[1] += 1.0;
    c.points.push_back(p);
  }
  try {
    graph_extension_fill(c, ProjectionFrame::identity(2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonGraphOrbit);
  }
}

TEST(GraphExtension, PoorFit) {
  // antiholomorphic boundary values
  SlicedCycle c = fixtures::fam_cycle(0.5, 128);
  for (CVec& p : c.points) p[1] = std::conj(p[0]);
  try {
    graph_extension_fill(c, ProjectionFrame::identity(2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::PoorFit);
  }
}

TEST(Stokes, SphereSlice) {
  const FramedCycle fc(fixtures::latitude_cycle(0.5), ProjectionFrame::identity(3));
  const LeafChain leaf = fill_slice(fc);
  const StokesReport r = verify_boundary(leaf, fc);
  EXPECT_EQ(r.forms, 504);
  EXPECT_GE(r.mesh_points, 10000);
  EXPECT_LT(r.residual, 1e-3);
}

TEST(Stokes, ShiftedLeafDetected) {
  const FramedCycle fc(fixtures::latitude_cycle(0.5), ProjectionFrame::identity(3));
  LeafChain leaf = fill_slice(fc);
  leaf.graph->coeffs().setZero();
  leaf.graph->coeffs()[0] = 0.6;
  EXPECT_GT(verify_boundary(leaf, fc).residual, 0.05);
}

TEST(Stokes, DiscGraph) {
  const FramedCycle fc(fixtures::fam_cycle(0.25), ProjectionFrame::identity(2));
  const StokesReport r = verify_boundary(fill_slice(fc), fc);
  EXPECT_LT(r.residual, 1e-8);
}

TEST(Stokes, CoarseMeshRejected) {
  // a tilted graph leaf needs more than a handful of nodes
  const SlicedCycle c = fixtures::hopf_cycle(0.0, 0.8, [](const CVec& z) { return 0.3 * z[0] * z[0] * z[1]; });
  const FramedCycle fc(c, ProjectionFrame::identity(3));
  const LeafChain leaf = graph_extension_fill(c, ProjectionFrame::identity(3));
  StokesOptions opt;
  opt.eta_nodes = 2;
  opt.xi_nodes = 4;
  opt.rho_nodes = 2;
  try {
    verify_boundary(leaf, fc, opt);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MeshTooCoarse);
  }
}

TEST(ProjectionInvariance, RotatedBase) {
  CMat R(2, 2);
  const double a = 0.7;
  R << std::cos(a), cplx(0, std::sin(a)), cplx(0, std::sin(a)), std::cos(a);
  const auto r = projection_invariance_check(fixtures::latitude_cycle(0.5), ProjectionFrame::identity(3),
                                             ProjectionFrame::rotated_base(R));
  EXPECT_GT(r.compared, 0);
  EXPECT_LT(r.discrepancy, 1e-6);
}

TEST(ProjectionInvariance, SwappedRoles) {
  CMat U(2, 2);
  U << 0, 1, 1, 0;
  const auto r = projection_invariance_check(fixtures::fam_cycle(0.5), ProjectionFrame::identity(2),
                                             ProjectionFrame{U});
  EXPECT_LT(r.discrepancy, 1e-6);
}

TEST(ProjectionInvariance, IdenticalFrames) {
  const auto r = projection_invariance_check(fixtures::fam_cycle(0.5), ProjectionFrame::identity(2),
                                             ProjectionFrame::identity(2));
  EXPECT_LT(r.discrepancy, 1e-12);
}
