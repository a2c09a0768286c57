#include "spas/lyapunov.hpp"

#include <cmath>

#include <gtest/gtest.h>

#include "spas/error.hpp"
#include "spas/examples.hpp"
#include "test_util.hpp"

namespace spas {
namespace {

using test::vec;

LyapunovFn ellipse() {
  return LyapunovFn::weighted_quadratic(vec({1, 4}), vec({0, 0}));
}

TEST(DeltaV, HalvingMapOnSquaredNorm) {
  const ParamSystem sys(1, 1, [](const Point& x, const GainVector&) -> Point {
    return 0.5 * x;
  }, ConstraintSet::all_space(1));
  const auto V = LyapunovFn::weighted_quadratic(vec({1}), vec({0}));
  EXPECT_DOUBLE_EQ(delta_v(sys, V, vec({1}), GainVector::scalar(0)), -0.75);
}

TEST(DeltaV, BiasedMethodStep) {
  const auto inst = examples::ex1_reference_instance();
  const auto built = examples::ex1_build(inst, SamplingPlan{});
  // ½(0.8² − 1²).
  EXPECT_NEAR(delta_v(built.system, built.lyapunov, vec({2, 0}), GainVector::scalar(0.1)),
              -0.18, 1e-12);
}

TEST(LyapunovFn, ScaledDistGradient) {
  const auto A = TargetSet::ball(vec({0, 0}), 1.0);
  const auto V = LyapunovFn::scaled_dist_squared(A, 0.5);
  EXPECT_DOUBLE_EQ(V(vec({3, 0})), 2.0);
  EXPECT_TRUE(V.gradient(vec({3, 0})).isApprox(vec({2, 0})));
  EXPECT_EQ(V(vec({0.2, 0.3})), 0.0);
}

TEST(AuditPositiveDefinite, PassesForDistSquared) {
  const auto A = TargetSet::ball(vec({0, 0}), 1.0);
  const auto rep = audit_positive_definite(LyapunovFn::scaled_dist_squared(A, 1.0), A,
                                           3.0, SamplingPlan{});
  EXPECT_TRUE(rep.pass);
  EXPECT_GT(rep.samples_used, 0u);
}

TEST(AuditPositiveDefinite, FailsWhenVVanishesOffTarget) {
  const auto A = TargetSet::singleton(vec({0, 0}));
  LyapunovFn V;
  // Zero on the half-plane x1 <= 0.
  V.value = [](const Point& x) { return x[0] > 0 ? x[0] * x[0] : 0.0; };
  const auto rep = audit_positive_definite(V, A, 2.0, SamplingPlan{});
  EXPECT_FALSE(rep.pass);
  EXPECT_LE(rep.worst_margin, 0.0);
  EXPECT_LE(rep.witness[0], 0.0);
}

TEST(AuditPositiveDefinite, FailsWhenVNonzeroOnTarget) {
  const auto A = TargetSet::singleton(vec({0, 0}));
  LyapunovFn V;
  V.value = [](const Point& x) { return 1.0 + x.squaredNorm(); };
  EXPECT_FALSE(audit_positive_definite(V, A, 2.0, SamplingPlan{}).pass);
}

TEST(AuditRadiallyUnbounded, QuadraticGrows) {
  const auto A = TargetSet::singleton(vec({0, 0}));
  const auto rep = audit_radially_unbounded(ellipse(), A, {1, 2, 4, 8}, SamplingPlan{});
  EXPECT_TRUE(rep.pass);
  ASSERT_EQ(rep.shell_minima.size(), 4u);
  EXPECT_NEAR(rep.shell_minima[3], 64.0, 1e-6);
}

TEST(AuditRadiallyUnbounded, SaturatingFunctionFails) {
  const auto A = TargetSet::singleton(vec({0, 0}));
  LyapunovFn V;
  V.value = [](const Point& x) {
    const double d2 = x.squaredNorm();
    return d2 / (1 + d2);
  };
  EXPECT_FALSE(audit_radially_unbounded(V, A, {1, 2, 4, 8}, SamplingPlan{}).pass);
}

TEST(AuditRadiallyUnbounded, NeedsTwoIncreasingRadii) {
  const auto A = TargetSet::singleton(vec({0, 0}));
  EXPECT_THROW(audit_radially_unbounded(ellipse(), A, {1}, SamplingPlan{}),
               PreconditionError);
  EXPECT_THROW(audit_radially_unbounded(ellipse(), A, {2, 1}, SamplingPlan{}),
               PreconditionError);
}

// Closed forms for ξ1² + 4ξ2²: on ‖ξ‖ = 1 the range is [1, 4]; the set
// {V <= 4} is the ellipse with semi-axes 2 and 1.
TEST(Extremizers, EllipseClosedForms) {
  const auto A = TargetSet::singleton(vec({0, 0}));
  const SamplingPlan plan;
  EXPECT_NEAR(max_V_on_shell(ellipse(), A, 1.0, plan).level, 4.0, 1e-3);
  EXPECT_NEAR(min_V_on_shell(ellipse(), A, 1.0, plan).level, 1.0, 1e-3);
  EXPECT_NEAR(max_dist_on_levelset(ellipse(), A, 4.0, plan).radius, 2.0, 1e-3);
  EXPECT_NEAR(min_dist_on_levelset(ellipse(), A, 4.0, plan).radius, 1.0, 1e-3);
}

TEST(Extremizers, HalfDistSquaredAroundBall) {
  const auto A = TargetSet::ball(vec({0, 0}), 1.0);
  const auto V = LyapunovFn::scaled_dist_squared(A, 0.5);
  const SamplingPlan plan;
  EXPECT_NEAR(max_V_on_shell(V, A, 2.0, plan).level, 2.0, 1e-9);
  EXPECT_NEAR(min_V_on_shell(V, A, 2.0, plan).level, 2.0, 1e-9);
  EXPECT_NEAR(max_dist_on_levelset(V, A, 2.0, plan).radius, 2.0, 1e-6);
  EXPECT_NEAR(min_dist_on_levelset(V, A, 2.0, plan).radius, 2.0, 1e-6);
}

TEST(Extremizers, ScaledDistIsExactInHigherDimension) {
  const auto A = TargetSet::point_cloud({vec({0, 0, 0}), vec({5, 0, 0})});
  SamplingPlan plan;
  plan.directions_per_shell = 64;
  for (const double c : {0.5, 2.0}) {
    const auto V = LyapunovFn::scaled_dist_squared(A, c);
    for (const double r : {0.5, 1.5}) {
      EXPECT_NEAR(max_V_on_shell(V, A, r, plan).level, c * r * r, 1e-6);
      EXPECT_NEAR(min_V_on_shell(V, A, r, plan).level, c * r * r, 1e-6);
      EXPECT_NEAR(max_dist_on_levelset(V, A, c * r * r, plan).radius, r, 1e-6);
      EXPECT_NEAR(min_dist_on_levelset(V, A, c * r * r, plan).radius, r, 1e-6);
    }
  }
}

// B̄_r ⊆ {V <= max_shell(r)} and {V <= min_shell(r)} ⊆ B̄_r.
TEST(Extremizers, DualitySandwich) {
  const auto A = TargetSet::singleton(vec({0, 0}));
  LyapunovFn V;
  V.value = [](const Point& x) {
    return x[0] * x[0] + 3 * x[1] * x[1] + x[0] * x[1] + std::pow(x[0], 4);
  };
  const SamplingPlan plan;
  for (const double r : {0.3, 1.0, 2.5}) {
    const double hi = max_V_on_shell(V, A, r, plan).level;
    const double lo = min_V_on_shell(V, A, r, plan).level;
    EXPECT_GE(min_dist_on_levelset(V, A, hi, plan).radius, r - 1e-6);
    EXPECT_LE(max_dist_on_levelset(V, A, lo, plan).radius, r + 1e-6);
  }
}

TEST(Extremizers, ResultsCarryBookkeeping) {
  const auto A = TargetSet::singleton(vec({0, 0}));
  const SamplingPlan plan;
  const auto est = max_V_on_shell(ellipse(), A, 1.0, plan);
  EXPECT_GE(est.samples_used, plan.directions_per_shell);
  EXPECT_NEAR(est.achieved_at.norm(), 1.0, 1e-9);
  const auto rad = max_dist_on_levelset(ellipse(), A, 4.0, plan);
  EXPECT_GT(rad.tol, 0.0);
  EXPECT_NEAR(ellipse()(rad.achieved_at), 4.0, 1e-3);
}

TEST(Extremizers, BoundedVHasNoLevelCrossing) {
  const auto A = TargetSet::singleton(vec({0, 0}));
  LyapunovFn V;
  V.value = [](const Point& x) {
    const double d2 = x.squaredNorm();
    return d2 / (1 + d2);
  };
  EXPECT_THROW(max_dist_on_levelset(V, A, 2.0, SamplingPlan{}), LevelSetError);
}

TEST(LevelsetBoundary, PointsLieOnTheLevel) {
  const auto A = TargetSet::singleton(vec({0, 0}));
  SamplingPlan plan;
  plan.directions_per_shell = 64;
  const auto pts = levelset_boundary(ellipse(), A, 4.0, plan);
  ASSERT_EQ(pts.size(), 64u);
  for (const auto& p : pts) EXPECT_NEAR(ellipse()(p), 4.0, 1e-5);
}

}  // namespace
}  // namespace spas
