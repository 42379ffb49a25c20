#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "ctep/characteristic_sim.hpp"
#include "ctep/explicit_thresholds.hpp"
#include "ctep/threshold_curves.hpp"
#include "oracles.hpp"

using namespace ctep;

namespace {

const Params kStrong(3, 1, 1);
const Params kBorder(2, 1, 1);
const Params kWeak(1, 1, 1);

// Derivative at x[2] of the quartic through five nodes (Lagrange weights).
double five_point_derivative(const double* x, const double* y) {
  double d = 0.0;
  for (int j = 0; j < 5; ++j) {
    if (j == 2) continue;
    double w = 1.0 / (x[j] - x[2]);
    for (int m = 0; m < 5; ++m)
      if (m != j && m != 2) w *= (x[2] - x[m]) / (x[j] - x[m]);
    d += w * (y[j] - y[2]);
  }
  return d;
}

double max_residual(const ThresholdCurve& c, double lo, double hi) {
  const auto eq = detail::equation_for(c.branch(), c.params(), c.s_star_value().value_or(0.0));
  double worst = 0.0;
  const auto& x = c.x();
  const auto& q = c.q();
  for (std::size_t i = 2; i + 2 < x.size(); ++i) {
    if (x[i] < lo || x[i] > hi) continue;
    const double fd = five_point_derivative(&x[i - 2], &q[i - 2]);
    const double rhs = eq.slope(x[i], q[i]);
    worst = std::max(worst, std::abs(fd - rhs) / std::max(std::abs(rhs), 1.0));
  }
  return worst;
}

}  // namespace

TEST(Nullcline, Examples) {
  EXPECT_EQ(nullcline(kWeak, 1.0), 0.0);
  EXPECT_EQ(nullcline(Params(1, 1, 2), 0.5), 0.0);
  EXPECT_EQ(nullcline(kWeak, 0.0), -1.0);
  EXPECT_EQ(nullcline(kBorder, 3.0), 1.0);
}

TEST(SStar, Examples) {
  EXPECT_NEAR(s_star(kWeak), std::exp(std::numbers::pi / std::sqrt(3.0)) + 1.0, 1e-14);
  EXPECT_NEAR(s_star(kWeak), 7.1337, 1e-4);
  EXPECT_NEAR(s_star(Params(1e-3, 1, 1)), 2.0, 2e-3);
  EXPECT_NEAR(s_star(Params(1, 2, 0.5)), 14.2674, 1e-4);
  try {
    s_star(kStrong);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::RegimeMismatch);
  }
}

TEST(SStarProperty, MatchesBackwardTrajectory) {
  oracle::Gen g(59);
  for (int i = 0; i < 10; ++i) {
    const double k = g.uniform(0.3, 3), c = g.uniform(0.3, 3);
    const double nu = g.uniform(0.05, 0.95) * 2 * std::sqrt(k * c);
    const Params p(nu, k, c);
    EXPECT_NEAR(backward_recrossing(p).s, s_star(p), 1e-6 * std::max(1.0, s_star(p)));
  }
}

TEST(IntegrateQ, SeriesNearOrigin) {
  auto qa = integrate_Q(kStrong, Branch::Qa, 10.0);
  EXPECT_EQ(qa(0.0), 0.0);
  EXPECT_NEAR(qa(1e-6), 1.41621e-3, 5e-9);
  EXPECT_NEAR(qa(1e-6), std::sqrt(2e-6) + 2e-6, 1e-8);
  // Independent route: the inverted equation ds/dQ is regular at the origin.
  for (double s : {1e-6, 1e-3, 0.5, 3.0}) {
    EXPECT_NEAR(qa(s), oracle::curve_value(3, 1, 1, s, 1.0, 20.0), 1e-9 * std::max(1.0, qa(s)))
        << s;
  }
}

TEST(IntegrateQ, RejectsWrongRegime) {
  try {
    integrate_Q(kWeak, Branch::Qa);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::RegimeMismatch);
  }
  EXPECT_THROW(integrate_Q2(kStrong, 3.0), Error);
  EXPECT_THROW(integrate_Q(kBorder, Branch::Qa), Error);
}

TEST(IntegrateQ, StrongAsymptoticSlope) {
  auto qa = integrate_Q(kStrong, Branch::Qa);
  ASSERT_TRUE(qa.asymptotic_slope());
  EXPECT_NEAR(*qa.asymptotic_slope(), (3 + std::sqrt(5.0)) / 2, 1e-3);
  // Riccati endpoint at rho = 0: the slope equals -lambda_minus.
  EXPECT_NEAR(-*qa.asymptotic_slope(), regime(kStrong).lambda_minus, 1e-3);
  EXPECT_NEAR(far_field_ratio(qa, 1e200), (3 + std::sqrt(5.0)) / 2, 1e-9);
}

TEST(IntegrateQ, BorderlineRatioApproachesHalfDamping) {
  auto qb = integrate_Q(kBorder, Branch::Qb);
  // Q/s decreases towards nu/2, logarithmically slowly.
  double prev = INFINITY;
  for (double s : {10.0, 100.0, 1000.0}) {
    const double ratio = qb(s) / s;
    EXPECT_LT(ratio, prev);
    EXPECT_GT(ratio, 1.0);
    prev = ratio;
  }
  EXPECT_NEAR(far_field_ratio(qb, 1e200), 1.0, 1e-2);
}

TEST(IntegrateQ, OdeResidual) {
  const double tol = 1e-10;
  auto qa = integrate_Q(kStrong, Branch::Qa, 100.0);
  EXPECT_LE(max_residual(qa, 1e-6, 100.0), 10 * tol);
  auto qb = integrate_Q(kBorder, Branch::Qb, 100.0);
  EXPECT_LE(max_residual(qb, 1e-6, 100.0), 10 * tol);
  auto q1 = integrate_Q(kWeak, Branch::Q1);
  // Near s* the stored abscissae s* - tau lose digits, so differencing in s is
  // ill-conditioned there; the tau-equation check on Q2 covers that end.
  EXPECT_LE(max_residual(q1, 1e-6, s_star(kWeak) - 1e-2), 10 * tol);
  auto q2 = integrate_Q2(kWeak, s_star(kWeak));
  EXPECT_LE(max_residual(q2, 1e-6, s_star(kWeak) - 1e-6), 10 * tol);
}

TEST(IntegrateQ, StrongGeometry) {
  for (const Params& p : {kStrong, Params(5, 1, 2), Params(2.5, 1, 1.5)}) {
    auto qa = integrate_Q(p, Branch::Qa, 200.0);
    const double lm = regime(p).lambda_minus;
    const auto& x = qa.x();
    const auto& q = qa.q();
    for (std::size_t i = 1; i < x.size(); ++i) {
      EXPECT_GT(q[i], q[i - 1]);
      if (x[i] > 1 / p.c()) {
        // The fast eigenline r = -lambda_minus (s - 1/c) is itself a
        // trajectory; Qa starts above it (Qa(1/c) > 0) and cannot cross it.
        EXPECT_GT(q[i], -lm * (x[i] - 1 / p.c()));
        // Increasing Q forces nu Q > k(cs - 1): above the nullcline.
        EXPECT_GT(q[i], nullcline(p, x[i]));
      }
    }
  }
}

TEST(IntegrateQ, BorderlineMonotone) {
  auto qb = integrate_Q(kBorder, Branch::Qb, 100.0);
  for (std::size_t i = 1; i < qb.x().size(); ++i) EXPECT_GT(qb.q()[i], qb.q()[i - 1]);
}

TEST(IntegrateQ2, SeriesAndSign) {
  const double ss = s_star(kWeak);
  auto q2 = integrate_Q2(kWeak, ss);
  EXPECT_EQ(q2(0.0), 0.0);
  const double lead = -std::sqrt(2 * (ss - 1) * 1e-6);
  EXPECT_NEAR(lead, -3.5025e-3, 1e-7);
  EXPECT_NEAR(q2(1e-6), lead - 2e-6 / 3, 1e-9);
  EXPECT_NEAR(q2(1e-6), -3.503e-3, 1e-6);
  for (double tau : {1e-6, 0.1, 2.0, 6.0}) {
    EXPECT_NEAR(q2(tau), oracle::curve_value(-1, ss - 1, 1, tau, -1.0, 40.0), 1e-9 * std::max(1.0, std::abs(q2(tau))))
        << tau;
  }
  for (double v : q2.q()) EXPECT_LT(v, 0.0);
  auto q1 = integrate_Q(kWeak, Branch::Q1);
  for (double v : q1.q()) EXPECT_GT(v, 0.0);
  ASSERT_TRUE(q1.meta().junction_gap);
  EXPECT_LT(*q1.meta().junction_gap, 1e-8);
}

TEST(WeakCurves, ClosedCurveIsBackwardTrajectory) {
  for (const Params& p : {kWeak, Params(0.5, 2, 1), Params(1, 2, 0.5)}) {
    auto set = build_curves(p);
    const double ss = *set.s_star;
    LinearFlow flow(p, {0.0, 0.0});
    double worst = 0.0;
    for (int i = 1;; ++i) {
      auto rs = flow.at(-i * 1e-3);
      if (rs.s <= 1e-6) break;
      double q;
      if (rs.r > 0) q = (*set.q1)(rs.s);
      else if (ss - rs.s > 1e-8) q = (*set.q2)(ss - rs.s);
      else continue;
      worst = std::max(worst, std::abs(q - rs.r));
    }
    EXPECT_LE(worst, 1e-6);
  }
}

TEST(ThresholdCurve, RangeChecks) {
  auto qa = integrate_Q(kStrong, Branch::Qa, 5.0);
  try {
    qa(6.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::CurveRangeExceeded);
  }
  auto set = build_curves(kStrong, 5.0);
  try {
    classify_by_curve(kStrong, 0.1, 0.0, set);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::CurveRangeExceeded);
  }
  EXPECT_THROW(ThresholdCurve(Branch::Qa, kStrong, {0, 1, 0.5, 2}, {0, 1, 2, 3}, {}), Error);
}

TEST(ClassifyByCurve, Examples) {
  auto strong = build_curves(kStrong);
  EXPECT_EQ(classify_by_curve(kStrong, 1, 0.5, strong).outcome, Outcome::GlobalSmooth);
  EXPECT_EQ(classify_by_curve(kStrong, 1, -10, strong).outcome, Outcome::FiniteTimeBreakdown);
  auto weak = build_curves(kWeak);
  for (double d0 : {-5.0, 0.0, 5.0})
    EXPECT_EQ(classify_by_curve(kWeak, 0.05, d0, weak).outcome, Outcome::FiniteTimeBreakdown);
  EXPECT_EQ(classify_by_curve(kWeak, 1, 0, weak).outcome, Outcome::GlobalSmooth);
  EXPECT_EQ(classify_by_curve(kWeak, 1 / s_star(kWeak), 0, weak).outcome, Outcome::Boundary);
}

TEST(ClassifyByCurve, BorderlineCurveStartsAtHalfDamping) {
  auto qb = integrate_Q(kBorder, Branch::Qb);
  // d = -rho Q(1/rho) at small rho approaches -nu/2 from below.
  const double d = -1e-3 * qb(1e3);
  EXPECT_LT(d, -1.0);
  EXPECT_GT(d, -1.3);
}

TEST(ClassifyByCurveProperty, AgreesWithFormulas) {
  oracle::Gen g(61);
  for (const Params& p : {kStrong, kBorder, kWeak, Params(0.4, 2, 1.5)}) {
    auto set = build_curves(p);
    int checked = 0;
    for (int i = 0; i < 400; ++i) {
      const double rho0 = g.uniform(0.05, 4), d0 = g.uniform(-6, 2);
      auto a = classify(p, rho0, d0);
      auto b = classify_by_curve(p, rho0, d0, set);
      if (a.outcome == Outcome::Boundary || std::abs(*b.diagnostics.curve_gap) < 1e-4) continue;
      EXPECT_EQ(a.outcome, b.outcome) << rho0 << " " << d0;
      ++checked;
    }
    EXPECT_GT(checked, 390);
  }
}

TEST(InvariantRegion, TrajectoriesStayInside) {
  oracle::Gen g(67);
  for (const Params& p : {kStrong, kBorder, kWeak}) {
    auto set = build_curves(p);
    int n = 0;
    while (n < 30) {
      const double s0 = g.uniform(0.05, 6.0), r0 = g.uniform(-15, 15);
      if (!inside_region(set, r0, s0)) continue;
      ++n;
      auto run = integrate_linear(p, r0, s0, 40.0);
      EXPECT_TRUE(std::holds_alternative<Completed>(run.terminal));
      for (const auto& smp : run.samples) EXPECT_TRUE(inside_region(set, smp.a, smp.b)) << smp.t;
    }
  }
}
