#include <gtest/gtest.h>

#include <cmath>

#include "ctep/core_model.hpp"
#include "oracles.hpp"

using namespace ctep;

TEST(Regime, StrongConstants) {
  auto r = regime(Params(3, 1, 1));
  EXPECT_EQ(r.tag, Regime::Strong);
  EXPECT_NEAR(r.lambda1, (3 - std::sqrt(5.0)) / 2, 1e-15);
  EXPECT_NEAR(r.lambda2, (3 + std::sqrt(5.0)) / 2, 1e-15);
  EXPECT_NEAR(r.lambda1, 0.381966, 1e-6);
  EXPECT_NEAR(r.lambda2, 2.618034, 1e-6);
  EXPECT_NEAR(r.lambda_minus, -r.lambda2, 1e-15);
  EXPECT_NEAR(r.lambda_plus, -r.lambda1, 1e-15);
  EXPECT_TRUE(std::isnan(r.mu));
}

TEST(Regime, BorderlineExact) {
  auto r = regime(Params(2, 1, 1));
  EXPECT_EQ(r.tag, Regime::Borderline);
  EXPECT_EQ(r.lambda, -1.0);
}

TEST(Regime, BorderlineBandAbsorbsRoundoff) {
  const double nu = 2.0 * std::sqrt(0.3 * 0.7);
  EXPECT_EQ(regime(Params(nu, 0.3, 0.7)).tag, Regime::Borderline);
  EXPECT_EQ(regime(Params(nu * (1 + 1e-10), 0.3, 0.7)).tag, Regime::Strong);
  EXPECT_EQ(regime(Params(nu * (1 - 1e-10), 0.3, 0.7)).tag, Regime::Weak);
}

TEST(Regime, WeakConstant) {
  auto r = regime(Params(1, 1, 1));
  EXPECT_EQ(r.tag, Regime::Weak);
  EXPECT_NEAR(r.mu, std::sqrt(3.0) / 2, 1e-15);
  EXPECT_NEAR(r.mu, 0.866025, 1e-6);
}

TEST(Regime, ForcedRegimeChecked) {
  EXPECT_EQ(regime(Params(2, 1, 1, Regime::Borderline)).tag, Regime::Borderline);
  EXPECT_EQ(regime(Params(3, 1, 1, Regime::Borderline)).tag, Regime::Borderline);
  try {
    regime(Params(1, 1, 1, Regime::Strong));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::RegimeMismatch);
  }
  EXPECT_THROW(regime(Params(3, 1, 1, Regime::Weak)), Error);
}

TEST(Params, RejectsNonpositive) {
  EXPECT_THROW(Params(0, 1, 1), Error);
  EXPECT_THROW(Params(1, -1, 1), Error);
  EXPECT_THROW(Params(1, 1, 0), Error);
  EXPECT_THROW(Params(std::nan(""), 1, 1), Error);
  EXPECT_THROW(Params(INFINITY, 1, 1), Error);
}

TEST(RegimeProperty, TrichotomyAndDefiningPolynomials) {
  oracle::Gen g(11);
  for (int i = 0; i < 2000; ++i) {
    const double nu = g.log_uniform(1e-3, 1e3), k = g.log_uniform(1e-3, 1e3),
                 c = g.log_uniform(1e-3, 1e3);
    Params p(nu, k, c);
    auto r = regime(p);
    const double disc = nu * nu - 4 * k * c;
    switch (r.tag) {
      case Regime::Strong: {
        EXPECT_GT(disc, 0.0);
        EXPECT_LT(0.0, r.lambda1);
        EXPECT_LT(r.lambda1, r.lambda2);
        EXPECT_NEAR((r.lambda1 + r.lambda2) / (nu / c), 1.0, 1e-12);
        EXPECT_NEAR((r.lambda1 * r.lambda2) / (k / c), 1.0, 1e-12);
        // eigenvalues solve L^2 + nu L + k c = 0
        for (double L : {r.lambda_minus, r.lambda_plus}) {
          const double scale = L * L + nu * std::abs(L) + k * c;
          EXPECT_LE(std::abs(L * L + nu * L + k * c) / scale, 1e-12);
        }
        break;
      }
      case Regime::Weak:
        EXPECT_LT(disc, 0.0);
        EXPECT_NEAR((r.mu * r.mu + nu * nu / 4) / (k * c), 1.0, 1e-12);
        break;
      case Regime::Borderline:
        EXPECT_TRUE(is_borderline_band(nu, k, c));
        break;
    }
  }
}

TEST(Transform, Examples) {
  auto a = to_rs({1, 0});
  EXPECT_EQ(a.r, 0.0);
  EXPECT_EQ(a.s, 1.0);
  auto b = to_rs({2, -4});
  EXPECT_EQ(b.r, 2.0);
  EXPECT_EQ(b.s, 0.5);
  auto c = from_rs({0, 1});
  EXPECT_EQ(c.rho, 1.0);
  EXPECT_EQ(c.d, 0.0);
  auto d = from_rs({2, 0.5});
  EXPECT_EQ(d.rho, 2.0);
  EXPECT_EQ(d.d, -4.0);
  auto e = from_rs({-1, 2});
  EXPECT_EQ(e.rho, 0.5);
  EXPECT_EQ(e.d, 0.5);
}

TEST(Transform, Errors) {
  try {
    to_rs({0.0, 1.0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonpositiveDensity);
  }
  try {
    from_rs({1.0, -1e-300});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonpositiveS);
  }
}

TEST(TransformProperty, RoundTrip) {
  oracle::Gen g(7);
  for (int i = 0; i < 5000; ++i) {
    const double rho = g.log_uniform(1e-8, 1e8);
    const double d = g.uniform(-1e3, 1e3);
    auto back = from_rs(to_rs({rho, d}));
    EXPECT_NEAR(back.rho / rho, 1.0, 1e-14);
    EXPECT_LE(std::abs(back.d - d), 1e-14 * std::abs(d) + 1e-300);
  }
}

TEST(Verdict, BoundaryResolvesByMargin) {
  Verdict v;
  v.outcome = Outcome::Boundary;
  v.diagnostics.margin = 1e-12;
  EXPECT_TRUE(v.breaks_down());
  v.diagnostics.margin = -1e-12;
  EXPECT_FALSE(v.breaks_down());
  EXPECT_EQ(to_string(Outcome::FiniteTimeBreakdown), "FiniteTimeBreakdown");
  EXPECT_EQ(regime_from_string("Weak"), Regime::Weak);
  EXPECT_FALSE(regime_from_string("weak").has_value());
}
