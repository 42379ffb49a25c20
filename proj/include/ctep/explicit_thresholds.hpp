#pragma once

// Closed-form classification of initial data (rho0, d0).
//
// Along a particle path s = 1/rho solves
//
//   s'' + nu s' + k c s = k,   s(0) = 1/rho0,   s'(0) = d0/rho0,
//
// and the solution breaks down exactly when s reaches zero. The explicit
// solution has at most one relevant minimum (the first one), so each regime
// reduces to a single inequality in (rho0, d0).

#include <cmath>
#include <numbers>
#include <optional>

#include "ctep/core_model.hpp"
#include "ctep/detail/roots.hpp"

namespace ctep {

/// s(t) = (1/c) [1 + A e^{-lambda1 c t} + B e^{-lambda2 c t}].
struct StrongSolution {
  double A;
  double B;
  double lambda1;
  double lambda2;
  double c;

  double s(double t) const {
    return (1.0 + A * std::exp(-lambda1 * c * t) + B * std::exp(-lambda2 * c * t)) / c;
  }
  double ds(double t) const {
    return -(A * lambda1 * std::exp(-lambda1 * c * t) + B * lambda2 * std::exp(-lambda2 * c * t));
  }
  double d2s(double t) const {
    return c * (A * lambda1 * lambda1 * std::exp(-lambda1 * c * t) +
                B * lambda2 * lambda2 * std::exp(-lambda2 * c * t));
  }
};

/// s(t) = 1/c + e^{-nu t/2}/c [c1 cos(mu t) + c2 sin(mu t)].
struct WeakSolution {
  double c1;
  double c2;
  double mu;
  double nu;
  double c;

  double s(double t) const {
    return (1.0 + std::exp(-0.5 * nu * t) * (c1 * std::cos(mu * t) + c2 * std::sin(mu * t))) / c;
  }
  double ds(double t) const {
    const double p = -0.5 * nu * c1 + mu * c2;
    const double q = -0.5 * nu * c2 - mu * c1;
    return std::exp(-0.5 * nu * t) * (p * std::cos(mu * t) + q * std::sin(mu * t)) / c;
  }
  double d2s(double t) const {
    const double p = -0.5 * nu * c1 + mu * c2;
    const double q = -0.5 * nu * c2 - mu * c1;
    const double p2 = -0.5 * nu * p + mu * q;
    const double q2 = -0.5 * nu * q - mu * p;
    return std::exp(-0.5 * nu * t) * (p2 * std::cos(mu * t) + q2 * std::sin(mu * t)) / c;
  }
};

/// s(t) = 1/c + [D + (d0/rho0 + D nu/2) t] e^{-nu t/2}, D = 1/rho0 - 1/c.
struct BorderlineSolution {
  double D;
  double slope;  // d0/rho0 + D nu/2
  double nu;
  double c;
  std::optional<double> t_star;

  double s(double t) const { return 1.0 / c + (D + slope * t) * std::exp(-0.5 * nu * t); }
  double ds(double t) const {
    return (slope - 0.5 * nu * (D + slope * t)) * std::exp(-0.5 * nu * t);
  }
  double d2s(double t) const {
    return (-nu * slope + 0.25 * nu * nu * (D + slope * t)) * std::exp(-0.5 * nu * t);
  }
};

/// First positive local minimum of s in the weak regime:
/// mu t* = beta + atan(2 mu d0 / (nu d0 + 2k(c - rho0))).
struct WeakExtremum {
  double t_star;
  double beta;
  double mu;
};

/// The pieces of a regime's deciding inequality. `margin >= 0` exactly when
/// the non-strict breakdown inequality holds (given the sign conditions).
struct ThresholdTest {
  bool sign_conditions = false;
  double lhs = 0.0;
  double rhs = 0.0;
  double margin = 0.0;
  // Relative gap used for the Boundary band.
  double relative_gap = 0.0;
};

namespace detail {

inline void require_density(double rho0) {
  if (!(rho0 > 0.0) || !std::isfinite(rho0)) {
    throw Error(ErrorCode::NonpositiveDensity, "rho0 must be positive");
  }
}

inline DampingRegime require_regime(const Params& p, Regime want) {
  auto reg = regime(p);
  if (reg.tag != want) {
    throw Error(ErrorCode::RegimeMismatch, std::string("expected ") + std::string(to_string(want)) +
                                               " regime, parameters are " +
                                               std::string(to_string(reg.tag)));
  }
  return reg;
}

inline double relative_difference(double a, double b) {
  const double scale = std::max({std::abs(a), std::abs(b), std::numeric_limits<double>::min()});
  return std::abs(a - b) / scale;
}

}  // namespace detail

inline StrongSolution strong_solution(const Params& p, double rho0, double d0) {
  detail::require_density(rho0);
  auto reg = detail::require_regime(p, Regime::Strong);
  const double l1 = reg.lambda1, l2 = reg.lambda2, c = p.c();
  const double scale = 1.0 / ((l2 - l1) * rho0);
  return {scale * (d0 + l2 * (c - rho0)), -scale * (d0 + l1 * (c - rho0)), l1, l2, c};
}

inline WeakSolution weak_solution(const Params& p, double rho0, double d0) {
  detail::require_density(rho0);
  auto reg = detail::require_regime(p, Regime::Weak);
  const double c = p.c(), nu = p.nu(), mu = reg.mu;
  const double c1 = (c - rho0) / rho0;
  const double c2 = (c * d0 / rho0 + nu * (c - rho0) / (2.0 * rho0)) / mu;
  return {c1, c2, mu, nu, c};
}

inline BorderlineSolution borderline_solution(const Params& p, double rho0, double d0) {
  detail::require_density(rho0);
  detail::require_regime(p, Regime::Borderline);
  const double c = p.c(), nu = p.nu();
  BorderlineSolution sol{1.0 / rho0 - 1.0 / c, 0.0, nu, c, std::nullopt};
  sol.slope = d0 / rho0 + sol.D * nu / 2.0;
  const double denom = 2.0 * d0 + nu * sol.D * rho0;
  if (d0 < 0.0 && denom < 0.0) sol.t_star = 4.0 * d0 / (nu * denom);
  return sol;
}

/// Branch offset of the weak-regime extremum time. A zero denominator
/// nu d0 + 2k(c - rho0) uses atan(+-inf) = +-pi/2 by the sign of d0, which
/// lands on the same t* from either adjacent branch.
inline std::optional<WeakExtremum> weak_extremum(const Params& p, double rho0, double d0) {
  detail::require_density(rho0);
  auto reg = detail::require_regime(p, Regime::Weak);
  const double nu = p.nu(), k = p.k(), c = p.c(), mu = reg.mu;
  constexpr double pi = std::numbers::pi;

  const double denom = nu * d0 + 2.0 * k * (c - rho0);
  const double nu_d0 = nu * d0;
  const double gap = 2.0 * k * (rho0 - c);  // nu d0 compared against this

  if (d0 == 0.0 && denom == 0.0) return std::nullopt;  // equilibrium rho0 = c

  double beta;
  double angle;
  if (denom == 0.0) {
    // pi/2 for d0 < 0 and 3pi/2 for d0 > 0, matching both adjacent branches.
    angle = d0 > 0.0 ? pi / 2.0 : -pi / 2.0;
    beta = pi;
  } else {
    angle = std::atan(2.0 * mu * d0 / denom);
    if (nu_d0 < std::min(0.0, gap)) {
      beta = 0.0;
    } else if (gap < nu_d0) {
      beta = pi;
    } else if (0.0 < nu_d0 && nu_d0 < gap) {
      beta = 2.0 * pi;
    } else {
      // d0 == 0 with rho0 > c: t = 0 is a minimum with s(0) = 1/rho0 > 0;
      // the first positive minimum is one period later.
      beta = 2.0 * pi;
    }
  }
  return WeakExtremum{(beta + angle) / mu, beta, mu};
}

/// Closed-form s(t) for the regime of `p`.
inline double s_exact(const Params& p, double rho0, double d0, double t) {
  switch (regime(p).tag) {
    case Regime::Strong: return strong_solution(p, rho0, d0).s(t);
    case Regime::Borderline: return borderline_solution(p, rho0, d0).s(t);
    case Regime::Weak: return weak_solution(p, rho0, d0).s(t);
  }
  return 0.0;
}

inline double ds_exact(const Params& p, double rho0, double d0, double t) {
  switch (regime(p).tag) {
    case Regime::Strong: return strong_solution(p, rho0, d0).ds(t);
    case Regime::Borderline: return borderline_solution(p, rho0, d0).ds(t);
    case Regime::Weak: return weak_solution(p, rho0, d0).ds(t);
  }
  return 0.0;
}

/// First positive time with s' = 0 and s'' > 0, if any.
inline std::optional<double> extremum_time(const Params& p, double rho0, double d0) {
  switch (regime(p).tag) {
    case Regime::Strong: {
      auto sol = strong_solution(p, rho0, d0);
      if (!(sol.A < 0.0 && sol.B > 0.0)) return std::nullopt;
      const double ratio = -sol.B * sol.lambda2 / (sol.A * sol.lambda1);
      const double t = std::log(ratio) / ((sol.lambda2 - sol.lambda1) * sol.c);
      if (!(t > 0.0)) return std::nullopt;
      return t;
    }
    case Regime::Borderline: return borderline_solution(p, rho0, d0).t_star;
    case Regime::Weak: {
      auto ext = weak_extremum(p, rho0, d0);
      if (!ext) return std::nullopt;
      return ext->t_star;
    }
  }
  return std::nullopt;
}

inline ThresholdTest strong_threshold_test(const Params& p, double rho0, double d0) {
  detail::require_density(rho0);
  auto reg = detail::require_regime(p, Regime::Strong);
  const double k = p.k(), c = p.c(), l1 = reg.lambda1, l2 = reg.lambda2;

  ThresholdTest out;
  out.sign_conditions = std::max(d0, d0 + l2 * (c - rho0)) < 0.0;
  const double x1 = (c * l1 * d0 + k * (c - rho0)) / (k * rho0);
  const double x2 = (c * l2 * d0 + k * (c - rho0)) / (k * rho0);
  out.lhs = std::pow(std::abs(x2), l1);
  out.rhs = std::pow(std::abs(x1), l2);
  // Compare in logarithms; lhs <= rhs  <=>  margin >= 0.
  out.margin = l2 * std::log(std::abs(x1)) - l1 * std::log(std::abs(x2));
  out.relative_gap = -std::expm1(-std::abs(out.margin));
  return out;
}

inline ThresholdTest borderline_threshold_test(const Params& p, double rho0, double d0) {
  detail::require_density(rho0);
  detail::require_regime(p, Regime::Borderline);
  const double nu = p.nu(), c = p.c();

  ThresholdTest out;
  out.sign_conditions = std::max(d0, d0 + nu / (2.0 * c) * (c - rho0)) < 0.0;
  const double q = 2.0 * c * d0 + nu * (c - rho0);
  out.lhs = std::log(-q / (nu * rho0));
  out.rhs = 2.0 * c * d0 / q;
  out.margin = out.lhs - out.rhs;
  out.relative_gap = detail::relative_difference(out.lhs, out.rhs);
  return out;
}

inline ThresholdTest weak_threshold_test(const Params& p, double rho0, double d0) {
  detail::require_density(rho0);
  auto reg = detail::require_regime(p, Regime::Weak);
  const double nu = p.nu(), k = p.k(), c = p.c(), mu = reg.mu;

  ThresholdTest out;
  auto ext = weak_extremum(p, rho0, d0);
  if (!ext) return out;  // equilibrium: no minimum, nothing to test
  out.sign_conditions = true;
  const double shift = d0 + nu * (c - rho0) / (2.0 * c);
  out.lhs = shift * shift;
  out.rhs = mu * mu *
            (rho0 * rho0 / (c * c) * (k * c * std::exp(nu * ext->t_star) / (mu * mu) - 1.0) +
             (2.0 * rho0 - c) / c);
  out.relative_gap = detail::relative_difference(out.lhs, out.rhs);
  out.margin = out.lhs >= out.rhs ? out.relative_gap : -out.relative_gap;
  return out;
}

namespace detail {

template <class Solution>
void fill_minimum(Verdict& v, const Solution& sol, std::optional<double> t_star) {
  v.diagnostics.extremum_time = t_star;
  if (t_star) v.diagnostics.s_min = sol.s(*t_star);
}

template <class Solution>
void fill_breakdown_time(Verdict& v, const Solution& sol) {
  if (v.outcome != Outcome::FiniteTimeBreakdown || !v.diagnostics.extremum_time) return;
  const double t_star = *v.diagnostics.extremum_time;
  if (!(sol.s(t_star) <= 0.0)) return;
  v.diagnostics.breakdown_time =
      refine_root([&](double t) { return sol.s(t); }, 0.0, t_star, 1e-13 * std::max(1.0, t_star));
}

inline Outcome decide(const ThresholdTest& test, double boundary_tol) {
  if (!test.sign_conditions) return Outcome::GlobalSmooth;
  if (test.relative_gap <= boundary_tol) return Outcome::Boundary;
  return test.margin >= 0.0 ? Outcome::FiniteTimeBreakdown : Outcome::GlobalSmooth;
}

}  // namespace detail

inline Verdict classify_strong(const Params& p, double rho0, double d0, ClassifyOptions opt = {}) {
  auto test = strong_threshold_test(p, rho0, d0);
  auto sol = strong_solution(p, rho0, d0);
  Verdict v{detail::decide(test, opt.boundary_tol), Regime::Strong, {}};
  detail::fill_minimum(v, sol, extremum_time(p, rho0, d0));
  if (test.sign_conditions) v.diagnostics.margin = test.margin;
  detail::fill_breakdown_time(v, sol);
  return v;
}

inline Verdict classify_borderline(const Params& p, double rho0, double d0,
                                   ClassifyOptions opt = {}) {
  auto test = borderline_threshold_test(p, rho0, d0);
  auto sol = borderline_solution(p, rho0, d0);
  Verdict v{detail::decide(test, opt.boundary_tol), Regime::Borderline, {}};
  detail::fill_minimum(v, sol, sol.t_star);
  if (test.sign_conditions) v.diagnostics.margin = test.margin;
  detail::fill_breakdown_time(v, sol);
  return v;
}

inline Verdict classify_weak(const Params& p, double rho0, double d0, ClassifyOptions opt = {}) {
  auto test = weak_threshold_test(p, rho0, d0);
  auto sol = weak_solution(p, rho0, d0);
  Verdict v{detail::decide(test, opt.boundary_tol), Regime::Weak, {}};
  auto ext = weak_extremum(p, rho0, d0);
  detail::fill_minimum(v, sol, ext ? std::optional<double>(ext->t_star) : std::nullopt);
  if (test.sign_conditions) v.diagnostics.margin = test.margin;
  detail::fill_breakdown_time(v, sol);
  return v;
}

inline Verdict classify(const Params& p, double rho0, double d0, ClassifyOptions opt = {}) {
  switch (regime(p).tag) {
    case Regime::Strong: return classify_strong(p, rho0, d0, opt);
    case Regime::Borderline: return classify_borderline(p, rho0, d0, opt);
    case Regime::Weak: return classify_weak(p, rho0, d0, opt);
  }
  return {};
}

}  // namespace ctep
