#pragma once

// Ground-truth trajectories along a single particle path.
//
// The linear (r, s) system is propagated exactly through the eigen-structure
// of its coefficient matrix; the nonlinear (rho, d) system is integrated
// adaptively until d falls below a floor standing in for d -> -infinity.

#include <cmath>
#include <numbers>
#include <optional>
#include <variant>
#include <vector>

#include "ctep/core_model.hpp"
#include "ctep/detail/ode.hpp"
#include "ctep/detail/roots.hpp"

namespace ctep {

/// Exact flow of r' = -nu r - k(1 - c s), s' = -r written for y = s - 1/c,
/// which solves y'' + nu y' + k c y = 0. Valid for any real t.
class LinearFlow {
public:
  LinearFlow(const Params& p, PhaseRS initial) : reg_(regime(p)), nu_(p.nu()), c_(p.c()) {
    y0_ = initial.s - 1.0 / c_;
    v0_ = -initial.r;
    switch (reg_.tag) {
      case Regime::Strong: {
        const double lp = reg_.lambda_plus, lm = reg_.lambda_minus;
        coef_minus_ = (v0_ - lp * y0_) / (lm - lp);
        coef_plus_ = y0_ - coef_minus_;
        break;
      }
      case Regime::Borderline:
        coef_plus_ = y0_;
        coef_minus_ = v0_ - reg_.lambda * y0_;
        break;
      case Regime::Weak:
        coef_plus_ = y0_;
        coef_minus_ = (v0_ + 0.5 * nu_ * y0_) / reg_.mu;
        break;
    }
  }

  double y(double t) const {
    switch (reg_.tag) {
      case Regime::Strong:
        return coef_plus_ * std::exp(reg_.lambda_plus * t) +
               coef_minus_ * std::exp(reg_.lambda_minus * t);
      case Regime::Borderline:
        return (coef_plus_ + coef_minus_ * t) * std::exp(reg_.lambda * t);
      case Regime::Weak:
        return std::exp(-0.5 * nu_ * t) *
               (coef_plus_ * std::cos(reg_.mu * t) + coef_minus_ * std::sin(reg_.mu * t));
    }
    return 0.0;
  }

  double dy(double t) const {
    switch (reg_.tag) {
      case Regime::Strong:
        return coef_plus_ * reg_.lambda_plus * std::exp(reg_.lambda_plus * t) +
               coef_minus_ * reg_.lambda_minus * std::exp(reg_.lambda_minus * t);
      case Regime::Borderline:
        return (coef_minus_ + reg_.lambda * (coef_plus_ + coef_minus_ * t)) *
               std::exp(reg_.lambda * t);
      case Regime::Weak: {
        const double mu = reg_.mu, h = -0.5 * nu_;
        return std::exp(h * t) * ((h * coef_plus_ + mu * coef_minus_) * std::cos(mu * t) +
                                  (h * coef_minus_ - mu * coef_plus_) * std::sin(mu * t));
      }
    }
    return 0.0;
  }

  double s(double t) const { return 1.0 / c_ + y(t); }
  double r(double t) const { return -dy(t); }
  PhaseRS at(double t) const { return {r(t), s(t)}; }

  /// First t > 0 where s' = 0 for a node (Strong/Borderline), if any.
  std::optional<double> node_extremum_time() const {
    switch (reg_.tag) {
      case Regime::Strong: {
        const double lp = reg_.lambda_plus, lm = reg_.lambda_minus;
        if (coef_plus_ == 0.0) return std::nullopt;
        const double ratio = -coef_minus_ * lm / (coef_plus_ * lp);
        if (!(ratio > 0.0)) return std::nullopt;
        const double t = std::log(ratio) / (lp - lm);
        return t > 0.0 ? std::optional<double>(t) : std::nullopt;
      }
      case Regime::Borderline: {
        if (coef_minus_ == 0.0) return std::nullopt;
        const double t = -(coef_minus_ + reg_.lambda * coef_plus_) / (reg_.lambda * coef_minus_);
        return t > 0.0 ? std::optional<double>(t) : std::nullopt;
      }
      case Regime::Weak: return std::nullopt;
    }
    return std::nullopt;
  }

  const DampingRegime& damping() const { return reg_; }

private:
  DampingRegime reg_;
  double nu_;
  double c_;
  double y0_ = 0.0;
  double v0_ = 0.0;
  double coef_plus_ = 0.0;
  double coef_minus_ = 0.0;
};

enum class StateKind { RhoD, RS };

struct TrajectorySample {
  double t;
  double a;  // rho or r
  double b;  // d or s
};

struct Completed {
  double horizon;
};

/// First s = 0 crossing; the root lies in [lo, hi].
struct SCrossedZero {
  double t_c;
  double lo;
  double hi;
};

/// d reached the floor at t_floor. t_c extrapolates the two floor times to
/// d = -infinity using d ~ -1/(t_c - t) - K near breakdown.
struct DBlewDown {
  double t_floor;
  double d_floor;
  double t_c;
  bool stabilized;
};

using Terminal = std::variant<Completed, SCrossedZero, DBlewDown>;

struct TrajectoryResult {
  StateKind kind = StateKind::RS;
  std::vector<TrajectorySample> samples;
  Terminal terminal = Completed{0.0};
  double s_min = 0.0;  // linear runs only

  bool blew_up() const { return !std::holds_alternative<Completed>(terminal); }
  /// Breakdown time estimate, if the run ended in breakdown.
  std::optional<double> breakdown_time() const {
    if (auto* z = std::get_if<SCrossedZero>(&terminal)) return z->t_c;
    if (auto* d = std::get_if<DBlewDown>(&terminal)) return d->t_c;
    return std::nullopt;
  }
};

struct LinearOptions {
  double event_tol = 1e-12;
  int scan_points = 2048;
  bool keep_samples = true;
};

/// Forward run of the linear system from (r0, s0) up to `horizon`, stopping
/// at the first s = 0 crossing. A dip below zero between scan points is
/// caught by refining every local minimum of s.
inline TrajectoryResult integrate_linear(const Params& p, double r0, double s0, double horizon,
                                         LinearOptions opt = {}) {
  LinearFlow flow(p, {r0, s0});
  TrajectoryResult out;
  out.kind = StateKind::RS;
  out.terminal = Completed{horizon};
  out.s_min = s0;

  auto keep = [&](double t) {
    if (opt.keep_samples) out.samples.push_back({t, flow.r(t), flow.s(t)});
  };
  auto cross_in = [&](double lo, double hi) {
    auto [a, b] = detail::bracket_root([&](double t) { return flow.s(t); }, lo, hi, opt.event_tol);
    const double tc = 0.5 * (a + b);
    keep(tc);
    out.terminal = SCrossedZero{tc, a, b};
    out.s_min = std::min(out.s_min, 0.0);
  };

  keep(0.0);
  if (s0 <= 0.0) {
    out.terminal = SCrossedZero{0.0, 0.0, 0.0};
    return out;
  }

  const int n = std::max(opt.scan_points, 16);
  const double h = horizon / n;
  double t_prev = 0.0, ds_prev = flow.dy(0.0);
  for (int i = 1; i <= n; ++i) {
    const double t = i * h;
    const double s = flow.s(t);
    const double ds = flow.dy(t);
    if (s <= 0.0) {
      cross_in(t_prev, t);
      return out;
    }
    if (ds_prev < 0.0 && ds > 0.0) {
      const double tm = detail::refine_root([&](double u) { return flow.dy(u); }, t_prev, t,
                                            opt.event_tol);
      const double sm = flow.s(tm);
      if (sm <= 0.0) {
        cross_in(t_prev, tm);
        return out;
      }
      out.s_min = std::min(out.s_min, sm);
    }
    out.s_min = std::min(out.s_min, s);
    keep(t);
    t_prev = t;
    ds_prev = ds;
  }
  return out;
}

/// Where the weak-regime trajectory through the origin, run backwards in
/// time, first returns to r = 0.
struct Recrossing {
  double t;  // negative
  double s;
};

inline Recrossing backward_recrossing(const Params& p, double event_tol = 1e-14) {
  auto reg = regime(p);
  if (reg.tag != Regime::Weak) {
    throw Error(ErrorCode::RegimeMismatch, "backward recrossing exists only for weak damping");
  }
  LinearFlow flow(p, {0.0, 0.0});
  const double span = 2.0 * std::numbers::pi / reg.mu;
  const int n = 4096;
  const double h = span / n;
  double t_prev = -h;
  for (int i = 2; i <= n; ++i) {
    const double t = -i * h;
    if (flow.r(t) <= 0.0) {
      const double tr =
          detail::refine_root([&](double u) { return flow.r(u); }, t, t_prev, event_tol);
      return {tr, flow.s(tr)};
    }
    t_prev = t;
  }
  throw Error(ErrorCode::StepFailure, "no r = 0 recrossing within one period");
}

struct NonlinearOptions {
  double rel_tol = 1e-12;
  double abs_tol = 1e-14;
  double d_floor = -1e6;
  bool keep_samples = true;
};

/// Adaptive integration of rho' = -rho d, d' = -d^2 - nu d + k(rho - c).
inline TrajectoryResult integrate_nonlinear(const Params& p, double rho0, double d0,
                                            double horizon, NonlinearOptions opt = {}) {
  if (!(rho0 > 0.0)) throw Error(ErrorCode::NonpositiveDensity, "rho0 must be positive");
  if (!(opt.d_floor < 0.0)) throw Error(ErrorCode::InvalidParameters, "d_floor must be negative");
  const double nu = p.nu(), k = p.k(), c = p.c();
  auto rhs = [=](const detail::State<2>& y, detail::State<2>& dy, double) {
    dy[0] = -y[0] * y[1];
    dy[1] = -y[1] * y[1] - nu * y[1] + k * (y[0] - c);
  };

  TrajectoryResult out;
  out.kind = StateKind::RhoD;
  out.terminal = Completed{horizon};
  out.s_min = 1.0 / rho0;

  const double floor_hi = opt.d_floor / 100.0;  // first, shallower floor
  std::optional<double> t_hi;

  detail::DenseIntegrator<2>::Settings cfg;
  cfg.rel_tol = opt.rel_tol;
  cfg.abs_tol = opt.abs_tol;
  cfg.initial_dt = std::min(1e-4, horizon / 16.0);
  detail::DenseIntegrator<2> ode(0.0, {rho0, d0}, cfg);
  if (opt.keep_samples) out.samples.push_back({0.0, rho0, d0});

  auto floor_time = [&](double level, double lo, double hi) {
    return detail::refine_root([&](double t) { return ode.at(t)[1] - level; }, lo, hi,
                               1e-15 * std::max(1.0, hi));
  };

  if (d0 <= opt.d_floor) {
    out.terminal = DBlewDown{0.0, opt.d_floor, 0.0, false};
    return out;
  }

  while (ode.time() < horizon) {
    ode.limit_next_step(horizon);
    auto [t0, t1] = ode.step(rhs);
    const auto& y = ode.state();
    if (!std::isfinite(y[0]) || !std::isfinite(y[1])) {
      throw Error(ErrorCode::StepFailure, "non-finite state in nonlinear integration");
    }
    if (!t_hi && y[1] <= floor_hi) t_hi = floor_time(floor_hi, t0, t1);
    if (y[1] <= opt.d_floor) {
      const double tf = floor_time(opt.d_floor, t0, t1);
      if (opt.keep_samples) {
        auto yf = ode.at(tf);
        out.samples.push_back({tf, yf[0], yf[1]});
      }
      // a_i = t_i + 1/|F_i| = t_c - K/F_i^2; eliminate K.
      const double f1 = std::abs(floor_hi), f2 = std::abs(opt.d_floor);
      const double a1 = t_hi.value_or(tf) + 1.0 / f1;
      const double a2 = tf + 1.0 / f2;
      const double tc = (a2 * f2 * f2 - a1 * f1 * f1) / (f2 * f2 - f1 * f1);
      out.terminal = DBlewDown{tf, opt.d_floor, tc, t_hi && std::abs(a1 - a2) <= 1e-6};
      return out;
    }
    if (opt.keep_samples) out.samples.push_back({t1, y[0], y[1]});
  }
  return out;
}

struct HorizonPolicy {
  std::optional<double> fixed;  // overrides the regime default when set
};

/// Regime default: Weak 4 pi/mu (covers t* + one period since t* < 2 pi/mu),
/// Strong max(10/(lambda1 c), 5 t*), Borderline max(20/nu, 5 t*).
inline double oracle_horizon(const Params& p, const LinearFlow& flow, HorizonPolicy policy) {
  if (policy.fixed) return *policy.fixed;
  const auto& reg = flow.damping();
  const double t_star = flow.node_extremum_time().value_or(0.0);
  switch (reg.tag) {
    case Regime::Strong: return std::max(10.0 / (reg.lambda1 * p.c()), 5.0 * t_star);
    case Regime::Borderline: return std::max(20.0 / p.nu(), 5.0 * t_star);
    case Regime::Weak: return 4.0 * std::numbers::pi / reg.mu;
  }
  return 0.0;
}

/// Classification by direct simulation of the linear system.
inline Verdict oracle_classify(const Params& p, double rho0, double d0, HorizonPolicy policy = {},
                               ClassifyOptions opt = {}) {
  const auto start = to_rs({rho0, d0});
  LinearFlow flow(p, start);
  const double horizon = oracle_horizon(p, flow, policy);
  LinearOptions lo;
  lo.keep_samples = false;
  auto run = integrate_linear(p, start.r, start.s, horizon, lo);

  Verdict v;
  v.regime = flow.damping().tag;
  v.diagnostics.s_min = run.s_min;
  if (auto tc = run.breakdown_time()) {
    v.outcome = Outcome::FiniteTimeBreakdown;
    v.diagnostics.breakdown_time = *tc;
    return v;
  }
  if (run.s_min < opt.boundary_tol * start.s) {
    throw Error(ErrorCode::Inconclusive, "minimum of s too close to zero to decide");
  }
  v.outcome = Outcome::GlobalSmooth;
  return v;
}

}  // namespace ctep
