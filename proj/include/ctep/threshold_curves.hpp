#pragma once

// Critical threshold curves in the (r, s) plane.
//
// Every curve solves Q Q' = sigma nu Q + K - L x from Q(0) = 0:
//
//   Qa, Qb, Q1 (x = s):          sigma = +1, K = k,             L = k c
//   Q2 (x = tau = s* - s):       sigma = -1, K = k (c s* - 1),  L = k c
//
// The right-hand side is singular at the origin, so integration starts at
// x0 = 1e-8 from the series Q ~ a sqrt(x) + b x + e x^{3/2}.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <boost/math/interpolators/cubic_hermite.hpp>

#include "ctep/core_model.hpp"
#include "ctep/detail/ode.hpp"


namespace ctep {

enum class Branch { Qa, Qb, Q1, Q2 };

constexpr std::string_view to_string(Branch b) {
  switch (b) {
    case Branch::Qa: return "Qa";
    case Branch::Qb: return "Qb";
    case Branch::Q1: return "Q1";
    case Branch::Q2: return "Q2";
  }
  return "Unknown";
}

inline std::optional<Branch> branch_from_string(std::string_view s) {
  if (s == "Qa") return Branch::Qa;
  if (s == "Qb") return Branch::Qb;
  if (s == "Q1") return Branch::Q1;
  if (s == "Q2") return Branch::Q2;
  return std::nullopt;
}

inline Regime regime_of(Branch b) {
  switch (b) {
    case Branch::Qa: return Regime::Strong;
    case Branch::Qb: return Regime::Borderline;
    default: return Regime::Weak;
  }
}

/// r-coordinate of the line nu r + k(1 - c s) = 0 where r' vanishes.
inline double nullcline(const Params& p, double s) { return p.k() * (p.c() * s - 1.0) / p.nu(); }

/// (e^{nu pi / (2 mu)} + 1) / c: where the weak-regime trajectory through the
/// origin, followed backwards, returns to r = 0.
inline double s_star(const Params& p) {
  auto reg = regime(p);
  if (reg.tag != Regime::Weak) {
    throw Error(ErrorCode::RegimeMismatch, "s* exists only for weak damping");
  }
  return (std::exp(p.nu() * std::numbers::pi / (2.0 * reg.mu)) + 1.0) / p.c();
}

namespace detail {

/// Q Q' = sigma_nu Q + K - L x.
struct CurveEquation {
  double sigma_nu;
  double K;
  double L;

  double slope(double x, double q) const { return sigma_nu + (K - L * x) / q; }
};

struct SingularSeries {
  double a;
  double b;
  double e;

  SingularSeries(const CurveEquation& eq, double sign) {
    a = sign * std::sqrt(2.0 * eq.K);
    b = 2.0 * eq.sigma_nu / 3.0;
    e = (eq.sigma_nu * b - eq.L - b * b) / (2.0 * a);
  }
  double operator()(double x) const {
    const double r = std::sqrt(x);
    return r * (a + r * (b + e * r));
  }
};

inline CurveEquation equation_for(Branch b, const Params& p, double s_star_value) {
  const double kc = p.k() * p.c();
  if (b == Branch::Q2) return {-p.nu(), p.k() * (p.c() * s_star_value - 1.0), kc};
  return {p.nu(), p.k(), kc};
}

/// Sample spacing: geometric near the singular start, then about 0.2%
/// relative, so that interior finite differences are fourth-order accurate.
inline double sample_spacing(double x) { return std::min(0.005 * x, 0.002 * (1.0 + x)); }

struct Trace {
  std::vector<double> x;
  std::vector<double> q;
};

/// Integrates from the series seed at x0 to x_end. Steps are capped by the
/// sample spacing and land exactly on the requested checkpoints. A positive
/// `mirror` also caps them by the spacing in the reflected variable mirror - x.
inline Trace trace_curve(const CurveEquation& eq, double sign, double x0, double x_end, double tol,
                         std::vector<double> checkpoints = {}, double mirror = 0.0) {
  SingularSeries seed(eq, sign);
  Trace out;
  out.x.push_back(x0);
  out.q.push_back(seed(x0));
  std::sort(checkpoints.begin(), checkpoints.end());
  auto next_check = checkpoints.begin();
  while (next_check != checkpoints.end() && *next_check <= x0) ++next_check;

  typename DenseIntegrator<1>::Settings cfg;
  cfg.rel_tol = tol;
  cfg.abs_tol = tol * 1e-8;
  cfg.initial_dt = x0 * 1e-2;
  cfg.min_dt = 1e-17;
  DenseIntegrator<1> ode(x0, {seed(x0)}, cfg);
  auto rhs = [&eq](const State<1>& q, State<1>& dq, double x) { dq[0] = eq.slope(x, q[0]); };

  auto emit = [&](double x, double q) {
    if (x > out.x.back() * (1.0 + 1e-14) + 1e-300) {
      out.x.push_back(x);
      out.q.push_back(q);
    }
  };
  // Samples are step ends, never dense-output values, so neighbouring samples
  // carry smoothly varying error and finite differences stay meaningful.
  try {
    while (ode.time() < x_end) {
      double h = sample_spacing(ode.time());
      if (mirror > ode.time()) h = std::min(h, sample_spacing(mirror - ode.time()));
      double target = std::min(x_end, ode.time() + h);
      if (next_check != checkpoints.end()) target = std::min(target, *next_check);
      ode.limit_next_step(target);
      ode.step(rhs);
      if (!std::isfinite(ode.state()[0]) || ode.state()[0] * sign <= 0.0) {
        throw Error(ErrorCode::StepFailure, "threshold curve left its branch");
      }
      emit(ode.time(), ode.state()[0]);
      while (next_check != checkpoints.end() && *next_check <= ode.time()) ++next_check;
    }
  } catch (const Error& err) {
    if (ode.time() < 10.0 * x0) {
      throw Error(ErrorCode::SingularityStall,
                  std::string("integrator could not leave the origin: ") + err.what());
    }
    throw;
  }
  return out;
}

/// Delta-squared extrapolation of a sequence with geometric convergence.
inline double aitken(double x0, double x1, double x2) {
  const double d1 = x1 - x0, d2 = x2 - x1;
  const double denom = d2 - d1;
  if (denom == 0.0) return x2;
  return x2 - d2 * d2 / denom;
}

}  // namespace detail

struct CurveMeta {
  std::optional<double> asymptotic_slope;
  std::optional<double> s_star;
  double tol = 1e-10;
  // Weak Q1 only: mismatch where the forward and end-anchored pieces meet.
  std::optional<double> junction_gap;
};

/// Sampled Q-function. The abscissa is s for Qa, Qb, Q1 and tau = s* - s for
/// Q2. Values are cubic Hermite interpolants using the slopes the curve
/// equation assigns to each sample; below the first sample
/// the origin series is used, and Q1 uses its end series near s*.
class ThresholdCurve {
public:
  ThresholdCurve(Branch branch, const Params& params, std::vector<double> x, std::vector<double> q,
                 CurveMeta meta)
      : branch_(branch), params_(params), x_(std::move(x)), q_(std::move(q)), meta_(meta),
        front_(detail::equation_for(branch, params, meta.s_star.value_or(0.0)),
               branch == Branch::Q2 ? -1.0 : 1.0),
        back_(detail::equation_for(Branch::Q2, params, meta.s_star.value_or(0.0)), 1.0) {
    if (regime(params).tag != regime_of(branch)) {
      throw Error(ErrorCode::RegimeMismatch, "curve branch does not match the damping regime");
    }
    if ((branch == Branch::Q1 || branch == Branch::Q2) && !meta_.s_star) {
      throw Error(ErrorCode::InvalidParameters, "weak-regime curves need s*");
    }
    if (x_.size() != q_.size() || x_.size() < 4) {
      throw Error(ErrorCode::InvalidParameters, "a curve needs at least four samples");
    }
    for (std::size_t i = 0; i < x_.size(); ++i) {
      if (!std::isfinite(x_[i]) || !std::isfinite(q_[i]) || (i > 0 && !(x_[i] > x_[i - 1]))) {
        throw Error(ErrorCode::InvalidParameters, "curve samples must be finite and increasing");
      }
    }
    // Hermite data: slopes come from the curve equation itself.
    const auto eq = detail::equation_for(branch, params, meta.s_star.value_or(0.0));
    std::vector<double> dq(x_.size());
    for (std::size_t i = 0; i < x_.size(); ++i) {
      dq[i] = eq.slope(x_[i], q_[i]);
    }
    auto xs = x_;
    auto qs = q_;
    interp_.emplace(std::move(xs), std::move(qs), std::move(dq));
  }

  Branch branch() const { return branch_; }
  Regime regime_tag() const { return regime_of(branch_); }
  const Params& params() const { return params_; }
  const std::vector<double>& x() const { return x_; }
  const std::vector<double>& q() const { return q_; }
  const CurveMeta& meta() const { return meta_; }
  std::optional<double> asymptotic_slope() const { return meta_.asymptotic_slope; }
  std::optional<double> s_star_value() const { return meta_.s_star; }
  double x_min() const { return x_.front(); }
  double x_max() const { return x_.back(); }

  /// Largest abscissa at which the curve can be evaluated.
  double coverage() const {
    return branch_ == Branch::Q1 ? *meta_.s_star : x_.back();
  }

  double operator()(double x) const {
    if (!(x >= 0.0)) throw Error(ErrorCode::CurveRangeExceeded, "negative curve abscissa");
    if (x < x_.front()) return front_(x);
    if (x <= x_.back()) return (*interp_)(x);
    if (branch_ == Branch::Q1 && x <= *meta_.s_star) return back_(*meta_.s_star - x);
    throw Error(ErrorCode::CurveRangeExceeded,
                "curve evaluated beyond its sampled range (" + std::to_string(x) + " > " +
                    std::to_string(x_.back()) + ")");
  }

private:
  Branch branch_;
  Params params_;
  std::vector<double> x_;
  std::vector<double> q_;
  CurveMeta meta_;
  detail::SingularSeries front_;
  detail::SingularSeries back_;
  std::optional<boost::math::interpolators::cubic_hermite<std::vector<double>>> interp_;
};

struct CurveOptions {
  double tol = 1e-10;
  double seed = 1e-8;
};

inline double default_s_max(const Params& p) { return 1e3 / p.c(); }

/// Qa (Strong), Qb (Borderline) or Q1 (Weak) from the origin. For Q1 s_max
/// is capped at s* - seed; the stretch beyond 1/c is integrated from the s*
/// end with the exact s*, and the two pieces must agree where they meet.
inline ThresholdCurve integrate_Q(const Params& p, Branch branch, std::optional<double> s_max = {},
                                  CurveOptions opt = {}) {
  if (branch == Branch::Q2) {
    throw Error(ErrorCode::InvalidParameters, "use integrate_Q2 for the lower weak curve");
  }
  auto reg = regime(p);
  if (reg.tag != regime_of(branch)) {
    throw Error(ErrorCode::RegimeMismatch, "curve branch does not match the damping regime");
  }
  const auto eq = detail::equation_for(branch, p, 0.0);
  CurveMeta meta;
  meta.tol = opt.tol;

  if (branch != Branch::Q1) {
    const double end = s_max.value_or(default_s_max(p));
    if (!(end > opt.seed)) throw Error(ErrorCode::InvalidParameters, "s_max must exceed the seed");
    auto tr = detail::trace_curve(eq, 1.0, opt.seed, end, opt.tol, {end / 4.0, end / 2.0});
    ThresholdCurve probe(branch, p, tr.x, tr.q, meta);
    meta.asymptotic_slope =
        detail::aitken(probe(end / 4.0) / (end / 4.0), probe(end / 2.0) / (end / 2.0),
                       probe(end) / end);
    return ThresholdCurve(branch, p, std::move(tr.x), std::move(tr.q), meta);
  }

  const double ss = s_star(p);
  meta.s_star = ss;
  const double end = std::min(s_max.value_or(ss), ss - opt.seed);
  if (!(end > opt.seed)) throw Error(ErrorCode::InvalidParameters, "s_max must exceed the seed");
  const double join = std::min(1.0 / p.c(), end);

  auto head = detail::trace_curve(eq, 1.0, opt.seed, join, opt.tol);
  if (join < end) {
    // Near s* Q1 is the upper branch of the tau = s* - s equation.
    const auto tail_eq = detail::equation_for(Branch::Q2, p, ss);
    auto tail = detail::trace_curve(tail_eq, 1.0, ss - end, ss - join, opt.tol, {}, ss);
    meta.junction_gap = std::abs(tail.q.back() - head.q.back()) / std::abs(head.q.back());
    head.x.pop_back();
    head.q.pop_back();
    for (std::size_t i = tail.x.size(); i-- > 0;) {
      head.x.push_back(ss - tail.x[i]);
      head.q.push_back(tail.q[i]);
    }
  }
  return ThresholdCurve(branch, p, std::move(head.x), std::move(head.q), meta);
}

/// Lower weak-regime curve Q2 as a function of tau = s* - s on [seed, tau_max].
inline ThresholdCurve integrate_Q2(const Params& p, double s_star_value,
                                   std::optional<double> tau_max = {}, CurveOptions opt = {}) {
  if (regime(p).tag != Regime::Weak) {
    throw Error(ErrorCode::RegimeMismatch, "Q2 exists only for weak damping");
  }
  if (!(p.c() * s_star_value > 1.0)) {
    throw Error(ErrorCode::InvalidParameters, "s* must exceed 1/c");
  }
  const double end = std::min(tau_max.value_or(s_star_value), s_star_value - opt.seed);
  CurveMeta meta;
  meta.tol = opt.tol;
  meta.s_star = s_star_value;
  const auto eq = detail::equation_for(Branch::Q2, p, s_star_value);
  auto tr = detail::trace_curve(eq, -1.0, opt.seed, end, opt.tol);
  return ThresholdCurve(Branch::Q2, p, std::move(tr.x), std::move(tr.q), meta);
}

/// Continues Q(s)/s from the end of a Strong or Borderline curve to s_far in
/// the variables u = ln s, w = Q/s, where dw/du = nu - w + k(1/s - c)/w.
inline double far_field_ratio(const ThresholdCurve& curve, double s_far, double tol = 1e-12) {
  if (curve.branch() != Branch::Qa && curve.branch() != Branch::Qb) {
    throw Error(ErrorCode::InvalidParameters, "far-field ratio applies to Qa and Qb");
  }
  const double nu = curve.params().nu(), k = curve.params().k(), c = curve.params().c();
  const double s0 = curve.x_max();
  if (!(s_far > s0)) return curve.q().back() / s0;
  auto rhs = [=](const detail::State<1>& w, detail::State<1>& dw, double u) {
    dw[0] = nu - w[0] + k * (std::exp(-u) - c) / w[0];
  };
  typename detail::DenseIntegrator<1>::Settings cfg;
  cfg.rel_tol = tol;
  cfg.abs_tol = tol;
  cfg.initial_dt = 1e-3;
  const double u_end = std::log(s_far);
  detail::DenseIntegrator<1> ode(std::log(s0), {curve.q().back() / s0}, cfg);
  while (ode.time() < u_end) {
    ode.limit_next_step(u_end);
    ode.step(rhs);
  }
  return ode.state()[0];
}

/// The curves bounding the smooth region for one parameter set.
struct CurveSet {
  Params params;
  Regime regime_tag;
  std::optional<ThresholdCurve> upper;  // Qa or Qb
  std::optional<ThresholdCurve> q1;
  std::optional<ThresholdCurve> q2;
  std::optional<double> s_star;
};

inline CurveSet build_curves(const Params& p, std::optional<double> s_max = {},
                             CurveOptions opt = {}) {
  CurveSet set{p, regime(p).tag, std::nullopt, std::nullopt, std::nullopt, std::nullopt};
  switch (set.regime_tag) {
    case Regime::Strong: set.upper = integrate_Q(p, Branch::Qa, s_max, opt); break;
    case Regime::Borderline: set.upper = integrate_Q(p, Branch::Qb, s_max, opt); break;
    case Regime::Weak: {
      set.s_star = s_star(p);
      set.q1 = integrate_Q(p, Branch::Q1, std::nullopt, opt);
      set.q2 = integrate_Q2(p, *set.s_star, std::nullopt, opt);
      break;
    }
  }
  return set;
}

/// Region membership in the (rho, d) plane. curve_gap is the signed distance
/// in d to the nearest bounding curve, positive inside the smooth region.
inline Verdict classify_by_curve(const Params& p, double rho0, double d0, const CurveSet& curves,
                                 ClassifyOptions opt = {}) {
  if (!(rho0 > 0.0) || !std::isfinite(rho0)) {
    throw Error(ErrorCode::NonpositiveDensity, "rho0 must be positive");
  }
  Verdict v;
  v.regime = curves.regime_tag;
  const double s0 = 1.0 / rho0;
  auto band = [&](double d_curve) { return opt.boundary_tol * std::max(1.0, std::abs(d_curve)); };

  if (curves.regime_tag != Regime::Weak) {
    if (!curves.upper) throw Error(ErrorCode::InvalidParameters, "missing upper curve");
    if (s0 > curves.upper->coverage()) {
      throw Error(ErrorCode::CurveRangeExceeded, "1/rho0 lies beyond the sampled curve");
    }
    const double d_curve = -rho0 * (*curves.upper)(s0);
    const double gap = d0 - d_curve;
    v.diagnostics.curve_gap = gap;
    v.diagnostics.margin = -gap;
    if (std::abs(gap) <= band(d_curve)) v.outcome = Outcome::Boundary;
    else v.outcome = gap > 0.0 ? Outcome::GlobalSmooth : Outcome::FiniteTimeBreakdown;
    return v;
  }

  if (!curves.q1 || !curves.q2 || !curves.s_star) {
    throw Error(ErrorCode::InvalidParameters, "missing weak-regime curves");
  }
  const double ss = *curves.s_star;
  if (s0 >= ss) {
    // rho0 <= 1/s*: every slope breaks down. The distance to the vertex
    // (1/s*, 0) is reported for the boundary band.
    const double gap = -std::hypot(rho0 - 1.0 / ss, d0);
    v.diagnostics.curve_gap = gap;
    v.diagnostics.margin = -gap;
    v.outcome = std::abs(gap) <= opt.boundary_tol ? Outcome::Boundary
                                                  : Outcome::FiniteTimeBreakdown;
    return v;
  }
  if (ss - s0 > curves.q2->coverage()) {
    throw Error(ErrorCode::CurveRangeExceeded, "s* - 1/rho0 lies beyond the sampled Q2 curve");
  }
  const double lower = -rho0 * (*curves.q1)(s0);
  const double upper = -rho0 * (*curves.q2)(ss - s0);
  const double gap_lo = d0 - lower, gap_hi = upper - d0;
  const double gap = std::min(gap_lo, gap_hi);
  v.diagnostics.curve_gap = gap;
  v.diagnostics.margin = -gap;
  const double d_near = gap_lo < gap_hi ? lower : upper;
  if (std::abs(gap) <= band(d_near)) v.outcome = Outcome::Boundary;
  else v.outcome = gap > 0.0 ? Outcome::GlobalSmooth : Outcome::FiniteTimeBreakdown;
  return v;
}

/// Membership of (r, s) in the invariant region of the (r, s) plane.
inline bool inside_region(const CurveSet& curves, double r, double s) {
  if (!(s > 0.0)) return false;
  if (curves.regime_tag != Regime::Weak) return r < (*curves.upper)(s);
  const double ss = *curves.s_star;
  if (s >= ss) return false;
  return r < (*curves.q1)(s) && r > (*curves.q2)(ss - s);
}

}  // namespace ctep
