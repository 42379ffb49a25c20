#pragma once

// Pressureless damped Euler with the kernel W(x) = -|x| + x^2/2:
//
//   rho_t + (rho u)_x = 0,   u_t + u u_x + u = -(W' * rho).
//
// Along particle paths this is the characteristic system with nu = 1, k = 2,
// c = M0/2. The full solution is simulated by the method of characteristics
// through the closed per-path system
//
//   f' = -f d,  z' = -z - Q,  d' = -d^2 - d + 2f - M0,  Q' = -M1 e^{-t} + M0 z,
//
// with x' = z and the deformation dx/dalpha = 1 + int z_alpha, where
// a = z_alpha solves a'' + a' + M0 a = 0.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "ctep/characteristic_sim.hpp"
#include "ctep/core_model.hpp"
#include "ctep/detail/ode.hpp"
#include "ctep/detail/roots.hpp"
#include "ctep/explicit_thresholds.hpp"
#include "ctep/parallel.hpp"
#include "ctep/quadrature.hpp"
#include "ctep/threshold_curves.hpp"

namespace ctep {

inline constexpr double kCriticalMass = 0.25;
inline constexpr double kDefaultQuadTol = 1e-9;
inline constexpr double kCrossTol = 1e-6;

enum class MassRegime { Subcritical, Critical, Supercritical };

constexpr std::string_view to_string(MassRegime m) {
  switch (m) {
    case MassRegime::Subcritical: return "Subcritical";
    case MassRegime::Critical: return "Critical";
    case MassRegime::Supercritical: return "Supercritical";
  }
  return "Unknown";
}

inline void require_mass(double M0) {
  if (!(M0 > 0.0) || !std::isfinite(M0)) {
    throw Error(ErrorCode::NonpositiveMass, "total mass must be positive");
  }
}

inline MassRegime mass_regime(double M0) {
  require_mass(M0);
  if (M0 == kCriticalMass) return MassRegime::Critical;
  return M0 < kCriticalMass ? MassRegime::Subcritical : MassRegime::Supercritical;
}

/// (nu, k, c) = (1, 2, M0/2). The critical mass is pinned to Borderline.
inline Params ep_params_of_mass(double M0) {
  require_mass(M0);
  if (M0 == kCriticalMass) return Params(1.0, 2.0, M0 / 2.0, Regime::Borderline);
  return Params(1.0, 2.0, M0 / 2.0);
}

/// Left end 1/gamma of the supercritical region in rho; gamma = s*.
inline double gamma(double M0) {
  require_mass(M0);
  if (!(M0 > kCriticalMass)) {
    throw Error(ErrorCode::RegimeMismatch, "gamma is defined for supercritical mass only");
  }
  return 2.0 / M0 * (1.0 + std::exp(std::numbers::pi / std::sqrt(4.0 * M0 - 1.0)));
}

inline Verdict classify_aggregation(double M0, double rho0, double d0, ClassifyOptions opt = {}) {
  return classify(ep_params_of_mass(M0), rho0, d0, opt);
}

/// The mass-regime breakdown inequalities written directly in M0, rho0 and
/// d0 = u0'. Same conventions as ThresholdTest: margin >= 0 when the
/// non-strict breakdown inequality holds.
inline ThresholdTest mass_threshold_test(double M0, double rho0, double d0) {
  require_mass(M0);
  detail::require_density(rho0);
  const double half = 0.5 * M0;
  ThresholdTest out;
  switch (mass_regime(M0)) {
    case MassRegime::Subcritical: {
      const double root = std::sqrt(1.0 - 4.0 * M0);
      const double l1 = (1.0 - root) / M0, l2 = (1.0 + root) / M0;
      out.sign_conditions = std::max(d0, d0 + l2 * (half - rho0)) < 0.0;
      const double x2 = (half * l2 * d0 + M0 - 2.0 * rho0) / (2.0 * rho0);
      const double x1 = (half * l1 * d0 + M0 - 2.0 * rho0) / (2.0 * rho0);
      out.lhs = std::pow(std::abs(x2), l1);
      out.rhs = std::pow(std::abs(x1), l2);
      out.margin = l2 * std::log(std::abs(x1)) - l1 * std::log(std::abs(x2));
      out.relative_gap = -std::expm1(-std::abs(out.margin));
      break;
    }
    case MassRegime::Critical: {
      const double q = M0 * d0 + half - rho0;
      out.sign_conditions = std::max(d0, q) < 0.0;
      out.lhs = std::log(-q / rho0);
      out.rhs = M0 * d0 / q;
      out.margin = out.lhs - out.rhs;
      out.relative_gap = detail::relative_difference(out.lhs, out.rhs);
      break;
    }
    case MassRegime::Supercritical: {
      const double m = M0 - 0.25, sm = std::sqrt(m), pi = std::numbers::pi;
      const double denom = d0 + 2.0 * M0 - 4.0 * rho0;
      const double gap = 4.0 * (rho0 - half);
      if (d0 == 0.0 && denom == 0.0) return out;
      double beta, angle;
      if (denom == 0.0) {
        angle = d0 > 0.0 ? pi / 2.0 : -pi / 2.0;
        beta = pi;
      } else {
        angle = std::atan(2.0 * d0 * sm / denom);
        if (d0 < std::min(0.0, gap)) beta = 0.0;
        else if (gap < d0) beta = pi;
        else beta = 2.0 * pi;  // includes d0 = 0 with rho0 > M0/2
      }
      const double t_star = (beta + angle) / sm;
      out.sign_conditions = true;
      const double shift = d0 + (half - rho0) / M0;
      out.lhs = shift * shift;
      out.rhs = m * (4.0 * rho0 * rho0 / (M0 * M0) * (M0 * std::exp(t_star) / m - 1.0) +
                     (4.0 * rho0 - M0) / M0);
      out.relative_gap = detail::relative_difference(out.lhs, out.rhs);
      out.margin = out.lhs >= out.rhs ? out.relative_gap : -out.relative_gap;
      break;
    }
  }
  return out;
}

/// Threshold curves in the aggregation variables: R_a, R_b, R_1 and R_2 are
/// the Q-curves at (1, 2, M0/2), and gamma plays the role of s*.
inline CurveSet aggregation_curves(double M0, std::optional<double> s_max = std::nullopt,
                                   CurveOptions opt = {}) {
  return build_curves(ep_params_of_mass(M0), s_max, opt);
}

// ---------------------------------------------------------------------------
// Initial data

/// Declared far-field decay <alpha>^{2+delta} rho0 <= bound.
struct DecayCertificate {
  double delta = 1.0;
  double bound = 1.0;
};

struct TailEstimate {
  double mass = 0.0;
  double first_moment = 0.0;
  double momentum = 0.0;
  double e0 = 0.0;

  double worst() const { return std::max({mass, first_moment, momentum, e0}); }
};

class AggregationField {
public:
  /// Validates the samples and the decay certificate. A missing d0 is taken
  /// from second-order differences of u0.
  AggregationField(std::vector<double> alpha, std::vector<double> rho0, std::vector<double> u0,
                   std::optional<std::vector<double>> d0, DecayCertificate decay,
                   double quad_tol = kDefaultQuadTol)
      : alpha_(std::move(alpha)),
        rho0_(std::move(rho0)),
        u0_(std::move(u0)),
        decay_(decay),
        quad_tol_(quad_tol) {
    const std::size_t n = alpha_.size();
    if (n < 5) throw Error(ErrorCode::InvalidField, "need at least five grid points");
    if (rho0_.size() != n || u0_.size() != n || (d0 && d0->size() != n)) {
      throw Error(ErrorCode::InvalidField, "field arrays differ in length");
    }
    if (!(decay_.delta > 0.0) || !(decay_.bound > 0.0)) {
      throw Error(ErrorCode::InvalidField, "decay certificate needs delta > 0 and bound > 0");
    }
    if (!(quad_tol_ > 0.0)) throw Error(ErrorCode::InvalidField, "quad_tol must be positive");
    for (std::size_t i = 0; i < n; ++i) {
      if (!std::isfinite(alpha_[i]) || !std::isfinite(u0_[i]) || !std::isfinite(rho0_[i])) {
        throw Error(ErrorCode::InvalidField, "non-finite field value at index " + std::to_string(i));
      }
      if (i > 0 && !(alpha_[i] > alpha_[i - 1])) {
        throw Error(ErrorCode::InvalidField, "alpha grid must be strictly increasing");
      }
      if (!(rho0_[i] > 0.0)) {
        throw Error(ErrorCode::InvalidField, "rho0 must be positive at index " + std::to_string(i));
      }
      const double weight = std::pow(1.0 + alpha_[i] * alpha_[i], 0.5 * (2.0 + decay_.delta));
      if (weight * rho0_[i] > decay_.bound) {
        throw Error(ErrorCode::InvalidField,
                    "decay certificate violated at alpha = " + std::to_string(alpha_[i]));
      }
    }
    d0_ = d0 ? std::move(*d0) : quad::derivative(alpha_, u0_);
    for (double v : d0_) {
      if (!std::isfinite(v)) throw Error(ErrorCode::InvalidField, "non-finite d0");
    }
  }

  const std::vector<double>& alpha() const { return alpha_; }
  const std::vector<double>& rho0() const { return rho0_; }
  const std::vector<double>& u0() const { return u0_; }
  const std::vector<double>& d0() const { return d0_; }
  const DecayCertificate& decay() const { return decay_; }
  double quad_tol() const { return quad_tol_; }
  std::size_t size() const { return alpha_.size(); }

  /// Analytic bounds on the contributions beyond the grid, from the decay
  /// certificate and |u0| growing at most like max|d0| past the ends.
  TailEstimate tails() const {
    const double p = 2.0 + decay_.delta, B = decay_.bound;
    const double lip = std::ranges::max(d0_, {}, [](double v) { return std::abs(v); });
    auto side = [&](double A, double u_end) {
      // int_A^inf <x>^{-p} and int_A^inf x <x>^{-p}, A measured outward.
      double m0, m1;
      if (A >= 1.0) {
        m0 = std::pow(A, 1.0 - p) / (p - 1.0);
        m1 = std::pow(A, 2.0 - p) / decay_.delta;
      } else {
        m0 = (1.0 - A) + 1.0 / (p - 1.0);
        m1 = (1.0 - A) * std::max(1.0, std::abs(A)) + 1.0 / decay_.delta;
      }
      TailEstimate t;
      t.mass = B * m0;
      t.first_moment = B * m1;
      t.momentum = B * (std::abs(u_end) * m0 + std::abs(lip) * m1);
      return t;
    };
    auto lo = side(-alpha_.front(), u0_.front());
    auto hi = side(alpha_.back(), u0_.back());
    TailEstimate out;
    out.mass = lo.mass + hi.mass;
    out.first_moment = lo.first_moment + hi.first_moment;
    out.momentum = lo.momentum + hi.momentum;
    const double reach = std::max(std::abs(alpha_.front()), std::abs(alpha_.back()));
    out.e0 = out.mass * (reach + 3.0) + out.first_moment;
    return out;
  }

private:
  std::vector<double> alpha_;
  std::vector<double> rho0_;
  std::vector<double> u0_;
  std::vector<double> d0_;
  DecayCertificate decay_;
  double quad_tol_;
};

struct Moments {
  double M0;
  double M1;
  double M0_error;  // Richardson estimate
  double M1_error;
  TailEstimate tails;
};

inline Moments moments(const AggregationField& field) {
  auto tails = field.tails();
  if (tails.worst() > field.quad_tol()) {
    char msg[160];
    std::snprintf(msg, sizeof msg,
                  "decay-bound tail estimate %.3g exceeds quad_tol %.3g; widen the grid or "
                  "sharpen the certificate",
                  tails.worst(), field.quad_tol());
    throw Error(ErrorCode::TailTooHeavy, msg);
  }
  const auto& a = field.alpha();
  std::vector<double> mom(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) mom[i] = field.rho0()[i] * field.u0()[i];
  auto m0 = quad::simpson_with_error(a, field.rho0());
  auto m1 = quad::simpson_with_error(a, mom);
  return {m0.value, m1.value, m0.error, m1.error, tails};
}

/// E0(alpha) = int [-sgn(alpha - beta) + alpha - beta] rho0(beta) dbeta in the
/// running form (alpha + 1) M0 - int y rho0 - 2 int_{-inf}^{alpha} rho0.
inline std::vector<double> compute_E0(const AggregationField& field) {
  const auto mom = moments(field);
  const auto& a = field.alpha();
  const auto& rho = field.rho0();
  std::vector<double> yrho(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) yrho[i] = a[i] * rho[i];
  const double first = quad::simpson(a, yrho);
  const auto running = quad::cumulative_simpson(a, rho);
  std::vector<double> e0(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    e0[i] = (a[i] + 1.0) * mom.M0 - first - 2.0 * running[i];
  }
  return e0;
}

/// sup over t in [0, horizon] of |a(alpha, t)| over the grid, from the exact
/// solution of a'' + a' + M0 a = 0 with a(0) = d0, a'(0) = -d0 + 2 rho0 - M0.
inline double deformation_bound(const AggregationField& field, double M0, double horizon) {
  const Params p = ep_params_of_mass(M0);
  double sup = 0.0;
  for (std::size_t i = 0; i < field.size(); ++i) {
    const double a0 = field.d0()[i];
    const double v0 = -a0 + 2.0 * field.rho0()[i] - M0;
    LinearFlow flow(p, {-v0, 1.0 / p.c() + a0});
    sup = std::max(sup, std::abs(a0));
    sup = std::max(sup, std::abs(flow.y(horizon)));
    // Interior extrema of a are roots of a'; bracket them on a fine scan.
    constexpr int kScan = 256;
    double t_prev = 0.0, v_prev = flow.dy(0.0);
    for (int j = 1; j <= kScan; ++j) {
      const double t = horizon * j / kScan;
      const double v = flow.dy(t);
      if ((v_prev < 0.0) != (v < 0.0)) {
        const double te = detail::refine_root([&](double s) { return flow.dy(s); }, t_prev, t,
                                              1e-14 * std::max(1.0, t));
        sup = std::max(sup, std::abs(flow.y(te)));
      }
      t_prev = t;
      v_prev = v;
    }
  }
  return sup;
}

// ---------------------------------------------------------------------------
// Simulation

struct SimulationFrame {
  double t = 0.0;
  std::vector<double> x;
  std::vector<double> f;
  std::vector<double> z;
  std::vector<double> d;
  std::vector<double> Q;
  std::vector<double> dxdalpha;
};

enum class BreakdownKind { DensityBlowup, CharacteristicCrossing };

constexpr std::string_view to_string(BreakdownKind k) {
  return k == BreakdownKind::DensityBlowup ? "DensityBlowup" : "CharacteristicCrossing";
}

struct SimCompleted {
  double T;
};

struct BreakdownDetected {
  double t_c;        // extrapolated singular time
  double t_event;    // when the floor or crossing tolerance was reached
  double alpha_star;
  std::size_t index;
  BreakdownKind kind;
  double d_at_event;
};

using SimulationTerminal = std::variant<SimCompleted, BreakdownDetected>;

struct SimulationResult {
  std::vector<SimulationFrame> frames;
  SimulationTerminal terminal;
  double M0 = 0.0;
  double M1 = 0.0;
  std::vector<double> E0;

  bool completed() const { return std::holds_alternative<SimCompleted>(terminal); }
};

struct SimulateOptions {
  double T = 20.0;
  // Output times in [0, T]; empty means n_frames equally spaced including 0 and T.
  std::vector<double> output_times;
  int n_frames = 21;
  double rel_tol = 1e-11;
  double abs_tol = 1e-13;
  double d_floor = -1e6;
  double cross_tol = kCrossTol;
  unsigned jobs = 1;
};

namespace detail {

// f, z, d, Q, x, dx/dalpha, a = z_alpha, a'
using PathState = State<8>;

struct PathEvent {
  double t_event;
  double t_c;
  BreakdownKind kind;
  double d;
};

struct PathRun {
  std::vector<PathState> at_outputs;  // one per output time reached
  std::optional<PathEvent> event;
};

inline PathRun integrate_path(const PathState& y0, double M0, double M1,
                              const std::vector<double>& outputs, const SimulateOptions& opt) {
  auto rhs = [M0, M1](const PathState& y, PathState& dy, double t) {
    const double f = y[0], z = y[1], d = y[2], Q = y[3], a = y[6], b = y[7];
    dy[0] = -f * d;
    dy[1] = -z - Q;
    dy[2] = -d * d - d + 2.0 * f - M0;
    dy[3] = -M1 * std::exp(-t) + M0 * z;
    dy[4] = z;
    dy[5] = a;
    dy[6] = b;
    dy[7] = -b - M0 * a;
  };

  PathRun run;
  DenseIntegrator<8>::Settings cfg;
  cfg.rel_tol = opt.rel_tol;
  cfg.abs_tol = opt.abs_tol;
  cfg.initial_dt = 1e-3;
  DenseIntegrator<8> ode(0.0, y0, cfg);

  std::size_t next = 0;
  while (next < outputs.size() && outputs[next] <= 0.0) {
    run.at_outputs.push_back(y0);
    ++next;
  }
  auto tripped = [&](const PathState& y) {
    return y[2] <= opt.d_floor || y[5] <= opt.cross_tol;
  };

  while (ode.time() < opt.T) {
    ode.limit_next_step(opt.T);
    auto [t0, t1] = ode.step(rhs);
    const auto& y = ode.state();
    if (!std::isfinite(y[2]) || y[2] >= -opt.d_floor) {
      throw Error(ErrorCode::StepFailure, "d left the admissible range upward");
    }
    double t_stop = t1;
    if (tripped(y)) {
      t_stop = refine_root([&](double t) { return tripped(ode.at(t)) ? 1.0 : -1.0; }, t0, t1,
                           1e-15 * std::max(1.0, t1));
      auto ye = ode.at(t_stop);
      PathEvent ev;
      ev.t_event = t_stop;
      ev.d = ye[2];
      if (ye[2] <= opt.d_floor) {
        ev.kind = BreakdownKind::DensityBlowup;
        ev.t_c = t_stop + 1.0 / std::abs(ye[2]);  // d ~ -1/(t_c - t)
      } else {
        ev.kind = BreakdownKind::CharacteristicCrossing;
        ev.t_c = t_stop + ye[5] / std::max(std::abs(ye[6]), 1e-300);
      }
      run.event = ev;
    }
    while (next < outputs.size() && outputs[next] <= t_stop) {
      run.at_outputs.push_back(outputs[next] == t1 ? y : ode.at(outputs[next]));
      ++next;
    }
    if (run.event) break;
  }
  return run;
}

}  // namespace detail

inline SimulationResult simulate(const AggregationField& field, SimulateOptions opt = {}) {
  if (!(opt.T > 0.0)) throw Error(ErrorCode::InvalidParameters, "T must be positive");
  if (!(opt.d_floor < 0.0) || !(opt.cross_tol > 0.0) || !(opt.cross_tol < 1.0)) {
    throw Error(ErrorCode::InvalidParameters, "need d_floor < 0 and 0 < cross_tol < 1");
  }
  std::vector<double> outputs = opt.output_times;
  if (outputs.empty()) {
    const int n = std::max(2, opt.n_frames);
    for (int j = 0; j < n; ++j) outputs.push_back(opt.T * j / (n - 1));
  }
  std::ranges::sort(outputs);
  for (double t : outputs) {
    if (!(t >= 0.0 && t <= opt.T)) {
      throw Error(ErrorCode::InvalidParameters, "output times must lie in [0, T]");
    }
  }

  SimulationResult out;
  const auto mom = moments(field);
  out.M0 = mom.M0;
  out.M1 = mom.M1;
  out.E0 = compute_E0(field);
  const double M0 = mom.M0, M1 = mom.M1;

  const auto runs = parallel_map(field.size(), opt.jobs, [&](std::size_t i) {
    const double rho = field.rho0()[i], d = field.d0()[i];
    detail::PathState y0{rho, field.u0()[i], d, out.E0[i], field.alpha()[i], 1.0, d,
                         -d + 2.0 * rho - M0};
    return detail::integrate_path(y0, M0, M1, outputs, opt);
  });

  std::optional<BreakdownDetected> first;
  double first_event = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto& ev = runs[i].event;
    if (!ev) continue;
    first_event = std::min(first_event, ev->t_event);
    if (!first || ev->t_c < first->t_c) {
      first = BreakdownDetected{ev->t_c, ev->t_event, field.alpha()[i], i, ev->kind, ev->d};
    }
  }

  for (std::size_t j = 0; j < outputs.size() && outputs[j] < first_event; ++j) {
    SimulationFrame fr;
    fr.t = outputs[j];
    for (const auto& run : runs) {
      const auto& y = run.at_outputs[j];
      fr.f.push_back(y[0]);
      fr.z.push_back(y[1]);
      fr.d.push_back(y[2]);
      fr.Q.push_back(y[3]);
      fr.x.push_back(y[4]);
      fr.dxdalpha.push_back(y[5]);
    }
    out.frames.push_back(std::move(fr));
  }
  if (first) out.terminal = *first;
  else out.terminal = SimCompleted{opt.T};
  return out;
}

// ---------------------------------------------------------------------------
// Audits

struct AuditTolerances {
  double mass_rel = 1e-8;
  double moment_factor = 10.0;  // times quad_tol
  double slope = 1e-3;
};

struct AuditCheck {
  double residual = 0.0;
  double tolerance = 0.0;
  bool pass() const { return residual <= tolerance; }
};

struct AuditReport {
  double t = 0.0;
  AuditCheck mass;       // |int f dx/dalpha - M0| / M0
  AuditCheck transport;  // max |f dx/dalpha - rho0| / rho0
  AuditCheck momentum;   // |int z rho0 - M1 e^{-t}|
  AuditCheck e_moment;   // |int Q rho0|
  AuditCheck slope;      // max interior |d - z_alpha / x_alpha|
  double min_dxdalpha = 0.0;

  bool pass() const {
    return mass.pass() && transport.pass() && momentum.pass() && e_moment.pass() && slope.pass();
  }
};

inline AuditReport audit_frame(const SimulationFrame& fr, const AggregationField& field,
                               double M0, double M1, AuditTolerances tol = {}) {
  const auto& a = field.alpha();
  const auto& rho = field.rho0();
  const std::size_t n = a.size();
  std::vector<double> mass(n), zr(n), qr(n);
  double transport = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mass[i] = fr.f[i] * fr.dxdalpha[i];
    zr[i] = fr.z[i] * rho[i];
    qr[i] = fr.Q[i] * rho[i];
    transport = std::max(transport, std::abs(mass[i] - rho[i]) / rho[i]);
  }
  const double moment_tol = tol.moment_factor * field.quad_tol();

  AuditReport r;
  r.t = fr.t;
  r.mass = {std::abs(quad::simpson(a, mass) - M0) / M0, tol.mass_rel};
  r.transport = {transport, tol.mass_rel};
  r.momentum = {std::abs(quad::simpson(a, zr) - M1 * std::exp(-fr.t)), moment_tol};
  r.e_moment = {std::abs(quad::simpson(a, qr)), moment_tol};

  const auto z_a = quad::derivative(a, fr.z);
  const auto x_a = quad::derivative(a, fr.x);
  double slope = 0.0;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    slope = std::max(slope, std::abs(fr.d[i] - z_a[i] / x_a[i]));
  }
  r.slope = {slope, tol.slope};
  r.min_dxdalpha = std::ranges::min(fr.dxdalpha);
  return r;
}

}  // namespace ctep
