#pragma once

// Parameters, damping regimes and the (rho, d) <-> (r, s) change of variables
// for the damped Euler-Poisson characteristic system
//
//   rho' + rho d = 0,   d' + d^2 + nu d = k (rho - c).
//
// With r = -d/rho and s = 1/rho the system becomes linear:
//
//   r' = -nu r - k (1 - c s),   s' = -r.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <string_view>

#include "ctep/error.hpp"

namespace ctep {

inline constexpr double kDefaultBoundaryTol = 1e-9;

enum class Regime { Strong, Borderline, Weak };

constexpr std::string_view to_string(Regime r) {
  switch (r) {
    case Regime::Strong: return "Strong";
    case Regime::Borderline: return "Borderline";
    case Regime::Weak: return "Weak";
  }
  return "Unknown";
}

inline std::optional<Regime> regime_from_string(std::string_view s) {
  if (s == "Strong") return Regime::Strong;
  if (s == "Borderline") return Regime::Borderline;
  if (s == "Weak") return Regime::Weak;
  return std::nullopt;
}

/// Damping coefficient nu, forcing constant k and background density c.
/// All three must be strictly positive. A regime can be forced, which is how
/// callers pin nu = 2 sqrt(kc) when the data come from an exact relation.
class Params {
public:
  Params(double nu, double k, double c, std::optional<Regime> forced = std::nullopt)
      : nu_(nu), k_(k), c_(c), forced_(forced) {
    if (!(nu > 0.0) || !(k > 0.0) || !(c > 0.0) || !std::isfinite(nu) || !std::isfinite(k) ||
        !std::isfinite(c)) {
      throw Error(ErrorCode::InvalidParameters, "nu, k and c must be finite and positive");
    }
  }

  double nu() const noexcept { return nu_; }
  double k() const noexcept { return k_; }
  double c() const noexcept { return c_; }
  std::optional<Regime> forced_regime() const noexcept { return forced_; }

  Params with_regime(Regime r) const { return Params(nu_, k_, c_, r); }

private:
  double nu_;
  double k_;
  double c_;
  std::optional<Regime> forced_;
};

/// Spectral data of the linearized characteristic dynamics. Fields that do
/// not apply to the tag are NaN.
struct DampingRegime {
  static constexpr double nan = std::numeric_limits<double>::quiet_NaN();

  Regime tag = Regime::Weak;
  // Strong: roots of c L^2 - nu L + k = 0, 0 < lambda1 < lambda2.
  double lambda1 = nan;
  double lambda2 = nan;
  // Strong: eigenvalues (-nu -+ sqrt(nu^2 - 4kc)) / 2 of the linear system.
  double lambda_minus = nan;
  double lambda_plus = nan;
  // Weak: oscillation frequency sqrt(kc - nu^2/4).
  double mu = nan;
  // Borderline: double eigenvalue -nu/2.
  double lambda = nan;
};

/// True when nu^2 and 4kc agree to within a few units of roundoff.
inline bool is_borderline_band(double nu, double k, double c) {
  const double nu2 = nu * nu;
  const double fkc = 4.0 * k * c;
  const double eps = std::numeric_limits<double>::epsilon() / 2.0;
  return std::abs(nu2 - fkc) <= 8.0 * eps * std::max(nu2, fkc);
}

inline DampingRegime regime(const Params& p) {
  const double nu = p.nu(), k = p.k(), c = p.c();
  const double disc = nu * nu - 4.0 * k * c;

  Regime tag;
  if (p.forced_regime()) {
    tag = *p.forced_regime();
    if (tag == Regime::Strong && !(disc > 0.0)) {
      throw Error(ErrorCode::RegimeMismatch, "forced Strong regime requires nu^2 > 4kc");
    }
    if (tag == Regime::Weak && !(disc < 0.0)) {
      throw Error(ErrorCode::RegimeMismatch, "forced Weak regime requires nu^2 < 4kc");
    }
  } else if (is_borderline_band(nu, k, c)) {
    tag = Regime::Borderline;
  } else {
    tag = disc > 0.0 ? Regime::Strong : Regime::Weak;
  }

  DampingRegime out;
  out.tag = tag;
  switch (tag) {
    case Regime::Strong: {
      const double root = std::sqrt(disc);
      // lambda1 from the product of roots to avoid cancellation.
      out.lambda2 = (nu + root) / (2.0 * c);
      out.lambda1 = 2.0 * k / (nu + root);
      out.lambda_minus = -c * out.lambda2;
      out.lambda_plus = -c * out.lambda1;
      break;
    }
    case Regime::Borderline:
      out.lambda = -nu / 2.0;
      break;
    case Regime::Weak:
      out.mu = std::sqrt(k * c - nu * nu / 4.0);
      break;
  }
  return out;
}

/// A point of the (rho, d) plane: density and velocity slope u_x.
struct PhaseRhoD {
  double rho;
  double d;
};

/// A point of the linearized (r, s) plane. s = 0 is the blowup locus.
struct PhaseRS {
  double r;
  double s;
};

inline PhaseRS to_rs(PhaseRhoD p) {
  if (!(p.rho > 0.0)) throw Error(ErrorCode::NonpositiveDensity, "rho must be positive");
  return {-p.d / p.rho, 1.0 / p.rho};
}

inline PhaseRhoD from_rs(PhaseRS p) {
  if (!(p.s > 0.0)) throw Error(ErrorCode::NonpositiveS, "s must be positive");
  return {1.0 / p.s, -p.r / p.s};
}

enum class Outcome { GlobalSmooth, FiniteTimeBreakdown, Boundary };

constexpr std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::GlobalSmooth: return "GlobalSmooth";
    case Outcome::FiniteTimeBreakdown: return "FiniteTimeBreakdown";
    case Outcome::Boundary: return "Boundary";
  }
  return "Unknown";
}

struct Diagnostics {
  std::optional<double> extremum_time;
  std::optional<double> s_min;
  std::optional<double> breakdown_time;
  // Signed distance to the deciding inequality; >= 0 means the non-strict
  // breakdown inequality holds. Units depend on the classifier.
  std::optional<double> margin;
  // Distance in d from the nearest threshold curve (curve classifier only).
  std::optional<double> curve_gap;
};

struct Verdict {
  Outcome outcome = Outcome::GlobalSmooth;
  Regime regime = Regime::Weak;
  Diagnostics diagnostics;

  /// Outcome with Boundary resolved by the non-strict breakdown inequality.
  bool breaks_down() const {
    if (outcome == Outcome::Boundary) return diagnostics.margin.value_or(0.0) >= 0.0;
    return outcome == Outcome::FiniteTimeBreakdown;
  }
};

struct ClassifyOptions {
  double boundary_tol = kDefaultBoundaryTol;
};

}  // namespace ctep
