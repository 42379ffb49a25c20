#pragma once

// Three-way agreement between the closed-form inequalities, membership in the
// region bounded by the threshold curves, and direct trajectory integration.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "ctep/characteristic_sim.hpp"
#include "ctep/core_model.hpp"
#include "ctep/explicit_thresholds.hpp"
#include "ctep/parallel.hpp"
#include "ctep/threshold_curves.hpp"

namespace ctep {

/// Inclusive grid lo:hi:count along one axis.
struct Axis {
  double lo = 0.0;
  double hi = 1.0;
  int count = 2;

  double at(int i) const { return count == 1 ? lo : lo + (hi - lo) * i / (count - 1); }
};

struct VerifyGrid {
  Axis rho0{0.05, 4.0, 41};
  Axis d0{-6.0, 2.0, 41};
};

struct VerifyOptions {
  double boundary_tol = kDefaultBoundaryTol;
  // Points this close to a threshold (relative, in each method's own gap
  // measure) are excluded rather than compared.
  double exclusion_band = 1e-6;
  HorizonPolicy horizon;
  unsigned jobs = 1;
};

struct PointCheck {
  double rho0 = 0.0;
  double d0 = 0.0;
  std::optional<Outcome> formula;
  std::optional<Outcome> curve;
  std::optional<Outcome> oracle;
  bool excluded = false;
  std::string reason;  // why excluded, empty otherwise
  double curve_gap = 0.0;

  bool agree() const { return formula == curve && curve == oracle; }
};

struct VerifyReport {
  Regime regime_tag = Regime::Strong;
  std::size_t n_points = 0;
  std::size_t n_agree = 0;
  std::size_t n_boundary_excluded = 0;
  std::vector<PointCheck> disagreements;
  std::optional<PointCheck> max_disagreement;  // largest |curve gap| among disagreements

  bool passed() const { return disagreements.empty(); }
  double excluded_fraction() const {
    return n_points ? static_cast<double>(n_boundary_excluded) / n_points : 0.0;
  }
};

inline PointCheck check_point(const Params& p, double rho0, double d0, const CurveSet& curves,
                              const VerifyOptions& opt) {
  PointCheck pc;
  pc.rho0 = rho0;
  pc.d0 = d0;
  ClassifyOptions co{opt.boundary_tol};

  auto exclude = [&](std::string why) {
    pc.excluded = true;
    if (pc.reason.empty()) pc.reason = std::move(why);
  };

  const auto formula = classify(p, rho0, d0, co);
  pc.formula = formula.outcome;
  if (formula.outcome == Outcome::Boundary) exclude("formula boundary");
  if (formula.diagnostics.margin) {
    ThresholdTest t;
    switch (regime(p).tag) {
      case Regime::Strong: t = strong_threshold_test(p, rho0, d0); break;
      case Regime::Borderline: t = borderline_threshold_test(p, rho0, d0); break;
      case Regime::Weak: t = weak_threshold_test(p, rho0, d0); break;
    }
    if (t.sign_conditions && t.relative_gap <= opt.exclusion_band) exclude("formula band");
  }

  const auto by_curve = classify_by_curve(p, rho0, d0, curves, co);
  pc.curve = by_curve.outcome;
  pc.curve_gap = by_curve.diagnostics.curve_gap.value_or(0.0);
  if (by_curve.outcome == Outcome::Boundary) exclude("curve boundary");
  if (std::abs(pc.curve_gap) <= opt.exclusion_band * std::max(1.0, std::abs(d0))) {
    exclude("curve band");
  }

  try {
    pc.oracle = oracle_classify(p, rho0, d0, opt.horizon, co).outcome;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::Inconclusive) throw;
    exclude("oracle inconclusive");
  }
  return pc;
}

inline VerifyReport verify_agreement(const Params& p, const VerifyGrid& grid,
                                     const CurveSet& curves, const VerifyOptions& opt = {}) {
  const std::size_t n = static_cast<std::size_t>(grid.rho0.count) * grid.d0.count;
  auto checks = parallel_map(n, opt.jobs, [&](std::size_t idx) {
    const int i = static_cast<int>(idx / grid.d0.count), j = static_cast<int>(idx % grid.d0.count);
    return check_point(p, grid.rho0.at(i), grid.d0.at(j), curves, opt);
  });

  VerifyReport rep;
  rep.regime_tag = regime(p).tag;
  rep.n_points = n;
  for (auto& pc : checks) {
    if (pc.excluded) {
      ++rep.n_boundary_excluded;
      continue;
    }
    if (pc.agree()) {
      ++rep.n_agree;
      continue;
    }
    if (!rep.max_disagreement || std::abs(pc.curve_gap) > std::abs(rep.max_disagreement->curve_gap)) {
      rep.max_disagreement = pc;
    }
    rep.disagreements.push_back(std::move(pc));
  }
  return rep;
}

}  // namespace ctep
