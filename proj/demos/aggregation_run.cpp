// Builds a Gaussian aggregation field, checks each path against the mass
// threshold, runs it by characteristics, and prints the conservation audits.
//
//   aggregation_run [mass] [velocity-amplitude]

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <numbers>

#include "ctep/aggregation.hpp"

using namespace ctep;

int main(int argc, char** argv) {
  const double mass = argc > 1 ? std::atof(argv[1]) : 0.2;
  const double amp = argc > 2 ? std::atof(argv[2]) : 0.1;

  const std::size_t n = 801;
  const double L = 12.0, delta = 14.0;
  auto rho = [&](double x) { return mass / std::sqrt(2.0 * std::numbers::pi) * std::exp(-0.5 * x * x); };
  std::vector<double> a(n), r(n), u(n), d(n);
  for (std::size_t i = 0; i < n; ++i) {
    a[i] = -L + 2.0 * L * i / (n - 1);
    r[i] = rho(a[i]);
    u[i] = -amp * std::tanh(2.0 * a[i]);
    d[i] = -2.0 * amp / std::pow(std::cosh(2.0 * a[i]), 2);
  }
  // Gaussian decay certificate: (1 + x^2)^{(2 + delta)/2} rho(x) peaks at
  // x^2 = 1 + delta.
  const double xm = std::sqrt(1.0 + delta);
  const double bound = 1.01 * std::pow(1.0 + xm * xm, 0.5 * (2.0 + delta)) * rho(xm);
  const AggregationField field(a, r, u, d, DecayCertificate{delta, bound});

  const auto m = moments(field);
  std::printf("M0 = %.12f (%s), M1 = %.3e\n", m.M0, to_string(mass_regime(m.M0)).data(), m.M1);
  std::size_t breaking = 0;
  for (std::size_t i = 0; i < n; ++i) {
    breaking += classify_aggregation(m.M0, r[i], d[i]).breaks_down();
  }
  std::printf("paths predicted to break down: %zu of %zu\n", breaking, n);

  SimulateOptions opt;
  opt.T = 10.0;
  opt.n_frames = 6;
  opt.jobs = default_jobs();
  const auto run = simulate(field, opt);
  for (const auto& fr : run.frames) {
    const auto rep = audit_frame(fr, field, run.M0, run.M1);
    std::printf("t=%5.2f  mass %.1e  momentum %.1e  Q-moment %.1e  slope %.1e  min dx/da %.3f  %s\n",
                fr.t, rep.mass.residual, rep.momentum.residual, rep.e_moment.residual,
                rep.slope.residual, rep.min_dxdalpha, rep.pass() ? "ok" : "AUDIT FAILED");
  }
  if (const auto* bd = std::get_if<BreakdownDetected>(&run.terminal)) {
    std::printf("breakdown (%s) at t_c = %.8f, alpha = %.4f\n", to_string(bd->kind).data(), bd->t_c,
                bd->alpha_star);
  } else {
    std::printf("completed to T = %g\n", opt.T);
  }
}
