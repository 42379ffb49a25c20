// Traces the threshold curves for one parameter set per damping regime,
// writes them as rho-d CSV files, and classifies a handful of initial states
// three ways.
//
//   phase_plane_thresholds [output-dir]

#include <cstdio>
#include <filesystem>
#include <sstream>

#include "ctep/characteristic_sim.hpp"
#include "ctep/explicit_thresholds.hpp"
#include "ctep/io.hpp"
#include "ctep/threshold_curves.hpp"

using namespace ctep;

int main(int argc, char** argv) {
  const std::filesystem::path dir = argc > 1 ? argv[1] : "phase_plane_out";
  std::filesystem::create_directories(dir);

  const std::pair<double, double> probes[] = {{1.0, 0.5}, {0.3, -2.0}, {2.0, -3.0}, {0.3, -4.0}};

  for (const Params& p : {Params(3, 1, 1), Params(2, 1, 1), Params(1, 1, 1)}) {
    const auto set = build_curves(p, 50.0);
    const auto tag = std::string(to_string(set.regime_tag));
    std::printf("%s damping (nu=%g, k=%g, c=%g)\n", tag.c_str(), p.nu(), p.k(), p.c());

    auto dump = [&](const ThresholdCurve& c) {
      const auto path = dir / (tag + "_" + std::string(to_string(c.branch())) + ".csv");
      std::ostringstream csv;
      io::write_curve_csv(csv, c, io::Plane::RhoD);
      io::write_text_file(path, csv.str());
      std::printf("  %s: %zu samples -> %s\n", to_string(c.branch()).data(), c.x().size(),
                  path.string().c_str());
    };
    if (set.upper) dump(*set.upper);
    if (set.q1) dump(*set.q1);
    if (set.q2) dump(*set.q2);
    if (set.s_star) std::printf("  s* = %.10f\n", *set.s_star);

    for (auto [rho0, d0] : probes) {
      const auto formula = classify(p, rho0, d0);
      const auto curve = classify_by_curve(p, rho0, d0, set);
      const auto oracle = oracle_classify(p, rho0, d0);
      std::printf("  rho0=%-4g d0=%-5g formula=%-19s curve=%-19s oracle=%s\n", rho0, d0,
                  to_string(formula.outcome).data(), to_string(curve.outcome).data(),
                  to_string(oracle.outcome).data());
    }
  }
}
