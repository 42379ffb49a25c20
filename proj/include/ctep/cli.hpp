#pragma once

// Command-line front end: classify | curve | verify | simulate.
//
// Exit codes: 0 success, 1 verify disagreement, 2 configuration error,
// 3 numerical failure, 4 simulated breakdown.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "ctep/aggregation.hpp"
#include "ctep/characteristic_sim.hpp"
#include "ctep/core_model.hpp"
#include "ctep/explicit_thresholds.hpp"
#include "ctep/io.hpp"
#include "ctep/parallel.hpp"
#include "ctep/threshold_curves.hpp"
#include "ctep/verify.hpp"

namespace ctep::cli {

inline constexpr const char* kVersion = "0.1.0";

enum Exit : int { Ok = 0, Disagreement = 1, ConfigError = 2, NumericalFailure = 3, Breakdown = 4 };

/// Configuration problems are the caller's to fix; everything else is a
/// numerical failure.
inline int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidParameters:
    case ErrorCode::NonpositiveDensity:
    case ErrorCode::NonpositiveS:
    case ErrorCode::NonpositiveMass:
    case ErrorCode::RegimeMismatch:
    case ErrorCode::TailTooHeavy:
    case ErrorCode::InvalidField:
    case ErrorCode::IoError: return ConfigError;
    case ErrorCode::SingularityStall:
    case ErrorCode::CurveRangeExceeded:
    case ErrorCode::StepFailure:
    case ErrorCode::Inconclusive: return NumericalFailure;
  }
  return NumericalFailure;
}

struct ConfigFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string subcommand;
  std::optional<double> nu, k, c, M0;
  std::optional<double> rho0, d0;
  std::string grid;
  double tol = 1e-10;
  double quad_tol = kDefaultQuadTol;
  bool quad_tol_set = false;
  double boundary_tol = kDefaultBoundaryTol;
  double exclusion_band = 1e-6;
  std::optional<double> horizon;
  unsigned jobs = default_jobs();
  std::string format;  // empty = subcommand default
  std::string out;
  std::string method = "formula";
  // curve
  std::string branch;
  std::optional<double> smax;
  std::string plane = "s-Q";
  std::string sidecar;
  // verify
  std::vector<std::string> curve_files;
  int max_listed = 20;
  // simulate
  std::string input;
  double T = 20.0;
  int frames = 21;
  std::string times;
  double d_floor = -1e6;
  double cross_tol = kCrossTol;
  std::optional<double> sim_tol;
};

// ---------------------------------------------------------------------------
// Helpers

inline std::map<std::string, Axis> parse_grid(const std::string& spec) {
  std::map<std::string, Axis> axes;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ConfigFailure("grid axis '" + item + "' needs name=lo:hi:count");
    const std::string name = item.substr(0, eq);
    std::vector<std::string> parts;
    std::stringstream rs(item.substr(eq + 1));
    std::string part;
    while (std::getline(rs, part, ':')) parts.push_back(part);
    if (parts.size() != 3) throw ConfigFailure("grid axis '" + item + "' needs lo:hi:count");
    Axis a;
    try {
      a.lo = io::parse_double(parts[0], name);
      a.hi = io::parse_double(parts[1], name);
      std::size_t used = 0;
      a.count = std::stoi(parts[2], &used);
      if (used != parts[2].size()) throw ConfigFailure("bad count");
    } catch (const std::exception&) {
      throw ConfigFailure("cannot parse grid axis '" + item + "'");
    }
    if (a.count < 2) throw ConfigFailure("grid counts must be at least 2");
    if (!(a.hi > a.lo)) throw ConfigFailure("grid axis '" + name + "' needs hi > lo");
    axes[name] = a;
  }
  return axes;
}

inline VerifyGrid grid_from_spec(const std::string& spec) {
  VerifyGrid g;
  if (spec.empty()) return g;
  auto axes = parse_grid(spec);
  if (!axes.count("rho0") || !axes.count("d0") || axes.size() != 2) {
    throw ConfigFailure("grid must define exactly rho0 and d0");
  }
  g.rho0 = axes["rho0"];
  g.d0 = axes["d0"];
  if (!(g.rho0.lo > 0.0)) throw ConfigFailure("rho0 grid must be positive");
  return g;
}

inline Params params_from(const RunConfig& cfg) {
  const bool triple = cfg.nu || cfg.k || cfg.c;
  if (triple && cfg.M0) throw ConfigFailure("give either --nu/--k/--c or --M0, not both");
  if (cfg.M0) return ep_params_of_mass(*cfg.M0);
  if (!(cfg.nu && cfg.k && cfg.c)) throw ConfigFailure("need all of --nu, --k, --c (or --M0)");
  return Params(*cfg.nu, *cfg.k, *cfg.c);
}

inline void validate_common(const RunConfig& cfg) {
  if (!(cfg.tol > 0.0) || !(cfg.quad_tol > 0.0) || !(cfg.boundary_tol > 0.0) ||
      !(cfg.exclusion_band > 0.0)) {
    throw ConfigFailure("tolerances must be positive");
  }
  if (cfg.horizon && !(*cfg.horizon > 0.0)) throw ConfigFailure("--horizon must be positive");
  if (!cfg.format.empty() && cfg.format != "csv" && cfg.format != "json") {
    throw ConfigFailure("--format must be csv or json");
  }
}

inline io::Json meta_json(const RunConfig& cfg) {
  io::Json m;
  m["tool"] = "ctep";
  m["version"] = kVersion;
  m["subcommand"] = cfg.subcommand;
  return m;
}

inline io::Json params_block(const RunConfig& cfg, const Params& p) {
  io::Json j = io::params_json(p);
  if (cfg.M0) {
    j["M0"] = *cfg.M0;
    j["mass_regime"] = std::string(to_string(mass_regime(*cfg.M0)));
  }
  return j;
}

inline void emit_json(std::ostream& out, const io::Json& j) { out << j.dump(2) << "\n"; }

/// Writes to --out when given, otherwise to `fallback`.
inline void deliver(const RunConfig& cfg, std::ostream& fallback, const std::string& text) {
  if (cfg.out.empty()) {
    fallback << text;
  } else {
    io::write_text_file(cfg.out, text);
  }
}

// ---------------------------------------------------------------------------
// Subcommands

inline Verdict classify_with(const RunConfig& cfg, const Params& p, double rho0, double d0,
                             const std::optional<CurveSet>& curves) {
  ClassifyOptions co{cfg.boundary_tol};
  if (cfg.method == "formula") return classify(p, rho0, d0, co);
  if (cfg.method == "curve") return classify_by_curve(p, rho0, d0, *curves, co);
  return oracle_classify(p, rho0, d0, HorizonPolicy{cfg.horizon}, co);
}

inline int cmd_classify(const RunConfig& cfg, std::ostream& out) {
  const Params p = params_from(cfg);
  if (cfg.method != "formula" && cfg.method != "curve" && cfg.method != "oracle") {
    throw ConfigFailure("--method must be formula, curve or oracle");
  }
  std::optional<CurveSet> curves;
  if (cfg.method == "curve") curves = build_curves(p, std::nullopt, CurveOptions{cfg.tol});

  if (cfg.grid.empty()) {
    if (!cfg.rho0 || !cfg.d0) throw ConfigFailure("classify needs --rho0 and --d0, or --grid");
    if (cfg.format == "csv") throw ConfigFailure("single-point classify emits JSON");
    const auto v = classify_with(cfg, p, *cfg.rho0, *cfg.d0, curves);
    io::Json j = io::verdict_json(v);
    j["method"] = cfg.method;
    j["params"] = params_block(cfg, p);
    j["input"] = {{"rho0", *cfg.rho0}, {"d0", *cfg.d0}};
    j["meta"] = meta_json(cfg);
    std::ostringstream s;
    emit_json(s, j);
    deliver(cfg, out, s.str());
    return Ok;
  }

  if (cfg.rho0 || cfg.d0) throw ConfigFailure("--grid excludes --rho0/--d0");
  const VerifyGrid g = grid_from_spec(cfg.grid);
  const std::size_t n = static_cast<std::size_t>(g.rho0.count) * g.d0.count;
  spdlog::info("classifying {} grid points with {} worker(s)", n, cfg.jobs);
  auto verdicts = parallel_map(n, cfg.jobs, [&](std::size_t idx) {
    const double r = g.rho0.at(static_cast<int>(idx / g.d0.count));
    const double d = g.d0.at(static_cast<int>(idx % g.d0.count));
    return classify_with(cfg, p, r, d, curves);
  });

  std::ostringstream s;
  if (cfg.format == "json") {
    io::Json rows = io::Json::array();
    for (std::size_t idx = 0; idx < n; ++idx) {
      io::Json row = io::verdict_json(verdicts[idx]);
      row["rho0"] = g.rho0.at(static_cast<int>(idx / g.d0.count));
      row["d0"] = g.d0.at(static_cast<int>(idx % g.d0.count));
      rows.push_back(std::move(row));
    }
    io::Json j;
    j["method"] = cfg.method;
    j["params"] = params_block(cfg, p);
    j["points"] = std::move(rows);
    j["meta"] = meta_json(cfg);
    emit_json(s, j);
  } else {
    io::CsvWriter w(s, {"rho0", "d0", "outcome"});
    for (std::size_t idx = 0; idx < n; ++idx) {
      w.row(std::vector<std::string>{
          io::format_double(g.rho0.at(static_cast<int>(idx / g.d0.count))),
          io::format_double(g.d0.at(static_cast<int>(idx % g.d0.count))),
          std::string(to_string(verdicts[idx].outcome))});
    }
  }
  deliver(cfg, out, s.str());
  return Ok;
}

inline int cmd_curve(const RunConfig& cfg, std::ostream& out) {
  const Params p = params_from(cfg);
  const auto branch = branch_from_string(cfg.branch);
  if (!branch) throw ConfigFailure("--branch must be one of Qa, Qb, Q1, Q2");
  if (regime_of(*branch) != regime(p).tag) {
    throw ConfigFailure("branch " + cfg.branch + " does not exist in the " +
                        std::string(to_string(regime(p).tag)) + " regime");
  }
  if (cfg.plane != "s-Q" && cfg.plane != "rho-d") throw ConfigFailure("--plane must be s-Q or rho-d");
  if (cfg.smax && !(*cfg.smax > 0.0)) throw ConfigFailure("--smax must be positive");
  const io::Plane plane = cfg.plane == "s-Q" ? io::Plane::SQ : io::Plane::RhoD;

  CurveOptions co{cfg.tol};
  const ThresholdCurve curve = *branch == Branch::Q2 ? integrate_Q2(p, s_star(p), cfg.smax, co)
                                                     : integrate_Q(p, *branch, cfg.smax, co);
  spdlog::info("{} traced with {} samples", cfg.branch, curve.x().size());

  io::Json side = io::curve_sidecar(curve, plane);
  if (cfg.M0) side["params"] = params_block(cfg, p);
  side["meta"] = meta_json(cfg);

  std::ostringstream csv;
  io::write_curve_csv(csv, curve, plane);
  if (cfg.format == "json") {
    io::Json j = side;
    io::Json xs = io::Json::array(), qs = io::Json::array();
    for (double v : curve.x()) xs.push_back(v);
    for (double v : curve.q()) qs.push_back(v);
    j["x"] = std::move(xs);
    j["Q"] = std::move(qs);
    std::ostringstream s;
    emit_json(s, j);
    deliver(cfg, out, s.str());
    return Ok;
  }
  deliver(cfg, out, csv.str());
  std::string side_path = cfg.sidecar;
  if (side_path.empty() && !cfg.out.empty()) side_path = io::sidecar_path(cfg.out).string();
  if (!side_path.empty()) io::write_text_file(side_path, side.dump(2) + "\n");
  return Ok;
}

inline io::Json point_json(const PointCheck& pc) {
  auto name = [](const std::optional<Outcome>& o) {
    return o ? io::Json(std::string(to_string(*o))) : io::Json(nullptr);
  };
  io::Json j;
  j["rho0"] = pc.rho0;
  j["d0"] = pc.d0;
  j["formula"] = name(pc.formula);
  j["curve"] = name(pc.curve);
  j["oracle"] = name(pc.oracle);
  j["curve_gap"] = pc.curve_gap;
  return j;
}

inline int cmd_verify(const RunConfig& cfg, std::ostream& out) {
  const Params p = params_from(cfg);
  const VerifyGrid grid = grid_from_spec(cfg.grid);
  if (cfg.max_listed < 0) throw ConfigFailure("--max-listed must be non-negative");

  CurveSet curves = build_curves(p, std::nullopt, CurveOptions{cfg.tol});
  for (const auto& file : cfg.curve_files) {
    ThresholdCurve loaded = io::read_curve(file);
    const Params& lp = loaded.params();
    if (lp.nu() != p.nu() || lp.k() != p.k() || lp.c() != p.c()) {
      throw ConfigFailure("curve file " + file + " was made for different parameters");
    }
    spdlog::info("using {} from {}", to_string(loaded.branch()), file);
    switch (loaded.branch()) {
      case Branch::Qa:
      case Branch::Qb: curves.upper = std::move(loaded); break;
      case Branch::Q1: curves.q1 = std::move(loaded); break;
      case Branch::Q2: curves.q2 = std::move(loaded); break;
    }
  }

  VerifyOptions vo;
  vo.boundary_tol = cfg.boundary_tol;
  vo.exclusion_band = cfg.exclusion_band;
  vo.horizon = HorizonPolicy{cfg.horizon};
  vo.jobs = cfg.jobs;
  const auto rep = verify_agreement(p, grid, curves, vo);

  io::Json j;
  j["regime"] = std::string(to_string(rep.regime_tag));
  j["params"] = params_block(cfg, p);
  j["grid"] = {{"rho0", {grid.rho0.lo, grid.rho0.hi, grid.rho0.count}},
               {"d0", {grid.d0.lo, grid.d0.hi, grid.d0.count}}};
  j["n_points"] = rep.n_points;
  j["n_agree"] = rep.n_agree;
  j["n_boundary_excluded"] = rep.n_boundary_excluded;
  j["excluded_fraction"] = rep.excluded_fraction();
  j["n_disagree"] = rep.disagreements.size();
  j["passed"] = rep.passed();
  j["max_disagreement_location"] =
      rep.max_disagreement ? point_json(*rep.max_disagreement) : io::Json(nullptr);
  io::Json listed = io::Json::array();
  for (std::size_t i = 0; i < rep.disagreements.size() && i < static_cast<std::size_t>(cfg.max_listed);
       ++i) {
    listed.push_back(point_json(rep.disagreements[i]));
  }
  j["disagreements"] = std::move(listed);
  j["meta"] = meta_json(cfg);
  std::ostringstream s;
  emit_json(s, j);
  deliver(cfg, out, s.str());
  if (!rep.passed()) {
    spdlog::warn("{} of {} compared points disagree", rep.disagreements.size(),
                 rep.n_points - rep.n_boundary_excluded);
  }
  return rep.passed() ? Ok : Disagreement;
}

inline std::vector<double> parse_times(const std::string& spec) {
  std::vector<double> t;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      t.push_back(io::parse_double(item, "--times"));
    } catch (const Error&) {
      throw ConfigFailure("cannot parse --times entry '" + item + "'");
    }
  }
  return t;
}

inline int cmd_simulate(const RunConfig& cfg, std::ostream& out) {
  if (cfg.input.empty()) throw ConfigFailure("simulate needs --input");
  if (cfg.nu || cfg.k || cfg.c || cfg.M0) {
    throw ConfigFailure("simulate takes its mass from the input field");
  }
  if (!std::filesystem::exists(cfg.input)) throw ConfigFailure("input " + cfg.input + " not found");
  const std::string side_path =
      cfg.sidecar.empty() ? io::sidecar_path(cfg.input).string() : cfg.sidecar;
  if (!std::filesystem::exists(side_path)) {
    throw ConfigFailure("field sidecar " + side_path + " not found");
  }
  if (!(cfg.T > 0.0)) throw ConfigFailure("--T must be positive");
  if (cfg.frames < 2) throw ConfigFailure("--frames must be at least 2");
  if (!(cfg.d_floor < 0.0)) throw ConfigFailure("--d-floor must be negative");

  auto side = io::read_field_sidecar(side_path);
  if (cfg.quad_tol_set) side.quad_tol = cfg.quad_tol;
  const AggregationField field = io::read_field(cfg.input, side);

  SimulateOptions so;
  so.T = cfg.T;
  so.n_frames = cfg.frames;
  if (!cfg.times.empty()) so.output_times = parse_times(cfg.times);
  so.d_floor = cfg.d_floor;
  so.cross_tol = cfg.cross_tol;
  if (cfg.sim_tol) so.rel_tol = *cfg.sim_tol;
  so.jobs = cfg.jobs;
  spdlog::info("simulating {} characteristics to T = {}", field.size(), so.T);
  const auto run = simulate(field, so);

  io::Json rep;
  rep["status"] = run.completed() ? "Completed" : "BreakdownDetected";
  if (auto* bd = std::get_if<BreakdownDetected>(&run.terminal)) {
    rep["t_c"] = bd->t_c;
    rep["t_event"] = bd->t_event;
    rep["alpha_star"] = bd->alpha_star;
    rep["kind"] = std::string(to_string(bd->kind));
    rep["d_at_event"] = bd->d_at_event;
  }
  rep["M0"] = run.M0;
  rep["M1"] = run.M1;
  rep["mass_regime"] = std::string(to_string(mass_regime(run.M0)));
  rep["n_alpha"] = field.size();

  if (!cfg.out.empty()) std::filesystem::create_directories(cfg.out);
  io::Json frames = io::Json::array();
  bool all_pass = true;
  for (std::size_t j = 0; j < run.frames.size(); ++j) {
    const auto& fr = run.frames[j];
    const auto audit = audit_frame(fr, field, run.M0, run.M1);
    all_pass = all_pass && audit.pass();
    io::Json fj;
    fj["index"] = j;
    fj["t"] = fr.t;
    if (!cfg.out.empty()) {
      char name[32];
      std::snprintf(name, sizeof name, "frame_%04zu.csv", j);
      std::ostringstream csv;
      io::write_frame_csv(csv, fr, field.alpha());
      io::write_text_file(std::filesystem::path(cfg.out) / name, csv.str());
      fj["file"] = name;
    }
    fj["audits"] = io::audit_json(audit);
    frames.push_back(std::move(fj));
  }
  rep["frames"] = std::move(frames);
  rep["all_audits_pass"] = all_pass;
  rep["meta"] = meta_json(cfg);

  const std::string text = rep.dump(2) + "\n";
  if (!cfg.out.empty()) io::write_text_file(std::filesystem::path(cfg.out) / "report.json", text);
  out << text;
  return run.completed() ? Ok : Breakdown;
}

// ---------------------------------------------------------------------------
// Entry point

inline void configure_logging() {
  static bool done = false;
  if (done) return;
  done = true;
  auto logger = spdlog::stderr_color_mt("ctep");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  const char* env = std::getenv("CT_LOG");
  spdlog::set_level(env ? spdlog::level::from_str(env) : spdlog::level::warn);
}

inline int run(int argc, char** argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  configure_logging();
  RunConfig cfg;
  CLI::App app{"Critical-threshold classification for damped Euler-Poisson characteristics"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  auto add_params = [&](CLI::App* sub) {
    sub->add_option("--nu", cfg.nu, "damping coefficient");
    sub->add_option("--k", cfg.k, "forcing constant");
    sub->add_option("--c", cfg.c, "background density");
    sub->add_option("--M0", cfg.M0, "total mass (aggregation model: nu=1, k=2, c=M0/2)");
  };
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--tol", cfg.tol, "curve integration tolerance");
    sub->add_option("--boundary-tol", cfg.boundary_tol, "width of the Boundary band");
    sub->add_option("--horizon", cfg.horizon, "fixed oracle horizon");
    sub->add_option("--jobs", cfg.jobs, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--format", cfg.format, "csv or json");
    sub->add_option("--out", cfg.out, "output path");
  };

  auto* classify_cmd = app.add_subcommand("classify", "classify initial data (point or grid)");
  add_params(classify_cmd);
  add_common(classify_cmd);
  classify_cmd->add_option("--rho0", cfg.rho0, "initial density");
  classify_cmd->add_option("--d0", cfg.d0, "initial velocity slope");
  classify_cmd->add_option("--grid", cfg.grid, "rho0=lo:hi:n,d0=lo:hi:n");
  classify_cmd->add_option("--method", cfg.method, "formula, curve or oracle");

  auto* curve_cmd = app.add_subcommand("curve", "emit a threshold curve");
  add_params(curve_cmd);
  add_common(curve_cmd);
  curve_cmd->add_option("--branch", cfg.branch, "Qa, Qb, Q1 or Q2")->required();
  curve_cmd->add_option("--smax", cfg.smax, "end of the traced range");
  curve_cmd->add_option("--plane", cfg.plane, "s-Q or rho-d");
  curve_cmd->add_option("--sidecar", cfg.sidecar, "sidecar JSON path");

  auto* verify_cmd = app.add_subcommand("verify", "three-way agreement on a grid");
  add_params(verify_cmd);
  add_common(verify_cmd);
  verify_cmd->add_option("--grid", cfg.grid, "rho0=lo:hi:n,d0=lo:hi:n");
  verify_cmd->add_option("--curve", cfg.curve_files, "curve CSV to use instead of tracing");
  verify_cmd->add_option("--exclusion-band", cfg.exclusion_band, "relative exclusion band");
  verify_cmd->add_option("--max-listed", cfg.max_listed, "disagreements listed in the report");

  auto* sim_cmd = app.add_subcommand("simulate", "aggregation run by characteristics");
  add_common(sim_cmd);
  add_params(sim_cmd);
  sim_cmd->add_option("--input", cfg.input, "CSV alpha,rho0,u0[,d0]");
  sim_cmd->add_option("--sidecar", cfg.sidecar, "JSON {delta, decay_bound, quad_tol}");
  sim_cmd->add_option("--quad-tol", cfg.quad_tol, "quadrature tolerance");
  sim_cmd->add_option("--T", cfg.T, "final time");
  sim_cmd->add_option("--frames", cfg.frames, "equally spaced output frames");
  sim_cmd->add_option("--times", cfg.times, "comma-separated output times");
  sim_cmd->add_option("--d-floor", cfg.d_floor, "blowup floor for d");
  sim_cmd->add_option("--cross-tol", cfg.cross_tol, "characteristic-crossing tolerance");
  sim_cmd->add_option("--sim-tol", cfg.sim_tol, "relative integration tolerance");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return ConfigError;
  }

  for (auto* sub : app.get_subcommands()) cfg.subcommand = sub->get_name();
  cfg.quad_tol_set = sim_cmd->count("--quad-tol") > 0;

  try {
    validate_common(cfg);
    if (cfg.subcommand == "classify") return cmd_classify(cfg, out);
    if (cfg.subcommand == "curve") return cmd_curve(cfg, out);
    if (cfg.subcommand == "verify") return cmd_verify(cfg, out);
    return cmd_simulate(cfg, out);
  } catch (const ConfigFailure& e) {
    io::Json j;
    j["error"] = "ConfigError";
    j["message"] = e.what();
    emit_json(out, j);
    spdlog::error("{}", e.what());
    return ConfigError;
  } catch (const Error& e) {
    emit_json(out, io::error_json(e));
    spdlog::error("{}", e.what());
    return exit_code_for(e.code());
  }
}

}  // namespace ctep::cli
