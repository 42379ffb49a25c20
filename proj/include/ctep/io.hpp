#pragma once

// CSV (RFC 4180, '.' decimal point, 17 significant digits) and JSON (stable
// key order) for verdicts, curves, aggregation fields and simulation output.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ctep/aggregation.hpp"
#include "ctep/core_model.hpp"
#include "ctep/threshold_curves.hpp"

namespace ctep::io {

using Json = nlohmann::ordered_json;

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double parse_double(const std::string& text, const std::string& what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) {
    throw Error(ErrorCode::IoError, "cannot parse '" + text + "' as a number (" + what + ")");
  }
  return v;
}

// ---------------------------------------------------------------------------
// CSV

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::optional<std::size_t> find(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    return std::nullopt;
  }

  std::vector<double> numbers(std::size_t col) const {
    std::vector<double> out;
    out.reserve(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      out.push_back(parse_double(rows[r][col], header[col] + " row " + std::to_string(r + 1)));
    }
    return out;
  }

  std::vector<double> numbers(const std::string& name) const {
    auto col = find(name);
    if (!col) throw Error(ErrorCode::IoError, "missing CSV column '" + name + "'");
    return numbers(*col);
  }
};

inline std::vector<std::string> split_record(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cur += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  if (quoted) throw Error(ErrorCode::IoError, "unterminated quoted CSV field");
  out.push_back(std::move(cur));
  return out;
}

inline CsvTable read_csv(std::istream& in) {
  CsvTable t;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto rec = split_record(line);
    if (first) {
      t.header = std::move(rec);
      first = false;
      continue;
    }
    if (rec.size() != t.header.size()) {
      throw Error(ErrorCode::IoError, "CSV row " + std::to_string(t.rows.size() + 1) + " has " +
                                          std::to_string(rec.size()) + " fields, header has " +
                                          std::to_string(t.header.size()));
    }
    t.rows.push_back(std::move(rec));
  }
  if (first) throw Error(ErrorCode::IoError, "empty CSV input");
  return t;
}

inline CsvTable read_csv_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return read_csv(in);
}

inline std::string quote_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + '"';
}

class CsvWriter {
public:
  CsvWriter(std::ostream& out, const std::vector<std::string>& header) : out_(out) {
    row(header);
  }

  void row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out_ << ',';
      out_ << quote_field(fields[i]);
    }
    out_ << "\r\n";
  }

  void row(const std::vector<double>& values) {
    std::vector<std::string> f;
    f.reserve(values.size());
    for (double v : values) f.push_back(format_double(v));
    row(f);
  }

private:
  std::ostream& out_;
};

inline Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::IoError, path.string() + ": " + e.what());
  }
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << text;
}

// ---------------------------------------------------------------------------
// JSON payloads

inline Json optional_number(const std::optional<double>& v) {
  return v ? Json(*v) : Json(nullptr);
}

inline Json params_json(const Params& p) {
  Json j;
  j["nu"] = p.nu();
  j["k"] = p.k();
  j["c"] = p.c();
  return j;
}

inline Json verdict_json(const Verdict& v) {
  Json j;
  j["outcome"] = std::string(to_string(v.outcome));
  j["regime"] = std::string(to_string(v.regime));
  Json d = Json::object();
  const auto& g = v.diagnostics;
  if (g.extremum_time) d["extremum_time"] = *g.extremum_time;
  if (g.s_min) d["s_min"] = *g.s_min;
  if (g.breakdown_time) d["breakdown_time"] = *g.breakdown_time;
  if (g.margin) d["margin"] = *g.margin;
  if (g.curve_gap) d["curve_gap"] = *g.curve_gap;
  j["diagnostics"] = d;
  return j;
}

inline Json error_json(const Error& e) {
  Json j;
  j["error"] = std::string(to_string(e.code()));
  j["message"] = e.what();
  return j;
}

// ---------------------------------------------------------------------------
// Curves

enum class Plane { SQ, RhoD };

inline std::string abscissa_name(Branch b) { return b == Branch::Q2 ? "tau" : "s"; }

/// Curve samples: (s, Q) or, for Q2, (tau, s, Q) with s = s* - tau; in the
/// RhoD plane, the threshold d = -rho Q(1/rho) ordered by rho. For Qa and Qb
/// the rho = 0 row is the analytic limit d = -lim Q(s)/s.
inline void write_curve_csv(std::ostream& out, const ThresholdCurve& c, Plane plane) {
  const auto& x = c.x();
  const auto& q = c.q();
  if (plane == Plane::SQ) {
    if (c.branch() == Branch::Q2) {
      CsvWriter w(out, {"tau", "s", "Q"});
      for (std::size_t i = 0; i < x.size(); ++i) w.row({x[i], *c.s_star_value() - x[i], q[i]});
    } else {
      CsvWriter w(out, {"s", "Q"});
      for (std::size_t i = 0; i < x.size(); ++i) w.row({x[i], q[i]});
    }
    return;
  }
  CsvWriter w(out, {"rho", "d"});
  const Params& p = c.params();
  if (c.branch() == Branch::Qa || c.branch() == Branch::Qb) {
    const auto reg = regime(p);
    const double slope =
        c.branch() == Branch::Qa ? -reg.lambda_minus : 0.5 * p.nu();  // (nu + sqrt)/2 or nu/2
    w.row({0.0, -slope});
  }
  if (c.branch() == Branch::Q2) {
    const double ss = *c.s_star_value();
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double s = ss - x[i];
      if (s > 0.0) w.row({1.0 / s, -q[i] / s});
    }
    return;
  }
  for (std::size_t i = x.size(); i-- > 0;) w.row({1.0 / x[i], -q[i] / x[i]});
}

inline Json curve_sidecar(const ThresholdCurve& c, Plane plane) {
  Json j;
  j["branch"] = std::string(to_string(c.branch()));
  j["regime"] = std::string(to_string(c.regime_tag()));
  j["params"] = params_json(c.params());
  j["plane"] = plane == Plane::SQ ? "s-Q" : "rho-d";
  j["abscissa"] = abscissa_name(c.branch());
  j["n_samples"] = c.x().size();
  j["x_min"] = c.x_min();
  j["x_max"] = c.x_max();
  j["s_star"] = optional_number(c.s_star_value());
  j["asymptotic_slope"] = optional_number(c.asymptotic_slope());
  j["junction_gap"] = optional_number(c.meta().junction_gap);
  j["tol"] = c.meta().tol;
  return j;
}

inline std::filesystem::path sidecar_path(const std::filesystem::path& csv) {
  return std::filesystem::path(csv.string() + ".json");
}

/// Loads a curve written in the s-Q plane together with its sidecar.
inline ThresholdCurve read_curve(const std::filesystem::path& csv) {
  const Json meta_json = read_json_file(sidecar_path(csv));
  try {
    auto branch = branch_from_string(meta_json.at("branch").get<std::string>());
    if (!branch) throw Error(ErrorCode::IoError, "unknown branch in curve sidecar");
    if (meta_json.value("plane", "s-Q") != "s-Q") {
      throw Error(ErrorCode::IoError, "only s-Q curves can be loaded");
    }
    const auto& pj = meta_json.at("params");
    Params p(pj.at("nu").get<double>(), pj.at("k").get<double>(), pj.at("c").get<double>(),
             regime_of(*branch));
    CurveMeta meta;
    if (!meta_json.at("s_star").is_null()) meta.s_star = meta_json.at("s_star").get<double>();
    if (!meta_json.at("asymptotic_slope").is_null()) {
      meta.asymptotic_slope = meta_json.at("asymptotic_slope").get<double>();
    }
    meta.tol = meta_json.value("tol", 1e-10);
    auto table = read_csv_file(csv);
    auto x = table.numbers(abscissa_name(*branch));
    auto q = table.numbers("Q");
    return ThresholdCurve(*branch, p, std::move(x), std::move(q), meta);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::IoError, "malformed curve sidecar: " + std::string(e.what()));
  }
}

// ---------------------------------------------------------------------------
// Aggregation fields and runs

struct FieldSidecar {
  DecayCertificate decay;
  double quad_tol = kDefaultQuadTol;
};

inline FieldSidecar read_field_sidecar(const std::filesystem::path& path) {
  const Json j = read_json_file(path);
  try {
    FieldSidecar s;
    s.decay.delta = j.at("delta").get<double>();
    s.decay.bound = j.at("decay_bound").get<double>();
    s.quad_tol = j.value("quad_tol", kDefaultQuadTol);
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::IoError, "malformed field sidecar: " + std::string(e.what()));
  }
}

/// Columns alpha, rho0, u0 and optionally d0.
inline AggregationField read_field(const std::filesystem::path& csv, const FieldSidecar& side) {
  auto t = read_csv_file(csv);
  std::optional<std::vector<double>> d0;
  if (t.find("d0")) d0 = t.numbers("d0");
  return AggregationField(t.numbers("alpha"), t.numbers("rho0"), t.numbers("u0"), std::move(d0),
                          side.decay, side.quad_tol);
}

inline void write_field_csv(std::ostream& out, const AggregationField& f) {
  CsvWriter w(out, {"alpha", "rho0", "u0", "d0"});
  for (std::size_t i = 0; i < f.size(); ++i) {
    w.row({f.alpha()[i], f.rho0()[i], f.u0()[i], f.d0()[i]});
  }
}

inline void write_frame_csv(std::ostream& out, const SimulationFrame& fr,
                            const std::vector<double>& alpha) {
  CsvWriter w(out, {"alpha", "x", "f", "z", "d", "Q"});
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    w.row({alpha[i], fr.x[i], fr.f[i], fr.z[i], fr.d[i], fr.Q[i]});
  }
}

inline Json audit_json(const AuditReport& r) {
  auto check = [](const AuditCheck& c) {
    Json j;
    j["residual"] = c.residual;
    j["tolerance"] = c.tolerance;
    j["pass"] = c.pass();
    return j;
  };
  Json j;
  j["t"] = r.t;
  j["mass"] = check(r.mass);
  j["transport"] = check(r.transport);
  j["momentum"] = check(r.momentum);
  j["e_moment"] = check(r.e_moment);
  j["slope"] = check(r.slope);
  j["min_dxdalpha"] = r.min_dxdalpha;
  j["pass"] = r.pass();
  return j;
}

}  // namespace ctep::io
