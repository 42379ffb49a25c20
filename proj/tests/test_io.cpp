#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <sstream>

#include "ctep/io.hpp"
#include "oracles.hpp"

using namespace ctep;

namespace {

std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("ctep_io_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::filesystem::path fixture(const std::string& name) {
  const char* root = std::getenv("CTEP_FIXTURES");
  return std::filesystem::path(root ? root : "tests/fixtures") / name;
}

}  // namespace

TEST(FormatDouble, RoundTripsRandomValues) {
  oracle::Gen gen(11);
  for (int i = 0; i < 2000; ++i) {
    const double v = std::ldexp(gen.uniform(-1.0, 1.0), static_cast<int>(gen.uniform(-300, 300)));
    EXPECT_EQ(io::parse_double(io::format_double(v), "v"), v);
  }
}

TEST(ParseDouble, RejectsTrailingGarbage) {
  EXPECT_THROW(io::parse_double("1.5x", "v"), Error);
  EXPECT_THROW(io::parse_double("", "v"), Error);
  EXPECT_EQ(io::parse_double(" 2.5", "v"), 2.5);
}

TEST(Csv, QuotedFieldsSurviveRoundTrip) {
  const std::vector<std::string> fields{"plain", "with,comma", "with \"quote\"", ""};
  std::ostringstream out;
  io::CsvWriter w(out, {"a", "b", "c", "d"});
  w.row(fields);
  std::istringstream in(out.str());
  auto t = io::read_csv(in);
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_EQ(t.rows[0], fields);
  EXPECT_EQ(t.find("c"), std::optional<std::size_t>(2));
  EXPECT_FALSE(t.find("z"));
}

TEST(Csv, RecordsEndInCrlf) {
  std::ostringstream out;
  io::CsvWriter w(out, {"x"});
  w.row(std::vector<double>{1.0});
  EXPECT_EQ(out.str(), "x\r\n1\r\n");
}

TEST(Csv, MissingColumnAndBadNumberAreIoErrors) {
  std::istringstream in("x,y\n1,abc\n");
  auto t = io::read_csv(in);
  try {
    t.numbers("y");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::IoError);
  }
  EXPECT_THROW(t.numbers("z"), Error);
}

TEST(CurveFiles, WriteThenReadReproducesSamples) {
  const auto dir = scratch_dir("curve");
  for (auto [p, b] : {std::pair{Params(3, 1, 1), Branch::Qa}, std::pair{Params(2, 1, 1), Branch::Qb},
                      std::pair{Params(1, 1, 1), Branch::Q1}}) {
    const auto curve = integrate_Q(p, b, 50.0);
    const auto path = dir / (std::string(to_string(b)) + ".csv");
    std::ostringstream csv;
    io::write_curve_csv(csv, curve, io::Plane::SQ);
    io::write_text_file(path, csv.str());
    io::write_text_file(io::sidecar_path(path), io::curve_sidecar(curve, io::Plane::SQ).dump());
    const auto back = io::read_curve(path);
    EXPECT_EQ(back.branch(), b);
    EXPECT_EQ(back.x(), curve.x());
    EXPECT_EQ(back.q(), curve.q());
    const double mid = 0.5 * (curve.x().front() + curve.x().back());
    EXPECT_EQ(back(mid), curve(mid));
  }
}

TEST(CurveFiles, SecondaryCurveUsesTauColumn) {
  const Params p(1, 1, 1);
  const auto curve = integrate_Q2(p, s_star(p));
  std::ostringstream csv;
  io::write_curve_csv(csv, curve, io::Plane::SQ);
  std::istringstream in(csv.str());
  auto t = io::read_csv(in);
  ASSERT_EQ(t.header, (std::vector<std::string>{"tau", "s", "Q"}));
  const auto tau = t.numbers("tau"), s = t.numbers("s");
  for (std::size_t i = 0; i < tau.size(); ++i) EXPECT_NEAR(s[i], s_star(p) - tau[i], 1e-9 * s_star(p));
}

TEST(CurveFiles, DensityPlaneStartsAtAnalyticLimit) {
  const Params p(3, 1, 1);
  const auto curve = integrate_Q(p, Branch::Qa, 20.0);
  std::ostringstream csv;
  io::write_curve_csv(csv, curve, io::Plane::RhoD);
  std::istringstream in(csv.str());
  auto t = io::read_csv(in);
  const auto rho = t.numbers("rho"), d = t.numbers("d");
  EXPECT_EQ(rho.back() > rho.front() ? rho.front() : rho.back(), 0.0);
  // d = -Q/s = -rho Q(1/rho); along the curve rho = 1/s.
  for (std::size_t i = 0; i < rho.size(); ++i) {
    if (rho[i] == 0.0) continue;
    EXPECT_NEAR(d[i], -rho[i] * curve(1.0 / rho[i]), 1e-9 * (1.0 + std::abs(d[i])));
  }
  const auto side = io::curve_sidecar(curve, io::Plane::RhoD);
  EXPECT_EQ(side.at("plane"), "rho-d");
  EXPECT_THROW(
      {
        const auto dir = scratch_dir("rhod");
        io::write_text_file(dir / "c.csv", csv.str());
        io::write_text_file(dir / "c.csv.json", side.dump());
        io::read_curve(dir / "c.csv");
      },
      Error);
}

TEST(CurveFiles, MissingSidecarIsIoError) {
  const auto dir = scratch_dir("nosidecar");
  io::write_text_file(dir / "c.csv", "s,Q\r\n1,2\r\n");
  try {
    io::read_curve(dir / "c.csv");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::IoError);
  }
}

TEST(FieldFiles, FixtureLoadsWithCertificate) {
  const auto side = io::read_field_sidecar(fixture("smooth_field.csv.json"));
  EXPECT_EQ(side.decay.delta, 14.0);
  EXPECT_GT(side.decay.bound, 0.0);
  const auto f = io::read_field(fixture("smooth_field.csv"), side);
  EXPECT_EQ(f.size(), 401u);
  EXPECT_NEAR(moments(f).M0, 0.2, 1e-9);
}

TEST(FieldFiles, WriteThenReadIsExact) {
  const auto side = io::read_field_sidecar(fixture("steep_field.csv.json"));
  const auto f = io::read_field(fixture("steep_field.csv"), side);
  const auto dir = scratch_dir("field");
  std::ostringstream csv;
  io::write_field_csv(csv, f);
  io::write_text_file(dir / "f.csv", csv.str());
  const auto g = io::read_field(dir / "f.csv", side);
  EXPECT_EQ(g.alpha(), f.alpha());
  EXPECT_EQ(g.rho0(), f.rho0());
  EXPECT_EQ(g.u0(), f.u0());
  EXPECT_EQ(g.d0(), f.d0());
}

TEST(FieldFiles, MalformedSidecarIsIoError) {
  const auto dir = scratch_dir("badside");
  io::write_text_file(dir / "s.json", "{\"delta\": 2}");
  EXPECT_THROW(io::read_field_sidecar(dir / "s.json"), Error);
  io::write_text_file(dir / "t.json", "not json");
  EXPECT_THROW(io::read_field_sidecar(dir / "t.json"), Error);
}

TEST(VerdictJson, OmitsAbsentDiagnostics) {
  const auto v = classify(Params(3, 1, 1), 1.0, 0.5);
  const auto j = io::verdict_json(v);
  EXPECT_EQ(j.at("outcome"), "GlobalSmooth");
  EXPECT_EQ(j.at("regime"), "Strong");
  for (const auto& [key, value] : j.at("diagnostics").items()) EXPECT_FALSE(value.is_null()) << key;
}
