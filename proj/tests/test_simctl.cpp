#include <cmath>
#include <sstream>

#include "bess/error.hpp"
#include "bess/simctl.hpp"
#include "doctest.h"
#include "json.hpp"
#include "test_support.hpp"

using namespace bess;
using doctest::Approx;

namespace {

ScenarioSpec parse(const std::string& s) {
  std::istringstream in(s);
  return parse_scenario(in);
}

ControlRecord record(double df, double p0, double pstar, double pnaive) {
  ControlRecord r;
  r.delta_f_hz = df;
  r.target.p_kw = p0;
  r.optimal.p_kw = pstar;
  r.p_naive_kw = pnaive;
  return r;
}

std::vector<GridSample> flat(std::size_t n, double f, double v) {
  std::vector<GridSample> t;
  for (std::size_t i = 0; i < n; ++i) t.push_back({double(i), f, v});
  return t;
}

}  // namespace

TEST_CASE("generator") {
  const auto c = generate_trace(0, 0, 50.0, 21.192, 20, 3);
  REQUIRE(c.size() == 20);
  for (std::size_t i = 0; i < c.size(); ++i) {
    CHECK(c[i].t_s == double(i));
    CHECK(c[i].freq_hz == 50.0);
    CHECK(c[i].v_mv_kv == 21.192);
  }
  const auto a = generate_trace(0.017818, 0.0672, 50, 21.192, 1000, 42);
  const auto b = generate_trace(0.017818, 0.0672, 50, 21.192, 1000, 42);
  const auto other = generate_trace(0.017818, 0.0672, 50, 21.192, 1000, 43);
  bool same = true, differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    same = same && a[i].freq_hz == b[i].freq_hz && a[i].v_mv_kv == b[i].v_mv_kv;
    differs = differs || a[i].freq_hz != other[i].freq_hz;
  }
  CHECK(same);
  CHECK(differs);

  CHECK_THROWS_AS(generate_trace(-1, 0, 50, 21, 10, 1), DomainError);
  CHECK_THROWS_AS(generate_trace(0, 0, 50, 21, 0, 1), DomainError);
}

TEST_CASE("generator statistics at 1e5 samples") {
  const auto t = generate_trace(0.01782, 0.0672, 50, 21.192, 100000, 8);
  double m = 0;
  for (const auto& s : t) m += s.freq_hz;
  m /= t.size();
  double var = 0;
  for (const auto& s : t) var += (s.freq_hz - m) * (s.freq_hz - m);
  const double sd = std::sqrt(var / (t.size() - 1));
  CHECK(std::abs(sd / 0.01782 - 1.0) < 0.02);
  CHECK(std::abs(m - 50.0) < 1e-3);
}

TEST_CASE("generator spec strings") {
  CHECK(TraceGenerator::is_generator("gen:sigma_f=1"));
  CHECK_FALSE(TraceGenerator::is_generator("trace.csv"));
  const auto g = TraceGenerator::parse("gen:sigma_f=0.02,sigma_v=0.05,mu_f=49.99,mu_v=21,n=50,seed=9");
  CHECK(g.sigma_f_hz == 0.02);
  CHECK(g.sigma_v_kv == 0.05);
  CHECK(g.mu_f_hz == 49.99);
  CHECK(g.mu_v_kv == 21.0);
  CHECK(*g.n == 50);
  CHECK(g.seed == 9);
  CHECK(generate_trace(g, 300).size() == 50);
  CHECK(generate_trace(TraceGenerator::parse("gen:sigma_f=0"), 12).size() == 12);
  CHECK_THROWS_AS(TraceGenerator::parse("gen:bogus=1"), InputError);
  CHECK_THROWS_AS(TraceGenerator::parse("gen:n=2.5"), InputError);
  CHECK_THROWS(TraceGenerator::parse("gen:sigma_f"));
  CHECK_THROWS_AS(TraceGenerator::parse("file.csv"), InputError);
}

TEST_CASE("trace CSV round trip") {
  const auto t = generate_trace(0.02, 0.07, 50, 21.192, 25, 4);
  std::stringstream io;
  write_trace_csv(io, t);
  const auto back = read_trace_csv(io);
  REQUIRE(back.size() == t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    CHECK(back[i].t_s == t[i].t_s);
    CHECK(back[i].freq_hz == Approx(t[i].freq_hz).epsilon(1e-9));
    CHECK(back[i].v_mv_kv == Approx(t[i].v_mv_kv).epsilon(1e-9));
  }
}

TEST_CASE("trace CSV errors") {
  auto read = [](const std::string& s) {
    std::istringstream in(s);
    return read_trace_csv(in);
  };
  CHECK_THROWS_AS(read(""), ParseError);
  CHECK_THROWS_AS(read("time,f,v\n"), ParseError);
  CHECK(read("timestamp_s,freq_hz,v_mv_kv\r\n0,50,21\r\n").size() == 1);
  CHECK_THROWS_AS(read("timestamp_s,freq_hz,v_mv_kv\n0,50\n"), ParseError);
  CHECK_THROWS_AS(read("timestamp_s,freq_hz,v_mv_kv\n0,50,21\n0,50,21\n"), ParseError);
  CHECK_THROWS_AS(read("timestamp_s,freq_hz,v_mv_kv\n0,60,21\n"), ParseError);
  CHECK_THROWS_AS(read("timestamp_s,freq_hz,v_mv_kv\n0,fifty,21\n"), ParseError);
  try {
    read("timestamp_s,freq_hz,v_mv_kv\n0,50,21\n1,50,-3\n");
    FAIL("no error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
}

TEST_CASE("scenario documents") {
  const auto s = parse("name = demo\nalpha0 = 19810\nbeta0 = 8.39\nc_shrink = 7/9\nlambda_q = 0.5\n"
                       "duration = 60\ntrace = gen:sigma_f=0.01\n");
  CHECK(s.name == "demo");
  CHECK(s.controller.droop.alpha0_kw_per_hz == 19810);
  CHECK(s.controller.c_shrink == 7.0 / 9.0);
  CHECK(s.controller.droop.lambda_q == 0.5);
  CHECK(s.steps() == 60);
  CHECK(s.trace == "gen:sigma_f=0.01");
  CHECK(s.controller.transformer.x_t_ohm == Approx(8.971e-3).epsilon(1e-4));

  CHECK(parse("alpha0 = 1\nbeta0 = 1\nx_t = 0.02\n").controller.transformer.x_t_ohm == 0.02);

  CHECK_THROWS_AS(parse("alpha0 = 1\n"), ValidationError);                      // beta0 missing
  CHECK_THROWS_AS(parse("alpha0 = 1\nbeta0 = 1\nalpah = 3\n"), ValidationError);  // typo
  CHECK_THROWS_AS(parse("alpha0 = 1\nbeta0 = 1\nduration = 0\n"), ValidationError);
  CHECK_THROWS_AS(parse("alpha0 = 1\nbeta0 = 1\nsoc_init = 0.95\n"), ValidationError);
  CHECK_THROWS_AS(parse("alpha0 = 1\nbeta0 = 1\nc_shrink = 2\n"), ValidationError);
  CHECK_THROWS_AS(parse("alpha0 = x\nbeta0 = 1\n"), ParseError);
}

TEST_CASE("shipped presets") {
  const double alpha[] = {9003, 9905, 19810, 29715};
  const double beta[] = {8.39, 8.39, 8.39, 12.57};
  for (int i = 0; i < 4; ++i) {
    const auto s = load_scenario_file(testdata::path("scenarios/scenario" + std::to_string(i + 1) + ".cfg"));
    CHECK(s.controller.droop.alpha0_kw_per_hz == alpha[i]);
    CHECK(s.controller.droop.beta0_kvar_per_v == beta[i]);
    CHECK(s.duration_s == 300);
    CHECK(TraceGenerator::is_generator(s.trace));
  }
}

TEST_CASE("energy metrics") {
  const auto one = energy_metrics(std::vector<ControlRecord>{record(0.0588, 0, 0, 0)}, 9003, 1.0);
  CHECK(one.e_exp_kwh == Approx(9003 * 0.0588 / 3600));
  CHECK(one.e_exp_kwh == Approx(0.14705).epsilon(1e-4));

  const auto zero = energy_metrics(std::vector<ControlRecord>(3), 9003, 1.0);
  CHECK(zero.e_exp_kwh == 0.0);
  CHECK(zero.e_star_kwh == 0.0);
  CHECK(zero.e_0_kwh == 0.0);
  CHECK_FALSE(zero.ratio_star.has_value());

  std::vector<ControlRecord> full;
  for (double df : {0.01, -0.02, 0.005}) full.push_back(record(df, 9003 * df, 9003 * df, 9003 * df));
  const auto eq = energy_metrics(full, 9003, 1.0);
  CHECK(eq.e_star_kwh == Approx(eq.e_exp_kwh));
  CHECK(*eq.ratio_star == Approx(1.0));

  CHECK_THROWS_AS(energy_metrics(std::vector<ControlRecord>{}, 1, 1), InsufficientDataError);
}

TEST_CASE("run at the reference point delivers nothing") {
  ScenarioSpec spec;
  spec.duration_s = 30;
  const auto r = run_scenario(spec, flat(30, 50.0, 21.192), testdata::curves(), testdata::params());
  CHECK(r.records.size() == 30);
  CHECK(r.report.e_exp_kwh == 0.0);
  CHECK(r.report.e_star_kwh == 0.0);
  CHECK(r.report.e_0_kwh == 0.0);
}

TEST_CASE("small deviations: all three energies equal") {
  ScenarioSpec spec;
  spec.duration_s = 300;
  const auto trace = generate_trace(0.005, 0.01, 50, 21.192, 300, 2);
  const auto r = run_scenario(spec, trace, testdata::curves(), testdata::params());
  const auto c = count_outcomes(r.records);
  REQUIRE(c.clipped == 0);
  CHECK(r.report.e_star_kwh == Approx(r.report.e_exp_kwh).epsilon(1e-12));
  CHECK(r.report.e_0_kwh == r.report.e_star_kwh);
}

TEST_CASE("ordering of the energies under heavy gains") {
  auto spec = load_scenario_file(testdata::path("scenarios/scenario4.cfg"));
  const auto trace = resolve_trace(spec.trace, spec.steps(), 12);
  const auto r = run_scenario(spec, trace, testdata::curves(), testdata::params());
  const auto& e = r.report;
  CHECK(e.e_0_kwh >= 0.0);
  CHECK(e.e_0_kwh <= e.e_star_kwh + 1e-9);
  if (count_outcomes(r.records).exceeds_target == 0) CHECK(e.e_star_kwh <= e.e_exp_kwh);
}

TEST_CASE("trace shorter than the horizon") {
  ScenarioSpec spec;
  spec.duration_s = 10;
  CHECK_THROWS_AS(run_scenario(spec, flat(9, 50, 21.192), testdata::curves(), testdata::params()), InputError);
  CHECK_THROWS_AS(resolve_trace("", 10, std::nullopt), InputError);
  CHECK_THROWS_AS(resolve_trace("/nonexistent/trace.csv", 10, std::nullopt), InputError);
}

TEST_CASE("records CSV round trip keeps the energy accounting") {
  auto spec = load_scenario_file(testdata::path("scenarios/scenario3.cfg"));
  spec.duration_s = 60;
  const auto trace = resolve_trace(spec.trace, spec.steps(), std::nullopt);
  const auto r = run_scenario(spec, trace, testdata::curves(), testdata::params());
  std::stringstream io;
  write_records_csv(io, r.records);
  const auto back = read_records_csv(io);
  REQUIRE(back.size() == r.records.size());
  const auto e = energy_metrics(back, spec.controller.droop.alpha0_kw_per_hz, 1.0);
  CHECK(e.e_exp_kwh == Approx(r.report.e_exp_kwh).epsilon(1e-8));
  CHECK(e.e_star_kwh == Approx(r.report.e_star_kwh).epsilon(1e-8));
  CHECK(e.e_0_kwh == Approx(r.report.e_0_kwh).epsilon(1e-8));
  const auto c1 = count_outcomes(r.records), c2 = count_outcomes(back);
  CHECK(c1.clipped == c2.clipped);
  CHECK(c1.fallback == c2.fallback);
}

TEST_CASE("summary JSON") {
  ScenarioSpec spec;
  spec.duration_s = 5;
  const auto r = run_scenario(spec, generate_trace(0.02, 0.05, 50, 21.192, 5, 1), testdata::curves(),
                              testdata::params());
  std::ostringstream out;
  write_summary_json(out, spec, r);
  const auto j = nlohmann::json::parse(out.str());
  CHECK(j["scenario"] == "scenario");
  CHECK(j["energy"]["steps"] == 5);
  CHECK(j["energy"]["e_exp_kwh"].get<double>() == Approx(r.report.e_exp_kwh));
  const auto k = nlohmann::json::parse(report_json(r.report, count_outcomes(r.records)));
  CHECK(k["e_star_kwh"].get<double>() == Approx(r.report.e_star_kwh));
}
