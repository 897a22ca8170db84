#include <cmath>
#include <random>

#include "bess/error.hpp"
#include "bess/optimizer.hpp"
#include "doctest.h"
#include "table2_oracle.hpp"
#include "test_support.hpp"

using namespace bess;
using doctest::Approx;

namespace {

const PowerInterval kWide{-1e6, 1e6};

FeasibleRegion region_of(std::vector<CurveId> ids, double shrink) {
  return build_region(testdata::curves(), ids, shrink);
}

}  // namespace

TEST_CASE("projection examples") {
  const auto r = region_of({{600, 300}}, 1.0);
  const Weights w;
  CHECK(project_detailed(r, {100, -50}, w, kWide).point == PqPoint{100, -50});

  const auto a = project_detailed(r, {1000, 0}, w, kWide);
  CHECK(a.point.p_kw == Approx(678.71).epsilon(1e-12));
  CHECK(std::abs(a.point.q_kvar) < 1e-9);
  CHECK(a.cell == Cell::Upper);  // both cells reach the same point

  const auto b = project_detailed(r, {0, 1000}, w, kWide);
  CHECK(std::abs(b.point.p_kw) < 1e-9);
  CHECK(b.point.q_kvar == Approx(657.1).epsilon(1e-12));

  // far below: the lower half-disk binds radially
  const auto c = project_detailed(r, {0, -1000}, w, kWide);
  CHECK(c.point.q_kvar == Approx(-719.19).epsilon(1e-12));
  CHECK(c.cell == Cell::Lower);

  ProjectionProblem prob{{1000, 0}, w, r, kWide};
  CHECK(project(prob) == a.point);
}

TEST_CASE("power bounds restrict P") {
  const auto r = region_of({{600, 300}}, 7.0 / 9.0);
  const auto res = project_detailed(r, {400, 100}, {}, {-50, 120});
  CHECK(res.point.p_kw == Approx(120.0));
  CHECK(res.point.q_kvar == Approx(100.0));
  const auto neg = project_detailed(r, {-400, -30}, {}, {-50, 120});
  CHECK(neg.point.p_kw == Approx(-50.0));
}

TEST_CASE("objective") {
  CHECK(objective({1, 2}, {4, 6}, {2, 3}) == 2 * 9 + 3 * 16);
}

TEST_CASE("KKT residual, feasibility and idempotence on random targets") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-1500, 1500), lw(0.05, 4.0), b(0.0, 900.0);
  const std::vector<std::vector<CurveId>> sets{{{600, 300}}, {{550, 300}}, {{500, 300}},
                                               {{500, 330}}, {{500, 270}}, {{600, 300}, {500, 330}},
                                               {{550, 300}, {500, 270}}};
  for (const auto& ids : sets) {
    const auto region = region_of(ids, 7.0 / 9.0);
    for (int k = 0; k < 400; ++k) {
      const PqPoint t{u(rng), u(rng)};
      const Weights w{lw(rng), lw(rng)};
      const PowerInterval bounds{-b(rng), b(rng)};
      const auto res = project_detailed(region, t, w, bounds);
      REQUIRE(contains(region, res.point.p_kw, res.point.q_kvar));
      REQUIRE(bounds.contains(res.point.p_kw));
      CHECK(kkt_residual(region, res.cell, t, w, bounds, res.point) <= 1e-6);
      const auto again = project_detailed(region, res.point, w, bounds).point;
      CHECK(std::abs(again.p_kw - res.point.p_kw) <= 1e-9);
      CHECK(std::abs(again.q_kvar - res.point.q_kvar) <= 1e-9);
      // the other cell cannot do better
      CHECK(res.objective == Approx(objective(res.point, t, w)));
    }
  }
}

TEST_CASE("projection is never beaten by sampled feasible points") {
  std::mt19937_64 rng(33);
  std::uniform_real_distribution<double> u(-1500, 1500), g(-800, 800);
  const auto region = region_of({{550, 300}}, 1.0);
  const Weights w{1.0, 3.0};
  std::vector<PqPoint> members;
  while (members.size() < 3000) {
    const double p = g(rng), q = g(rng);
    if (oracle::printed_inequalities({550, 300}, p, q)) members.push_back({p, q});
  }
  for (int k = 0; k < 200; ++k) {
    const PqPoint t{u(rng), u(rng)};
    const double f = project_detailed(region, t, w, kWide).objective;
    for (const auto& m : members) REQUIRE(f <= objective(m, t, w) + 1e-9);
  }
}

TEST_CASE("zero weight on Q keeps the frequency target") {
  const auto r = region_of({{600, 300}}, 7.0 / 9.0);
  // P is feasible on its own, Q is far out of range
  for (double p0 : {-300.0, -45.0, 0.0, 120.0, 400.0}) {
    const PqPoint t{p0, 900.0};
    const auto res = project_detailed(r, t, {1.0, 0.0}, kWide);
    CHECK(res.point.p_kw == p0);
    CHECK(contains(r, res.point.p_kw, res.point.q_kvar));
    // and Q as close as the region allows at that P
    CHECK_FALSE(contains(r, p0, res.point.q_kvar + 1e-3));
  }
  // zero weight on P
  const PqPoint t{2000.0, 10.0};
  const auto res = project_detailed(r, t, {0.0, 1.0}, kWide);
  CHECK(res.point.q_kvar == Approx(10.0));
  CHECK_FALSE(contains(r, res.point.p_kw + 1e-3, 10.0));
}

TEST_CASE("consistency check uses half-open ranges") {
  const VoltageRange dc_mid{550, 600}, dc_hi{600, 800}, ac_nom{270, 330};
  CHECK(verify_consistency(600.0, 300.0, dc_mid, ac_nom));
  CHECK_FALSE(verify_consistency(600.0, 300.0, dc_hi, ac_nom));
  CHECK(verify_consistency(700.0, 330.0, dc_hi, ac_nom));
  CHECK_FALSE(verify_consistency(700.0, 330.5, dc_hi, ac_nom));
}

TEST_CASE("controller config validation") {
  ControllerConfig c;
  CHECK_NOTHROW(c.validate());
  c.c_shrink = 0.0;
  CHECK_THROWS(c.validate());
  c = {};
  c.battery.eta = 1.5;
  CHECK_THROWS(c.validate());
}

TEST_CASE("solve_step at the reference point idles") {
  const ControllerConfig cfg;
  TtcState s;
  const auto step = solve_step({0, 50.0, 21.192}, s, cfg, testdata::params(), testdata::curves());
  CHECK(step.record.target == PqPoint{0, 0});
  CHECK(step.record.optimal == PqPoint{0, 0});
  CHECK(step.record.outcome == StepOutcome::FeasibleUnchanged);
  CHECK(step.record.switches == 0);
  CHECK(step.next.soc == s.soc);
  CHECK_FALSE(step.record.droops.alpha_kw_per_hz.has_value());
}

TEST_CASE("small frequency error, deep under-voltage: Q is clipped, P kept") {
  const ControllerConfig cfg;
  TtcState s;
  const GridSample g{0, 49.995, 21.192 - 0.1};
  const auto rec = solve_step(g, s, cfg, testdata::params(), testdata::curves()).record;
  CHECK(rec.target.p_kw == Approx(45.015));
  CHECK(rec.target.q_kvar == Approx(839.0));
  CHECK(rec.outcome == StepOutcome::ClippedToBoundary);
  CHECK(rec.optimal.p_kw == rec.target.p_kw);
  CHECK(rec.optimal.q_kvar < rec.target.q_kvar);
  const auto region = record_region(rec, testdata::curves(), cfg.c_shrink);
  CHECK(contains(region, rec.optimal.p_kw, rec.optimal.q_kvar));
  CHECK_FALSE(contains(region, rec.optimal.p_kw, rec.optimal.q_kvar + 1e-6));
  CHECK(rec.p_naive_kw == 0.0);
  CHECK(*rec.droops.alpha_kw_per_hz == Approx(cfg.droop.alpha0_kw_per_hz));
  CHECK(*rec.droops.beta_kvar_per_v < cfg.droop.beta0_kvar_per_v);
}

TEST_CASE("low AC voltage applies the conservative clamp") {
  const ControllerConfig cfg;
  TtcState s;
  const auto rec = solve_step({0, 50.01, 18.5}, s, cfg, testdata::params(), testdata::curves()).record;
  CHECK(rec.conservative_clamp);
  REQUIRE(rec.ac_curve.has_value());
  CHECK(*rec.ac_curve == CurveId{500, 270});
  CHECK(rec.vac_pred_v <= 270.0);
}

TEST_CASE("solve_step invariants over random conditions") {
  const ControllerConfig cfg;
  const SetpointSolver solver(cfg, testdata::params(), testdata::curves());
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> f(49.85, 50.15), v(20.6, 21.8), soc(0.12, 0.88), vc(-5, 5);
  for (int k = 0; k < 3000; ++k) {
    const GridSample g{0, f(rng), v(rng)};
    TtcState s;
    s.soc = soc(rng);
    for (auto& x : s.vc) x = vc(rng);
    const auto step = solver.step(g, s);
    const auto& r = step.record;
    const auto region = record_region(r, testdata::curves(), cfg.c_shrink);
    REQUIRE(contains(region, r.optimal.p_kw, r.optimal.q_kvar));
    REQUIRE(r.p_ac_bounds.contains(r.optimal.p_kw));
    CHECK(r.projections >= 1);
    CHECK(r.projections <= SetpointSolver::kMaxAssumptions);
    CHECK(r.exceeds_target == (std::abs(r.optimal.p_kw) > std::abs(r.target.p_kw) + 1e-9));
    CHECK(r.p_dc_kw == Approx(dc_from_ac(r.optimal.p_kw, cfg.battery.eta)));
    CHECK(step.next.soc >= cfg.battery.soc_min);
    CHECK(step.next.soc <= cfg.battery.soc_max);
    // baseline either passes the target through or idles
    const bool target_ok = contains(region, r.target.p_kw, r.target.q_kvar) && r.p_ac_bounds.contains(r.target.p_kw);
    CHECK(r.p_naive_kw == (target_ok ? r.target.p_kw : 0.0));
    if (r.outcome == StepOutcome::FeasibleUnchanged) CHECK(r.optimal == r.target);
    // the free function and the cached solver agree
    const auto again = solve_step(g, s, cfg, testdata::params(), testdata::curves());
    CHECK(again.record.optimal == r.optimal);
    CHECK(again.next.soc == step.next.soc);
  }
}
