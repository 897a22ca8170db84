#pragma once

// Closed-loop simulation around the set-point solver: scenario configuration,
// measurement traces (CSV or synthetic), the per-step loop, regulating-energy
// metrics, and the record/summary writers used by the CLI.

#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "bess/battery.hpp"
#include "bess/capability.hpp"
#include "bess/grid.hpp"
#include "bess/optimizer.hpp"

namespace bess {

struct TraceGenerator {
  double sigma_f_hz = 0.0;
  double sigma_v_kv = 0.0;
  double mu_f_hz = 50.0;
  double mu_v_kv = 21.192;
  std::optional<std::size_t> n;  // defaults to the scenario horizon
  std::uint64_t seed = 1;

  // "gen:sigma_f=..,sigma_v=..,mu_f=..,mu_v=..[,n=..][,seed=..]"
  static bool is_generator(const std::string& source);
  static TraceGenerator parse(const std::string& source);
};

// Independent Gaussian frequency and voltage samples, one per second.
// Deterministic for a fixed seed.
std::vector<GridSample> generate_trace(double sigma_f_hz, double sigma_v_kv, double mu_f_hz,
                                       double mu_v_kv, std::size_t n, std::uint64_t seed);
std::vector<GridSample> generate_trace(const TraceGenerator& gen, std::size_t n);

// CSV with header "timestamp_s,freq_hz,v_mv_kv"; timestamps strictly increasing.
std::vector<GridSample> read_trace_csv(std::istream& in);
std::vector<GridSample> read_trace_csv_file(const std::string& path);
void write_trace_csv(std::ostream& out, std::span<const GridSample> samples);

struct ScenarioSpec {
  std::string name = "scenario";
  ControllerConfig controller;
  double duration_s = 300.0;
  double soc_init = 0.5;
  std::string trace;  // CSV path or generator string; may be empty

  std::size_t steps() const;
  void validate() const;
};

// Key-value scenario document; see docs/file_formats.md for the keys.
ScenarioSpec parse_scenario(std::istream& in);
ScenarioSpec load_scenario_file(const std::string& path);

struct EnergyReport {
  double e_exp_kwh = 0.0;   // droop law, unconstrained
  double e_star_kwh = 0.0;  // optimal set-points
  double e_0_kwh = 0.0;     // baseline: target if feasible, else 0
  std::optional<double> ratio_star;  // e_star / e_exp
  std::optional<double> ratio_0;     // e_0 / e_exp
};

// Sums of dt * |power| in kWh. Throws InsufficientDataError on empty input.
EnergyReport energy_metrics(std::span<const ControlRecord> records, double alpha0_kw_per_hz,
                            double delta_t_s);

struct ScenarioResult {
  std::string name;
  std::vector<ControlRecord> records;
  EnergyReport report;
  std::vector<double> step_seconds;  // wall time per solve, not part of any output file
  TtcState final_state;
};

// Runs the first spec.steps() samples of the trace through the solver.
ScenarioResult run_scenario(const ScenarioSpec& spec, std::span<const GridSample> trace,
                            const CurveLibrary& curves, const TtcParamSet& params);

// Resolves spec.trace (generator or CSV) into samples; `seed` overrides a
// generator's seed.
std::vector<GridSample> resolve_trace(const std::string& source, std::size_t steps,
                                      std::optional<std::uint64_t> seed);

void write_records_csv(std::ostream& out, std::span<const ControlRecord> records);
// Reads back the columns needed for energy accounting.
std::vector<ControlRecord> read_records_csv(std::istream& in);

struct RunCounts {
  std::size_t steps = 0;
  std::size_t clipped = 0;
  std::size_t fallback = 0;
  std::size_t conservative_clamp = 0;
  std::size_t exceeds_target = 0;
};

RunCounts count_outcomes(std::span<const ControlRecord> records);

void write_summary_json(std::ostream& out, const ScenarioSpec& spec, const ScenarioResult& result);
std::string report_json(const EnergyReport& report, const RunCounts& counts);

}  // namespace bess
