// bessctl: run scenarios, generate traces and recompute energy metrics.

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>

#include "CLI11.hpp"
#include "bess/error.hpp"
#include "bess/kernels.hpp"
#include "bess/simctl.hpp"

#ifndef BESS_DATA_DIR
#define BESS_DATA_DIR "data"
#endif

namespace fs = std::filesystem;
using namespace bess;

namespace {

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  return out;
}

void write_outputs(const fs::path& dir, const ScenarioSpec& spec, const ScenarioResult& result) {
  fs::create_directories(dir);
  auto rec = open_out(dir / "records.csv");
  write_records_csv(rec, result.records);
  auto sum = open_out(dir / "summary.json");
  write_summary_json(sum, spec, result);
}

void print_report(const ScenarioResult& r) {
  const RunCounts c = count_outcomes(r.records);
  const auto& t = r.step_seconds;
  const double mean = t.empty() ? 0.0 : std::accumulate(t.begin(), t.end(), 0.0) / t.size();
  const double worst = t.empty() ? 0.0 : *std::max_element(t.begin(), t.end());
  fmt::print("{}: {} steps, {} clipped, {} fallback, {} clamp\n", r.name, c.steps, c.clipped,
             c.fallback, c.conservative_clamp);
  fmt::print("  E_exp {:.4f} kWh  E* {:.4f} kWh  E_0 {:.4f} kWh\n", r.report.e_exp_kwh,
             r.report.e_star_kwh, r.report.e_0_kwh);
  if (r.report.ratio_star) {
    fmt::print("  E*/E_exp {:.4f}  E_0/E_exp {:.4f}\n", *r.report.ratio_star, *r.report.ratio_0);
  }
  fmt::print("  solve time per step: mean {:.1f} us, max {:.1f} us\n", mean * 1e6, worst * 1e6);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimal droop set-points for a grid-connected battery"};
  app.require_subcommand(1);

  std::string curves_path = std::string(BESS_DATA_DIR) + "/curves.txt";
  std::string params_path = std::string(BESS_DATA_DIR) + "/ttc_params.txt";

  // run
  auto* run = app.add_subcommand("run", "simulate one scenario");
  std::string scenario_path, trace_src, out_dir;
  std::optional<std::uint64_t> seed;
  run->add_option("--scenario", scenario_path, "scenario file")->required()->check(CLI::ExistingFile);
  run->add_option("--trace", trace_src, "trace CSV or gen:... spec (overrides the scenario)");
  run->add_option("--curves", curves_path, "capability curves")->check(CLI::ExistingFile);
  run->add_option("--params", params_path, "battery TTC parameters")->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "output directory")->required();
  run->add_option("--seed", seed, "generator seed override");

  // gen-trace
  auto* gen = app.add_subcommand("gen-trace", "write a synthetic Gaussian trace");
  double sigma_f = 0.0, sigma_v = 0.0, mu_f = 50.0, mu_v = 21.192;
  std::size_t n = 300;
  std::uint64_t gen_seed = 1;
  std::string gen_out = "-";
  gen->add_option("--sigma-f", sigma_f, "frequency std dev [Hz]")->required();
  gen->add_option("--sigma-v", sigma_v, "MV voltage std dev [kV]")->required();
  gen->add_option("--mu-f", mu_f, "mean frequency [Hz]");
  gen->add_option("--mu-v", mu_v, "mean MV voltage [kV]");
  gen->add_option("--n", n, "number of samples")->check(CLI::PositiveNumber);
  gen->add_option("--seed", gen_seed, "RNG seed");
  gen->add_option("--out", gen_out, "output CSV, '-' for stdout");

  // metrics
  auto* met = app.add_subcommand("metrics", "recompute energy metrics from a records CSV");
  std::string records_path;
  std::optional<double> alpha0;
  double dt = 1.0;
  met->add_option("--records", records_path, "records.csv from 'run'")->required()->check(CLI::ExistingFile);
  met->add_option("--alpha0", alpha0, "droop gain [kW/Hz]; default uses the recorded p0");
  met->add_option("--dt", dt, "control period [s]")->check(CLI::PositiveNumber);

  // batch
  auto* batch = app.add_subcommand("batch", "run several scenarios in parallel");
  std::vector<std::string> scenario_paths;
  std::string batch_out;
  bool serial = false;
  batch->add_option("--scenarios", scenario_paths, "scenario files")->required()->check(CLI::ExistingFile);
  batch->add_option("--curves", curves_path, "capability curves")->check(CLI::ExistingFile);
  batch->add_option("--params", params_path, "battery TTC parameters")->check(CLI::ExistingFile);
  batch->add_option("--out", batch_out, "output directory; one subdirectory per scenario")->required();
  batch->add_option("--seed", seed, "generator seed override");
  batch->add_flag("--serial", serial, "disable threading");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const CurveLibrary curves(load_curves_file(curves_path));
      const TtcParamSet params = load_ttc_params_file(params_path);
      const ScenarioSpec spec = load_scenario_file(scenario_path);
      const auto trace = resolve_trace(trace_src.empty() ? spec.trace : trace_src, spec.steps(), seed);
      const ScenarioResult result = run_scenario(spec, trace, curves, params);
      write_outputs(out_dir, spec, result);
      print_report(result);
    } else if (*gen) {
      const auto samples = generate_trace(sigma_f, sigma_v, mu_f, mu_v, n, gen_seed);
      if (gen_out == "-") {
        write_trace_csv(std::cout, samples);
      } else {
        auto out = open_out(gen_out);
        write_trace_csv(out, samples);
      }
    } else if (*met) {
      std::ifstream in(records_path);
      auto records = read_records_csv(in);
      double gain = 1.0;
      if (alpha0) {
        gain = *alpha0;
      } else {
        for (auto& r : records) r.delta_f_hz = r.target.p_kw;
      }
      std::cout << report_json(energy_metrics(records, gain, dt), count_outcomes(records)) << '\n';
    } else if (*batch) {
      const CurveLibrary curves(load_curves_file(curves_path));
      const TtcParamSet params = load_ttc_params_file(params_path);
      std::vector<kernels::BatchJob> jobs;
      for (const auto& path : scenario_paths) {
        ScenarioSpec spec = load_scenario_file(path);
        auto trace = resolve_trace(spec.trace, spec.steps(), seed);
        jobs.push_back({std::move(spec), std::move(trace)});
      }
      const auto t0 = std::chrono::steady_clock::now();
      const auto results = serial ? kernels::run_batch_serial(jobs, curves, params)
                                  : kernels::run_batch(jobs, curves, params);
      const auto t1 = std::chrono::steady_clock::now();
      for (std::size_t i = 0; i < jobs.size(); ++i) {
        write_outputs(fs::path(batch_out) / jobs[i].spec.name, jobs[i].spec, results[i]);
        print_report(results[i]);
      }
      fmt::print("batch wall time {:.3f} s\n", std::chrono::duration<double>(t1 - t0).count());
    }
  } catch (const ParseError& e) {
    std::cerr << "bessctl: parse error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "bessctl: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
