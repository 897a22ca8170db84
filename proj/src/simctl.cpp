#include "bess/simctl.hpp"

#include <fmt/format.h>

#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "bess/error.hpp"
#include "bess/line_format.hpp"
#include "json.hpp"

namespace bess {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

void strip_cr(std::string& s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
}

std::string num(double v) { return fmt::format("{:.10g}", v); }

std::string optional_num(const std::optional<double>& v) { return v ? num(*v) : std::string(); }

const std::vector<std::string> kScenarioKeys{
    "name",      "alpha0",  "beta0",    "duration", "lambda_p", "lambda_q",          "c_shrink",
    "soc_init",  "f_ref",   "v_ref",    "eta",      "soc_min",  "soc_max",           "vdc_min",
    "vdc_max",   "c_max_ah", "delta_t", "transformer_ratio",    "u_k",               "s_rated_kva",
    "v_lv_rated", "x_t",    "trace"};

}  // namespace

bool TraceGenerator::is_generator(const std::string& source) {
  return source.rfind("gen:", 0) == 0;
}

TraceGenerator TraceGenerator::parse(const std::string& source) {
  if (!is_generator(source)) throw InputError("not a generator spec: '" + source + "'");
  TraceGenerator gen;
  std::istringstream in(source.substr(4));
  for (std::string item; std::getline(in, item, ',');) {
    if (item.empty()) continue;
    auto [key, value] = text::split_assignment(item, 1);
    const double v = text::parse_number(value, 1);
    if (key == "sigma_f") {
      gen.sigma_f_hz = v;
    } else if (key == "sigma_v") {
      gen.sigma_v_kv = v;
    } else if (key == "mu_f") {
      gen.mu_f_hz = v;
    } else if (key == "mu_v") {
      gen.mu_v_kv = v;
    } else if (key == "n") {
      if (v < 1.0 || v != std::floor(v)) throw InputError("generator n must be a positive integer");
      gen.n = static_cast<std::size_t>(v);
    } else if (key == "seed") {
      if (v < 0.0 || v != std::floor(v)) throw InputError("generator seed must be a non-negative integer");
      gen.seed = static_cast<std::uint64_t>(v);
    } else {
      throw InputError("unknown generator field '" + key + "'");
    }
  }
  return gen;
}

std::vector<GridSample> generate_trace(double sigma_f_hz, double sigma_v_kv, double mu_f_hz,
                                       double mu_v_kv, std::size_t n, std::uint64_t seed) {
  if (!(sigma_f_hz >= 0.0 && sigma_v_kv >= 0.0)) throw DomainError("sigmas must be non-negative");
  if (n < 1) throw DomainError("trace needs at least one sample");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  std::vector<GridSample> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double zf = unit(rng);
    const double zv = unit(rng);
    out.push_back({static_cast<double>(i), mu_f_hz + sigma_f_hz * zf, mu_v_kv + sigma_v_kv * zv});
  }
  return out;
}

std::vector<GridSample> generate_trace(const TraceGenerator& gen, std::size_t n) {
  return generate_trace(gen.sigma_f_hz, gen.sigma_v_kv, gen.mu_f_hz, gen.mu_v_kv, gen.n.value_or(n),
                        gen.seed);
}

std::vector<GridSample> read_trace_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(1, "empty trace file");
  strip_cr(line);
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  if (line != "timestamp_s,freq_hz,v_mv_kv") {
    throw ParseError(1, "expected header 'timestamp_s,freq_hz,v_mv_kv'");
  }
  std::vector<GridSample> out;
  std::size_t number = 1;
  while (std::getline(in, line)) {
    ++number;
    strip_cr(line);
    if (line.empty()) continue;
    const auto fields = split_csv(line);
    if (fields.size() != 3) throw ParseError(number, "expected 3 fields");
    GridSample s{text::parse_number(fields[0], number), text::parse_number(fields[1], number),
                 text::parse_number(fields[2], number)};
    if (!out.empty() && !(s.t_s > out.back().t_s)) {
      throw ParseError(number, "timestamps must be strictly increasing");
    }
    try {
      s.validate();
    } catch (const InputError& e) {
      throw ParseError(number, e.what());
    }
    out.push_back(s);
  }
  return out;
}

std::vector<GridSample> read_trace_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open trace '" + path + "'");
  return read_trace_csv(in);
}

void write_trace_csv(std::ostream& out, std::span<const GridSample> samples) {
  out << "timestamp_s,freq_hz,v_mv_kv\n";
  for (const auto& s : samples) {
    out << num(s.t_s) << ',' << fmt::format("{:.9f}", s.freq_hz) << ','
        << fmt::format("{:.9f}", s.v_mv_kv) << '\n';
  }
}

std::size_t ScenarioSpec::steps() const {
  return static_cast<std::size_t>(std::llround(duration_s / controller.battery.delta_t_s));
}

void ScenarioSpec::validate() const {
  controller.validate();
  if (!(duration_s > 0.0)) throw ValidationError("duration must be positive");
  if (steps() < 1) throw ValidationError("duration is shorter than one control step");
  const auto& b = controller.battery;
  if (!(soc_init >= b.soc_min && soc_init <= b.soc_max)) {
    throw ValidationError("soc_init must lie within [soc_min, soc_max]");
  }
}

ScenarioSpec parse_scenario(std::istream& in) {
  const auto doc = text::KeyValueDoc::parse(in);
  if (const auto unknown = doc.unknown_keys(kScenarioKeys); !unknown.empty()) {
    throw ValidationError("unknown scenario key '" + unknown.front() + "'");
  }
  ScenarioSpec spec;
  spec.name = doc.string_or("name", spec.name);
  auto& droop = spec.controller.droop;
  droop.alpha0_kw_per_hz = doc.number("alpha0");
  droop.beta0_kvar_per_v = doc.number("beta0");
  droop.lambda_p = doc.number_or("lambda_p", droop.lambda_p);
  droop.lambda_q = doc.number_or("lambda_q", droop.lambda_q);
  droop.f_ref_hz = doc.number_or("f_ref", droop.f_ref_hz);
  droop.v_ref_kv = doc.number_or("v_ref", droop.v_ref_kv);

  auto& bat = spec.controller.battery;
  bat.eta = doc.number_or("eta", bat.eta);
  bat.soc_min = doc.number_or("soc_min", bat.soc_min);
  bat.soc_max = doc.number_or("soc_max", bat.soc_max);
  bat.vdc_min = doc.number_or("vdc_min", bat.vdc_min);
  bat.vdc_max = doc.number_or("vdc_max", bat.vdc_max);
  bat.c_max_ah = doc.number_or("c_max_ah", bat.c_max_ah);
  bat.delta_t_s = doc.number_or("delta_t", bat.delta_t_s);

  const auto& xf_default = spec.controller.transformer;
  spec.controller.transformer = TransformerParams::from_short_circuit(
      doc.number_or("transformer_ratio", xf_default.ratio), doc.number_or("u_k", xf_default.u_k),
      doc.number_or("v_lv_rated", 300.0), doc.number_or("s_rated_kva", xf_default.s_rated_kva));
  if (doc.has("x_t")) spec.controller.transformer.x_t_ohm = doc.number("x_t");

  spec.controller.c_shrink = doc.number_or("c_shrink", spec.controller.c_shrink);
  spec.duration_s = doc.number_or("duration", spec.duration_s);
  spec.soc_init = doc.number_or("soc_init", spec.soc_init);
  spec.trace = doc.string_or("trace", "");
  spec.validate();
  return spec;
}

ScenarioSpec load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open scenario '" + path + "'");
  return parse_scenario(in);
}

EnergyReport energy_metrics(std::span<const ControlRecord> records, double alpha0_kw_per_hz,
                            double delta_t_s) {
  if (records.empty()) throw InsufficientDataError("no control records");
  EnergyReport r;
  const double hours = delta_t_s / 3600.0;
  for (const auto& rec : records) {
    r.e_exp_kwh += hours * std::abs(alpha0_kw_per_hz * rec.delta_f_hz);
    r.e_star_kwh += hours * std::abs(rec.optimal.p_kw);
    r.e_0_kwh += hours * std::abs(rec.p_naive_kw);
  }
  if (r.e_exp_kwh > 0.0) {
    r.ratio_star = r.e_star_kwh / r.e_exp_kwh;
    r.ratio_0 = r.e_0_kwh / r.e_exp_kwh;
  }
  return r;
}

ScenarioResult run_scenario(const ScenarioSpec& spec, std::span<const GridSample> trace,
                            const CurveLibrary& curves, const TtcParamSet& params) {
  spec.validate();
  const std::size_t steps = spec.steps();
  if (trace.size() < steps) {
    throw InputError("trace has " + std::to_string(trace.size()) + " samples, scenario needs " +
                     std::to_string(steps));
  }
  const SetpointSolver solver(spec.controller, params, curves);
  ScenarioResult result;
  result.name = spec.name;
  result.records.reserve(steps);
  result.step_seconds.reserve(steps);
  TtcState state;
  state.soc = spec.soc_init;
  for (std::size_t k = 0; k < steps; ++k) {
    const auto t0 = std::chrono::steady_clock::now();
    StepResult step = solver.step(trace[k], state);
    const auto t1 = std::chrono::steady_clock::now();
    result.step_seconds.push_back(std::chrono::duration<double>(t1 - t0).count());
    state = step.next;
    result.records.push_back(std::move(step.record));
  }
  result.final_state = state;
  result.report = energy_metrics(result.records, spec.controller.droop.alpha0_kw_per_hz,
                                 spec.controller.battery.delta_t_s);
  return result;
}

std::vector<GridSample> resolve_trace(const std::string& source, std::size_t steps,
                                      std::optional<std::uint64_t> seed) {
  if (source.empty()) throw InputError("no trace given (use --trace or the scenario 'trace' key)");
  if (TraceGenerator::is_generator(source)) {
    TraceGenerator gen = TraceGenerator::parse(source);
    if (seed) gen.seed = *seed;
    return generate_trace(gen, steps);
  }
  return read_trace_csv_file(source);
}

void write_records_csv(std::ostream& out, std::span<const ControlRecord> records) {
  out << "t_s,freq_hz,v_mv_kv,delta_f_hz,delta_v_v,p0_kw,q0_kvar,p_opt_kw,q_opt_kvar,p_naive_kw,"
         "p_ac_min_kw,p_ac_max_kw,p_dc_kw,vdc_pred_v,vac_pred_v,soc,dc_curve,ac_curve,status,"
         "switches,clamp,exceeds_target,alpha_opt,beta_opt\n";
  for (const auto& r : records) {
    out << num(r.sample.t_s) << ',' << num(r.sample.freq_hz) << ',' << num(r.sample.v_mv_kv) << ','
        << num(r.delta_f_hz) << ',' << num(r.delta_v_v) << ',' << num(r.target.p_kw) << ','
        << num(r.target.q_kvar) << ',' << num(r.optimal.p_kw) << ',' << num(r.optimal.q_kvar) << ','
        << num(r.p_naive_kw) << ',' << num(r.p_ac_bounds.min_kw) << ','
        << num(r.p_ac_bounds.max_kw) << ',' << num(r.p_dc_kw) << ',' << num(r.vdc_pred_v) << ','
        << num(r.vac_pred_v) << ',' << num(r.soc_after) << ',' << r.dc_curve.label() << ','
        << (r.ac_curve ? r.ac_curve->label() : std::string()) << ',' << to_string(r.outcome) << ','
        << r.switches << ',' << (r.conservative_clamp ? 1 : 0) << ','
        << (r.exceeds_target ? 1 : 0) << ',' << optional_num(r.droops.alpha_kw_per_hz) << ','
        << optional_num(r.droops.beta_kvar_per_v) << '\n';
  }
}

std::vector<ControlRecord> read_records_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(1, "empty records file");
  strip_cr(line);
  const auto header = split_csv(line);
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  for (const char* needed : {"t_s", "delta_f_hz", "p0_kw", "p_opt_kw", "p_naive_kw"}) {
    if (col.count(needed) == 0) throw ParseError(1, std::string("missing column '") + needed + "'");
  }
  auto optional_field = [&](const std::vector<std::string>& f, const char* name, std::size_t n,
                            double fallback) {
    auto it = col.find(name);
    if (it == col.end() || it->second >= f.size() || f[it->second].empty()) return fallback;
    return text::parse_number(f[it->second], n);
  };

  std::vector<ControlRecord> out;
  std::size_t number = 1;
  while (std::getline(in, line)) {
    ++number;
    strip_cr(line);
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != header.size()) throw ParseError(number, "field count does not match header");
    ControlRecord r;
    r.sample.t_s = text::parse_number(f[col["t_s"]], number);
    r.delta_f_hz = text::parse_number(f[col["delta_f_hz"]], number);
    r.target.p_kw = text::parse_number(f[col["p0_kw"]], number);
    r.optimal.p_kw = text::parse_number(f[col["p_opt_kw"]], number);
    r.p_naive_kw = text::parse_number(f[col["p_naive_kw"]], number);
    r.target.q_kvar = optional_field(f, "q0_kvar", number, 0.0);
    r.optimal.q_kvar = optional_field(f, "q_opt_kvar", number, 0.0);
    r.sample.freq_hz = optional_field(f, "freq_hz", number, 50.0);
    r.sample.v_mv_kv = optional_field(f, "v_mv_kv", number, 21.0);
    if (auto it = col.find("status"); it != col.end()) {
      const std::string& s = f[it->second];
      r.outcome = s == "clipped"    ? StepOutcome::ClippedToBoundary
                  : s == "fallback" ? StepOutcome::Fallback
                                    : StepOutcome::FeasibleUnchanged;
    }
    out.push_back(r);
  }
  return out;
}

RunCounts count_outcomes(std::span<const ControlRecord> records) {
  RunCounts c;
  c.steps = records.size();
  for (const auto& r : records) {
    if (r.outcome == StepOutcome::ClippedToBoundary) ++c.clipped;
    if (r.outcome == StepOutcome::Fallback) ++c.fallback;
    if (r.conservative_clamp) ++c.conservative_clamp;
    if (r.exceeds_target) ++c.exceeds_target;
  }
  return c;
}

namespace {

nlohmann::ordered_json report_object(const EnergyReport& report, const RunCounts& counts) {
  nlohmann::ordered_json j;
  j["e_exp_kwh"] = report.e_exp_kwh;
  j["e_star_kwh"] = report.e_star_kwh;
  j["e_0_kwh"] = report.e_0_kwh;
  j["ratio_star"] = report.ratio_star ? nlohmann::ordered_json(*report.ratio_star) : nullptr;
  j["ratio_0"] = report.ratio_0 ? nlohmann::ordered_json(*report.ratio_0) : nullptr;
  j["steps"] = counts.steps;
  j["clipped_steps"] = counts.clipped;
  j["fallback_steps"] = counts.fallback;
  j["conservative_clamp_steps"] = counts.conservative_clamp;
  j["exceeds_target_steps"] = counts.exceeds_target;
  return j;
}

}  // namespace

std::string report_json(const EnergyReport& report, const RunCounts& counts) {
  return report_object(report, counts).dump(2);
}

void write_summary_json(std::ostream& out, const ScenarioSpec& spec, const ScenarioResult& result) {
  const auto& c = spec.controller;
  nlohmann::ordered_json j;
  j["scenario"] = spec.name;
  j["alpha0_kw_per_hz"] = c.droop.alpha0_kw_per_hz;
  j["beta0_kvar_per_v"] = c.droop.beta0_kvar_per_v;
  j["lambda_p"] = c.droop.lambda_p;
  j["lambda_q"] = c.droop.lambda_q;
  j["c_shrink"] = c.c_shrink;
  j["duration_s"] = spec.duration_s;
  j["delta_t_s"] = c.battery.delta_t_s;
  j["soc_init"] = spec.soc_init;
  j["soc_final"] = result.final_state.soc;
  j["energy"] = report_object(result.report, count_outcomes(result.records));
  out << j.dump(2) << '\n';
}

}  // namespace bess
