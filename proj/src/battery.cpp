#include "bess/battery.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>

#include "bess/error.hpp"
#include "bess/line_format.hpp"

namespace bess {

namespace {

// SOC excursions below this are floating-point noise from bounds that drive
// the SOC exactly onto a limit.
constexpr double kSocSlack = 1e-12;

}  // namespace

bool TtcParams::covers(double soc) const {
  if (soc < soc_lo) return false;
  return soc < soc_hi || (soc_hi >= 1.0 && soc <= soc_hi);
}

void TtcParams::validate() const {
  if (!(rs_ohm > 0.0)) throw ValidationError("TTC series resistance must be positive");
  for (std::size_t i = 0; i < 3; ++i) {
    if (!(r_ohm[i] > 0.0) || !(c_farad[i] > 0.0)) {
      throw ValidationError("TTC branch resistances and capacitances must be positive");
    }
  }
  if (!(soc_lo >= 0.0 && soc_lo < soc_hi && soc_hi <= 1.0)) {
    throw ValidationError("TTC SOC band must be a non-empty subset of [0, 1]");
  }
}

TtcParamSet::TtcParamSet(std::vector<TtcParams> bands) : bands_(std::move(bands)) {
  if (bands_.empty()) throw ValidationError("no TTC parameter bands");
  std::sort(bands_.begin(), bands_.end(),
            [](const TtcParams& x, const TtcParams& y) { return x.soc_lo < y.soc_lo; });
  for (const auto& b : bands_) b.validate();
  if (bands_.front().soc_lo != 0.0 || bands_.back().soc_hi != 1.0) {
    throw ValidationError("TTC SOC bands must cover [0, 1]");
  }
  for (std::size_t i = 1; i < bands_.size(); ++i) {
    if (std::abs(bands_[i].soc_lo - bands_[i - 1].soc_hi) > 1e-12) {
      throw ValidationError("TTC SOC bands must be contiguous and non-overlapping");
    }
    bands_[i].soc_lo = bands_[i - 1].soc_hi;
  }
}

const TtcParams& TtcParamSet::for_soc(double soc) const {
  for (const auto& b : bands_) {
    if (b.covers(soc)) return b;
  }
  throw WrongBandError("SOC " + std::to_string(soc) + " is not covered by any parameter band");
}

TtcParamSet load_ttc_params(std::istream& in) {
  std::vector<TtcParams> bands;
  std::optional<TtcParams> open;
  std::array<bool, 9> seen{};
  static const std::array<const char*, 9> keys{"a", "b", "rs", "r1", "c1", "r2", "c2", "r3", "c3"};
  std::size_t open_line = 0;

  for (const auto& line : text::tokenize(in)) {
    const std::string& head = line.tokens[0];
    if (head == "band") {
      if (open) throw ParseError(line.number, "'band' before previous 'end'");
      if (line.tokens.size() != 3) throw ParseError(line.number, "expected 'band <lo> <hi>'");
      open = TtcParams{};
      open->soc_lo = text::parse_number(line.tokens[1], line.number);
      open->soc_hi = text::parse_number(line.tokens[2], line.number);
      seen.fill(false);
      open_line = line.number;
    } else if (head == "end") {
      if (!open) throw ParseError(line.number, "'end' without 'band'");
      for (std::size_t k = 0; k < keys.size(); ++k) {
        if (!seen[k]) throw ParseError(line.number, std::string("band is missing '") + keys[k] + "'");
      }
      open->validate();
      bands.push_back(*open);
      open.reset();
    } else {
      if (!open) throw ParseError(line.number, "'" + head + "' outside a band block");
      if (line.tokens.size() != 2) throw ParseError(line.number, "expected '<name> <value>'");
      const double v = text::parse_number(line.tokens[1], line.number);
      const auto it = std::find_if(keys.begin(), keys.end(), [&](const char* k) { return head == k; });
      if (it == keys.end()) throw ParseError(line.number, "unknown parameter '" + head + "'");
      const auto k = static_cast<std::size_t>(it - keys.begin());
      if (seen[k]) throw ParseError(line.number, "duplicate parameter '" + head + "'");
      seen[k] = true;
      switch (k) {
        case 0: open->a_v = v; break;
        case 1: open->b_v = v; break;
        case 2: open->rs_ohm = v; break;
        case 3: open->r_ohm[0] = v; break;
        case 4: open->c_farad[0] = v; break;
        case 5: open->r_ohm[1] = v; break;
        case 6: open->c_farad[1] = v; break;
        case 7: open->r_ohm[2] = v; break;
        case 8: open->c_farad[2] = v; break;
        default: break;
      }
    }
  }
  if (open) throw ParseError(open_line, "band block is not closed with 'end'");
  return TtcParamSet(std::move(bands));
}

TtcParamSet load_ttc_params_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open parameter file '" + path + "'");
  return load_ttc_params(in);
}

void BatteryConfig::validate() const {
  if (!(c_max_ah > 0.0)) throw ValidationError("c_max_ah must be positive");
  if (!(eta > 0.0 && eta <= 1.0)) throw ValidationError("eta must be in (0, 1]");
  if (!(soc_min >= 0.0 && soc_min < soc_max && soc_max <= 1.0)) {
    throw ValidationError("SOC limits must satisfy 0 <= soc_min < soc_max <= 1");
  }
  if (!(vdc_min > 0.0 && vdc_min < vdc_max)) throw ValidationError("invalid DC voltage window");
  if (!(delta_t_s > 0.0)) throw ValidationError("delta_t must be positive");
}

double open_circuit_voltage(double soc, const TtcParams& params) {
  if (!params.covers(soc)) {
    throw WrongBandError("SOC " + std::to_string(soc) + " outside parameter band [" +
                         std::to_string(params.soc_lo) + ", " + std::to_string(params.soc_hi) +
                         ")");
  }
  return params.a_v + params.b_v * soc;
}

TtcState ttc_step(const TtcState& state, double p_dc_kw, double vdc, const TtcParams& params,
                  const BatteryConfig& cfg, double dt) {
  if (!(vdc > 0.0)) throw DomainError("DC bus voltage must be positive");
  if (!(dt >= 0.0)) throw DomainError("time step must be non-negative");
  const double current = p_dc_kw * 1000.0 / vdc;
  TtcState next = state;
  for (std::size_t i = 0; i < 3; ++i) {
    const double decay = std::exp(-dt / params.time_constant(i));
    next.vc[i] = state.vc[i] * decay + params.r_ohm[i] * current * (1.0 - decay);
  }
  next.soc = soc_update(state.soc, p_dc_kw, vdc, cfg, dt);
  return next;
}

double solve_vdc(double p_dc_kw, const TtcState& state, const TtcParams& params) {
  const double e_eff = open_circuit_voltage(state.soc, params) - state.branch_sum();
  const double load = 4.0 * p_dc_kw * 1000.0 * params.rs_ohm;
  double disc = e_eff * e_eff - load;
  if (disc < 0.0) {
    // A bound computed exactly at the maximum power point can land a few ulps
    // past it.
    if (disc < -1e-12 * e_eff * e_eff) {
      throw InfeasiblePowerError("DC power " + std::to_string(p_dc_kw) +
                                 " kW exceeds the battery maximum power point");
    }
    disc = 0.0;
  }
  return 0.5 * (e_eff + std::sqrt(disc));
}

double vdc_residual(double vdc, double p_dc_kw, const TtcState& state, const TtcParams& params) {
  const double e = open_circuit_voltage(state.soc, params);
  const double r = vdc * vdc + (state.branch_sum() - e) * vdc + p_dc_kw * 1000.0 * params.rs_ohm;
  return std::abs(r) / std::max(1.0, vdc * vdc);
}

double dc_from_ac(double p_ac_kw, double eta) {
  return p_ac_kw < 0.0 ? eta * p_ac_kw : p_ac_kw / eta;
}

double ac_from_dc(double p_dc_kw, double eta) {
  return p_dc_kw < 0.0 ? p_dc_kw / eta : p_dc_kw * eta;
}

double soc_update(double soc, double p_dc_kw, double vdc, const BatteryConfig& cfg, double dt) {
  if (!(vdc > 0.0)) throw DomainError("DC bus voltage must be positive");
  const double next = soc - p_dc_kw * 1000.0 / (vdc * cfg.capacity_as()) * dt;
  if (next < cfg.soc_min - kSocSlack || next > cfg.soc_max + kSocSlack) {
    throw SocLimitError(next, "SOC " + std::to_string(next) + " leaves [" +
                                  std::to_string(cfg.soc_min) + ", " +
                                  std::to_string(cfg.soc_max) + "]");
  }
  return next;
}

double soc_update(double soc, double p_dc_kw, double vdc, const BatteryConfig& cfg) {
  return soc_update(soc, p_dc_kw, vdc, cfg, cfg.delta_t_s);
}

DcPowerBounds dc_power_bounds(const TtcState& state, const TtcParams& params,
                              const BatteryConfig& cfg) {
  const double e_eff = open_circuit_voltage(state.soc, params) - state.branch_sum();
  if (!(e_eff > 0.0)) throw DomainError("non-positive effective source voltage");
  const double rs = params.rs_ohm;

  DcPowerBounds out;
  out.max_power_kw = e_eff * e_eff / (4.0 * rs) / 1000.0;

  // With i = p / vdc the bus voltage is linear in current, vdc = E' - Rs i,
  // so a current limit maps to p = i (E' - Rs i) in closed form.
  const double i_mpp = e_eff / (2.0 * rs);
  const double i_discharge = std::max(0.0, (state.soc - cfg.soc_min) * cfg.capacity_as() / cfg.delta_t_s);
  const double p_soc_discharge = i_discharge >= i_mpp
                                     ? out.max_power_kw
                                     : i_discharge * (e_eff - rs * i_discharge) / 1000.0;
  double p_vdc_floor = out.max_power_kw;
  if (cfg.vdc_min >= 0.5 * e_eff) {
    p_vdc_floor = cfg.vdc_min * (e_eff - cfg.vdc_min) / (rs * 1000.0);
  }
  out.p_max_kw = std::max(0.0, std::min({out.max_power_kw, p_soc_discharge, p_vdc_floor}));

  const double i_charge = std::max(0.0, (cfg.soc_max - state.soc) * cfg.capacity_as() / cfg.delta_t_s);
  const double p_soc_charge = -i_charge * (e_eff + rs * i_charge) / 1000.0;
  const double p_vdc_ceiling = cfg.vdc_max * (e_eff - cfg.vdc_max) / (rs * 1000.0);
  out.p_min_kw = std::min(0.0, std::max(p_soc_charge, p_vdc_ceiling));
  return out;
}

}  // namespace bess
