#pragma once

// Three-time-constant (TTC) equivalent circuit of the battery: an open-circuit
// source E(SOC), a series resistance and three parallel RC branches.
//
// Sign convention: positive DC power and current mean discharge, which lowers
// the state of charge and pulls the bus voltage below E.

#include <array>
#include <istream>
#include <string>
#include <vector>

namespace bess {

struct TtcParams {
  double a_v = 0.0;  // E(SOC) = a + b * SOC
  double b_v = 0.0;
  double rs_ohm = 0.0;
  std::array<double, 3> r_ohm{};
  std::array<double, 3> c_farad{};
  double soc_lo = 0.0;  // band [soc_lo, soc_hi); the band ending at 1 is closed
  double soc_hi = 1.0;

  bool covers(double soc) const;
  double time_constant(std::size_t branch) const { return r_ohm[branch] * c_farad[branch]; }
  void validate() const;
};

// SOC-banded parameter sets that partition [0, 1].
class TtcParamSet {
public:
  TtcParamSet() = default;
  explicit TtcParamSet(std::vector<TtcParams> bands);

  // Throws WrongBandError when soc is outside [0, 1].
  const TtcParams& for_soc(double soc) const;
  const std::vector<TtcParams>& bands() const { return bands_; }

private:
  std::vector<TtcParams> bands_;
};

TtcParamSet load_ttc_params(std::istream& in);
TtcParamSet load_ttc_params_file(const std::string& path);

struct TtcState {
  std::array<double, 3> vc{};  // RC branch voltages, V
  double soc = 0.5;

  double branch_sum() const { return vc[0] + vc[1] + vc[2]; }
};

struct BatteryConfig {
  double c_max_ah = 580.0;  // available capacity
  double eta = 0.97;        // converter efficiency
  double soc_min = 0.1;
  double soc_max = 0.9;
  double vdc_min = 500.0;
  double vdc_max = 800.0;
  double delta_t_s = 1.0;

  double capacity_as() const { return c_max_ah * 3600.0; }
  void validate() const;
};

// a + b * soc; throws WrongBandError when soc is outside the parameter band.
double open_circuit_voltage(double soc, const TtcParams& params);

// Exact zero-order-hold update of the RC branches for the constant current
// p_dc / vdc held over dt, followed by the SOC update. Throws DomainError for
// non-positive vdc and SocLimitError when the SOC leaves its window.
TtcState ttc_step(const TtcState& state, double p_dc_kw, double vdc, const TtcParams& params,
                  const BatteryConfig& cfg, double dt);

// Larger root of vdc^2 + (sum(vc) - E) vdc + p_dc Rs = 0. Throws
// InfeasiblePowerError past the maximum power point.
double solve_vdc(double p_dc_kw, const TtcState& state, const TtcParams& params);

// |vdc^2 + (sum(vc) - E) vdc + p_dc Rs| / max(1, vdc^2)
double vdc_residual(double vdc, double p_dc_kw, const TtcState& state, const TtcParams& params);

// Converter losses: charging stores eta * P_ac, discharging draws P_ac / eta.
double dc_from_ac(double p_ac_kw, double eta);
double ac_from_dc(double p_dc_kw, double eta);

// Coulomb counting over one step. The result is not clamped; leaving
// [soc_min, soc_max] throws SocLimitError.
double soc_update(double soc, double p_dc_kw, double vdc, const BatteryConfig& cfg, double dt);
double soc_update(double soc, double p_dc_kw, double vdc, const BatteryConfig& cfg);

// Admissible DC power for the next step.
struct DcPowerBounds {
  double p_min_kw = 0.0;  // most negative (charging) power
  double p_max_kw = 0.0;  // largest discharging power
  double max_power_kw = 0.0;  // maximum power point of the circuit
};

DcPowerBounds dc_power_bounds(const TtcState& state, const TtcParams& params,
                              const BatteryConfig& cfg);

}  // namespace bess
