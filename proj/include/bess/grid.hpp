#pragma once

// Grid-side quantities: droop targets from frequency and MV voltage, droop
// sizing from historical statistics, and the LV voltage seen by the converter.

#include <optional>
#include <span>

#include "bess/capability.hpp"

namespace bess {

struct GridSample {
  double t_s = 0.0;
  double freq_hz = 50.0;
  double v_mv_kv = 21.0;  // phase-to-phase direct-sequence magnitude at the MV bus

  // Throws InputError unless freq is in (45, 55) Hz and v_mv > 0.
  void validate() const;
};

struct DroopConfig {
  double alpha0_kw_per_hz = 9003.0;
  double beta0_kvar_per_v = 8.39;
  double f_ref_hz = 50.0;
  double v_ref_kv = 21.192;
  double lambda_p = 1.0;
  double lambda_q = 1.0;

  void validate() const;
};

struct TransformerParams {
  double ratio = 70.0;        // MV / LV
  double x_t_ohm = 0.0;       // series reactance referred to the LV side
  double s_rated_kva = 630.0;
  double u_k = 0.0628;        // short-circuit voltage, per unit

  // X_T = u_k * V_lv^2 / S_rated
  static TransformerParams from_short_circuit(double ratio, double u_k, double v_lv_rated_v,
                                              double s_rated_kva);
  void validate() const;
};

// Deviations as (reference - measurement): positive when the grid is short of
// frequency or voltage. Voltage deviation is in volts at the MV side.
double frequency_deviation(const GridSample& sample, const DroopConfig& cfg);
double voltage_deviation_v(const GridSample& sample, const DroopConfig& cfg);

// Over-frequency gives charging (p0 < 0); over-voltage gives inductive q0 < 0.
PqPoint droop_targets(const GridSample& sample, const DroopConfig& cfg);

struct DroopGains {
  double alpha0_kw_per_hz = 0.0;
  double beta0_kvar_per_v = 0.0;
};

// alpha0 = P_max / dmax_f, beta0 = Q_max / dmax_v. Non-positive deviations
// throw DomainError.
DroopGains initial_droops(double p_max_kw, double q_max_kvar, double dmax_f_hz, double dmax_v_v);

struct DeviationStats {
  double dmax_f_hz = 0.0;
  double dmax_v_kv = 0.0;
  double mu_f_hz = 0.0;
  double mu_v_kv = 0.0;
  double sigma_f_hz = 0.0;
  double sigma_v_kv = 0.0;
};

// Sample mean and (n - 1) standard deviation; dmax = k * sigma.
DeviationStats max_deviations(std::span<const GridSample> samples, double k_f, double k_v);

// LV-side voltage magnitude after the drop over X_T caused by exchanging
// `power` (kW, kvar).
double predict_vac(const GridSample& sample, PqPoint power, const TransformerParams& xf);

struct OptimalDroops {
  std::optional<double> alpha_kw_per_hz;  // empty when |dfreq| <= 1e-6 Hz
  std::optional<double> beta_kvar_per_v;  // empty when |dvac| <= 1e-3 V
};

OptimalDroops optimal_droops(PqPoint optimum, double dfreq_hz, double dvac_v);

}  // namespace bess
