#include "bess/grid.hpp"

#include <cmath>
#include <string>

#include "bess/error.hpp"

namespace bess {

void GridSample::validate() const {
  if (!(freq_hz > 45.0 && freq_hz < 55.0)) {
    throw InputError("frequency " + std::to_string(freq_hz) + " Hz at t=" + std::to_string(t_s) +
                     " is outside (45, 55)");
  }
  if (!(v_mv_kv > 0.0)) {
    throw InputError("MV voltage at t=" + std::to_string(t_s) + " must be positive");
  }
}

void DroopConfig::validate() const {
  if (!(alpha0_kw_per_hz > 0.0)) throw ValidationError("alpha0 must be positive");
  if (!(beta0_kvar_per_v > 0.0)) throw ValidationError("beta0 must be positive");
  if (!(lambda_p >= 0.0 && lambda_q >= 0.0) || (lambda_p == 0.0 && lambda_q == 0.0)) {
    throw ValidationError("weights must be non-negative and not both zero");
  }
  if (!(v_ref_kv > 0.0)) throw ValidationError("v_ref must be positive");
}

TransformerParams TransformerParams::from_short_circuit(double ratio, double u_k,
                                                        double v_lv_rated_v, double s_rated_kva) {
  TransformerParams xf;
  xf.ratio = ratio;
  xf.u_k = u_k;
  xf.s_rated_kva = s_rated_kva;
  xf.x_t_ohm = u_k * v_lv_rated_v * v_lv_rated_v / (s_rated_kva * 1000.0);
  return xf;
}

void TransformerParams::validate() const {
  if (!(ratio > 0.0)) throw ValidationError("transformer ratio must be positive");
  if (!(x_t_ohm >= 0.0)) throw ValidationError("transformer reactance must be non-negative");
}

double frequency_deviation(const GridSample& sample, const DroopConfig& cfg) {
  return cfg.f_ref_hz - sample.freq_hz;
}

double voltage_deviation_v(const GridSample& sample, const DroopConfig& cfg) {
  return (cfg.v_ref_kv - sample.v_mv_kv) * 1000.0;
}

PqPoint droop_targets(const GridSample& sample, const DroopConfig& cfg) {
  return PqPoint{cfg.alpha0_kw_per_hz * frequency_deviation(sample, cfg),
                 cfg.beta0_kvar_per_v * voltage_deviation_v(sample, cfg)};
}

DroopGains initial_droops(double p_max_kw, double q_max_kvar, double dmax_f_hz, double dmax_v_v) {
  if (!(dmax_f_hz > 0.0) || !(dmax_v_v > 0.0)) {
    throw DomainError("maximum deviations must be positive");
  }
  if (p_max_kw < 0.0 || q_max_kvar < 0.0) throw DomainError("power limits must be non-negative");
  return DroopGains{p_max_kw / dmax_f_hz, q_max_kvar / dmax_v_v};
}

DeviationStats max_deviations(std::span<const GridSample> samples, double k_f, double k_v) {
  if (samples.size() < 2) throw InsufficientDataError("at least two samples are required");
  // Welford
  double mean_f = 0.0;
  double mean_v = 0.0;
  double m2_f = 0.0;
  double m2_v = 0.0;
  double n = 0.0;
  for (const auto& s : samples) {
    n += 1.0;
    const double df = s.freq_hz - mean_f;
    mean_f += df / n;
    m2_f += df * (s.freq_hz - mean_f);
    const double dv = s.v_mv_kv - mean_v;
    mean_v += dv / n;
    m2_v += dv * (s.v_mv_kv - mean_v);
  }
  DeviationStats out;
  out.mu_f_hz = mean_f;
  out.mu_v_kv = mean_v;
  out.sigma_f_hz = std::sqrt(m2_f / (n - 1.0));
  out.sigma_v_kv = std::sqrt(m2_v / (n - 1.0));
  out.dmax_f_hz = k_f * out.sigma_f_hz;
  out.dmax_v_kv = k_v * out.sigma_v_kv;
  return out;
}

double predict_vac(const GridSample& sample, PqPoint power, const TransformerParams& xf) {
  const double v_m = sample.v_mv_kv * 1000.0 / xf.ratio;
  const double s2 = (power.p_kw * power.p_kw + power.q_kvar * power.q_kvar) * 1e6;
  return std::sqrt(v_m * v_m + xf.x_t_ohm * xf.x_t_ohm * s2 / (3.0 * v_m * v_m));
}

OptimalDroops optimal_droops(PqPoint optimum, double dfreq_hz, double dvac_v) {
  OptimalDroops out;
  if (std::abs(dfreq_hz) > 1e-6) out.alpha_kw_per_hz = optimum.p_kw / dfreq_hz;
  if (std::abs(dvac_v) > 1e-3) out.beta_kvar_per_v = optimum.q_kvar / dvac_v;
  return out;
}

}  // namespace bess
