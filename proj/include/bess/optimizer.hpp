#pragma once

// Optimal set-point computation: weighted projection of the droop target onto
// the converter's feasible region, inside a loop that guesses the DC and AC
// voltage ranges, selects curves, and checks the guess against the voltages
// the chosen set-point would produce.

#include <array>
#include <optional>

#include "bess/battery.hpp"
#include "bess/capability.hpp"
#include "bess/grid.hpp"

namespace bess {

struct Weights {
  double lambda_p = 1.0;
  double lambda_q = 1.0;
};

struct PowerInterval {
  double min_kw = 0.0;
  double max_kw = 0.0;
  bool contains(double p, double tol = kMembershipTolerance) const {
    return p >= min_kw - tol && p <= max_kw + tol;
  }
};

struct ProjectionProblem {
  PqPoint target;
  Weights weights;
  FeasibleRegion region;
  PowerInterval p_bounds;
};

struct ProjectionResult {
  PqPoint point;
  Cell cell = Cell::Upper;
  double objective = 0.0;
};

double objective(PqPoint x, PqPoint target, Weights w);

// Minimizer of the weighted squared distance to the target over
// (upper cell U lower cell) with P restricted to p_bounds. Each cell is solved
// exactly by enumerating KKT candidates: the target itself, the stationary
// points of the objective on each constraint boundary, and the pairwise
// boundary intersections. A zero weight is handled lexicographically: the
// weighted coordinate is matched first, then the other one is brought as close
// to its target as the region allows.
ProjectionResult project_detailed(const FeasibleRegion& region, PqPoint target, Weights w,
                                  PowerInterval p_bounds);
PqPoint project(const ProjectionProblem& problem);

// Optimality residual of x for one cell: the larger of the worst constraint
// violation and the smallest |grad f + sum mu_k grad g_k| over multipliers
// mu >= 0 on the active constraints. kW / kvar units.
double kkt_residual(const FeasibleRegion& region, Cell cell, PqPoint target, Weights w,
                    PowerInterval p_bounds, PqPoint x);

bool verify_consistency(double vdc, double vac, VoltageRange assumed_dc, VoltageRange assumed_ac);

struct ControllerConfig {
  DroopConfig droop;
  BatteryConfig battery;
  TransformerParams transformer = TransformerParams::from_short_circuit(70.0, 0.0628, 300.0, 630.0);
  double c_shrink = 7.0 / 9.0;

  void validate() const;
};

enum class StepOutcome { FeasibleUnchanged, ClippedToBoundary, Fallback };

const char* to_string(StepOutcome outcome);

struct ControlRecord {
  GridSample sample;
  double delta_f_hz = 0.0;  // f_ref - f
  double delta_v_v = 0.0;   // (v_ref - v_mv), volts at MV
  PqPoint target;
  PqPoint optimal;
  double p_naive_kw = 0.0;  // baseline: target if feasible, else 0
  double p_dc_kw = 0.0;
  double vdc_pred_v = 0.0;
  double vac_pred_v = 0.0;
  PowerInterval p_ac_bounds;
  CurveId dc_curve;
  std::optional<CurveId> ac_curve;
  StepOutcome outcome = StepOutcome::FeasibleUnchanged;
  int switches = 0;          // range re-assumptions before convergence
  int projections = 0;       // projection solves performed
  bool conservative_clamp = false;
  bool exceeds_target = false;  // |p*| > |p0|, kept for audit
  OptimalDroops droops;
  double soc_after = 0.0;
};

struct StepResult {
  ControlRecord record;
  TtcState next;
};

// Holds the configuration and the pre-built regions for every (DC range,
// AC range) assumption. Immutable once built; step() is const.
class SetpointSolver {
public:
  SetpointSolver(ControllerConfig cfg, TtcParamSet params, const CurveLibrary& curves);

  StepResult step(const GridSample& sample, const TtcState& state) const;

  const ControllerConfig& config() const { return cfg_; }
  const TtcParamSet& params() const { return params_; }
  const FeasibleRegion& region(std::size_t dc_range, AcRange ac) const;

  static constexpr int kMaxAssumptions = static_cast<int>(kDcRanges.size() * kAcRanges.size());

private:
  ControllerConfig cfg_;
  TtcParamSet params_;
  std::array<std::array<FeasibleRegion, kAcRanges.size()>, kDcRanges.size()> regions_;
};

StepResult solve_step(const GridSample& sample, const TtcState& state, const ControllerConfig& cfg,
                      const TtcParamSet& params, const CurveLibrary& curves);

// Region a record's set-point was checked against.
FeasibleRegion record_region(const ControlRecord& record, const CurveLibrary& curves,
                             double c_shrink);

}  // namespace bess
