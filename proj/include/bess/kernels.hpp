#pragma once

// Batch versions of the hot paths. Each parallel kernel has a serial twin that
// produces identical output; the tests compare them element by element.

#include <span>
#include <string>
#include <vector>

#include "bess/capability.hpp"
#include "bess/optimizer.hpp"
#include "bess/simctl.hpp"

namespace bess::kernels {

// 1 where the point lies in the region, 0 elsewhere.
std::vector<unsigned char> classify_points(const FeasibleRegion& region,
                                           std::span<const PqPoint> points);
std::vector<unsigned char> classify_points_serial(const FeasibleRegion& region,
                                                  std::span<const PqPoint> points);

std::vector<ProjectionResult> project_targets(const FeasibleRegion& region,
                                              std::span<const PqPoint> targets, Weights w,
                                              PowerInterval p_bounds);
std::vector<ProjectionResult> project_targets_serial(const FeasibleRegion& region,
                                                     std::span<const PqPoint> targets, Weights w,
                                                     PowerInterval p_bounds);

struct BatchJob {
  ScenarioSpec spec;
  std::vector<GridSample> trace;
};

// Scenarios are independent; the parallel version runs one per thread.
std::vector<ScenarioResult> run_batch(std::span<const BatchJob> jobs, const CurveLibrary& curves,
                                      const TtcParamSet& params);
std::vector<ScenarioResult> run_batch_serial(std::span<const BatchJob> jobs,
                                             const CurveLibrary& curves, const TtcParamSet& params);

}  // namespace bess::kernels
