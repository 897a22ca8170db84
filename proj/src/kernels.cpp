#include "bess/kernels.hpp"

#include <exception>
#include <mutex>

namespace bess::kernels {

namespace {

// Exceptions must not escape an OpenMP region; keep the first one and rethrow
// after the loop.
class FirstError {
public:
  template <class F>
  void run(F&& f) {
    try {
      f();
    } catch (...) {
      std::lock_guard lock(mu_);
      if (!err_) err_ = std::current_exception();
    }
  }
  void rethrow() const {
    if (err_) std::rethrow_exception(err_);
  }

private:
  std::mutex mu_;
  std::exception_ptr err_;
};

}  // namespace

std::vector<unsigned char> classify_points(const FeasibleRegion& region,
                                           std::span<const PqPoint> points) {
  std::vector<unsigned char> out(points.size());
  const auto n = static_cast<std::ptrdiff_t>(points.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = contains(region, points[i].p_kw, points[i].q_kvar) ? 1 : 0;
  return out;
}

std::vector<unsigned char> classify_points_serial(const FeasibleRegion& region,
                                                  std::span<const PqPoint> points) {
  std::vector<unsigned char> out(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) out[i] = contains(region, points[i].p_kw, points[i].q_kvar) ? 1 : 0;
  return out;
}

std::vector<ProjectionResult> project_targets(const FeasibleRegion& region,
                                              std::span<const PqPoint> targets, Weights w,
                                              PowerInterval p_bounds) {
  std::vector<ProjectionResult> out(targets.size());
  FirstError err;
  const auto n = static_cast<std::ptrdiff_t>(targets.size());
#pragma omp parallel for schedule(dynamic, 64)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    err.run([&] { out[i] = project_detailed(region, targets[i], w, p_bounds); });
  }
  err.rethrow();
  return out;
}

std::vector<ProjectionResult> project_targets_serial(const FeasibleRegion& region,
                                                     std::span<const PqPoint> targets, Weights w,
                                                     PowerInterval p_bounds) {
  std::vector<ProjectionResult> out;
  out.reserve(targets.size());
  for (const auto& t : targets) out.push_back(project_detailed(region, t, w, p_bounds));
  return out;
}

std::vector<ScenarioResult> run_batch(std::span<const BatchJob> jobs, const CurveLibrary& curves,
                                      const TtcParamSet& params) {
  std::vector<ScenarioResult> out(jobs.size());
  FirstError err;
  const auto n = static_cast<std::ptrdiff_t>(jobs.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    err.run([&] { out[i] = run_scenario(jobs[i].spec, jobs[i].trace, curves, params); });
  }
  err.rethrow();
  return out;
}

std::vector<ScenarioResult> run_batch_serial(std::span<const BatchJob> jobs,
                                             const CurveLibrary& curves, const TtcParamSet& params) {
  std::vector<ScenarioResult> out;
  out.reserve(jobs.size());
  for (const auto& job : jobs) out.push_back(run_scenario(job.spec, job.trace, curves, params));
  return out;
}

}  // namespace bess::kernels
