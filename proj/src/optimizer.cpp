#include "bess/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "bess/error.hpp"
#include "polynomial.hpp"

namespace bess {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Candidate acceptance, in the scaled (physical) coordinates.
constexpr double kCandidateTolerance = 1e-9;
// Constraints with slack above this count as active in the KKT check.
constexpr double kActiveTolerance = 1e-7;

struct Constraint {
  enum class Kind { PLower, PUpper, QLower, QUpper, Circle, Cap };
  Kind kind;
  double a = 0.0;  // bound value, circle radius, or cap c0
  double b = 0.0;  // cap c1
  double c = 0.0;  // cap c2

  bool is_p_line() const { return kind == Kind::PLower || kind == Kind::PUpper; }
  bool is_q_line() const { return kind == Kind::QLower || kind == Kind::QUpper; }
  double cap(double p) const { return a + (b + c * p) * p; }

  double slack(double p, double q) const {
    switch (kind) {
      case Kind::PLower: return a - p;
      case Kind::PUpper: return p - a;
      case Kind::QLower: return a - q;
      case Kind::QUpper: return q - a;
      case Kind::Circle: return std::hypot(p, q) - a;
      case Kind::Cap: return q - cap(p);
    }
    return 0.0;
  }

  std::array<double, 2> gradient(double p, double q) const {
    switch (kind) {
      case Kind::PLower: return {-1.0, 0.0};
      case Kind::PUpper: return {1.0, 0.0};
      case Kind::QLower: return {0.0, -1.0};
      case Kind::QUpper: return {0.0, 1.0};
      case Kind::Circle: {
        const double n = std::hypot(p, q);
        return n > 0.0 ? std::array<double, 2>{p / n, q / n} : std::array<double, 2>{0.0, 0.0};
      }
      case Kind::Cap: return {-(b + 2.0 * c * p), 1.0};
    }
    return {0.0, 0.0};
  }
};

using Kind = Constraint::Kind;

// One convex cell in physical (shrunk) coordinates. Linear bounds are merged
// and only the smallest circle is kept, since all disks share the origin.
struct CellProblem {
  std::vector<Constraint> cons;
  double env_lo = -kInf;  // P range implied by the linear bounds and the circle
  double env_hi = kInf;

  bool feasible(double p, double q, double tol) const {
    return std::all_of(cons.begin(), cons.end(),
                       [&](const Constraint& k) { return k.slack(p, q) <= tol; });
  }
};

template <class... Fs>
struct Overloaded : Fs... {
  using Fs::operator()...;
};
template <class... Fs>
Overloaded(Fs...) -> Overloaded<Fs...>;

CellProblem make_cell(const FeasibleRegion& region, Cell cell, PowerInterval bounds) {
  double p_lo = bounds.min_kw;
  double p_hi = bounds.max_kw;
  double q_lo = cell == Cell::Upper ? 0.0 : -kInf;
  double q_hi = cell == Cell::Lower ? 0.0 : kInf;
  double radius = kInf;
  std::vector<Constraint> caps;

  for (const auto& raw : region.atoms(cell)) {
    std::visit(Overloaded{
                   [&](const PMin& a) { p_lo = std::max(p_lo, a.p_kw); },
                   [&](const PMax& a) { p_hi = std::min(p_hi, a.p_kw); },
                   [&](const QMax& a) { q_hi = std::min(q_hi, a.q_kvar); },
                   [&](const Disk& a) { radius = std::min(radius, a.radius_kva); },
                   [&](const ParabolaCap& a) {
                     caps.push_back({Kind::Cap, a.c0, a.c1, a.c2});
                   },
               },
               scale_atom(raw, region.shrink));
  }

  CellProblem out;
  if (std::isfinite(p_lo)) out.cons.push_back({Kind::PLower, p_lo});
  if (std::isfinite(p_hi)) out.cons.push_back({Kind::PUpper, p_hi});
  if (std::isfinite(q_lo)) out.cons.push_back({Kind::QLower, q_lo});
  if (std::isfinite(q_hi)) out.cons.push_back({Kind::QUpper, q_hi});
  if (std::isfinite(radius)) out.cons.push_back({Kind::Circle, radius});
  out.cons.insert(out.cons.end(), caps.begin(), caps.end());

  out.env_lo = std::max(p_lo, -radius);
  out.env_hi = std::min(p_hi, radius);
  if (!std::isfinite(out.env_lo)) out.env_lo = -1e7;
  if (!std::isfinite(out.env_hi)) out.env_hi = 1e7;
  return out;
}

void circle_stationary(const Constraint& k, PqPoint x0, Weights w, std::vector<PqPoint>& out) {
  const double r = k.a;
  const double norm0 = std::hypot(x0.p_kw, x0.q_kvar);
  if (!(norm0 > r)) return;  // the circle can only be active for targets outside it
  double p = 0.0;
  double q = 0.0;
  if (w.lambda_p == w.lambda_q) {
    p = x0.p_kw * r / norm0;
    q = x0.q_kvar * r / norm0;
  } else {
    // Stationarity: x_i = lambda_i x0_i / (lambda_i + mu) with mu >= 0 chosen
    // so that |x| = r. |x(mu)| decreases strictly in mu.
    auto excess = [&](double mu) {
      const double pp = w.lambda_p * x0.p_kw / (w.lambda_p + mu);
      const double qq = w.lambda_q * x0.q_kvar / (w.lambda_q + mu);
      return pp * pp + qq * qq - r * r;
    };
    double lo = 0.0;
    double hi = std::max(w.lambda_p, w.lambda_q) * norm0 / r;
    for (int iter = 0; iter < 200; ++iter) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      (excess(mid) > 0.0 ? lo : hi) = mid;
    }
    const double mu = 0.5 * (lo + hi);
    p = w.lambda_p * x0.p_kw / (w.lambda_p + mu);
    q = w.lambda_q * x0.q_kvar / (w.lambda_q + mu);
    const double n = std::hypot(p, q);
    if (n > 0.0) {
      p *= r / n;
      q *= r / n;
    }
  }
  out.push_back({p, q});
}

void cap_stationary(const Constraint& k, PqPoint x0, Weights w, double lo, double hi,
                    std::vector<PqPoint>& out) {
  const double c0 = k.a;
  const double c1 = k.b;
  const double c2 = k.c;
  const double d = c0 - x0.q_kvar;
  // d/dP [lp (P - P0)^2 + lq (cap(P) - Q0)^2] / 2
  const std::array<double, 4> poly{
      w.lambda_q * c1 * d - w.lambda_p * x0.p_kw,
      w.lambda_q * (c1 * c1 + 2.0 * c2 * d) + w.lambda_p,
      3.0 * w.lambda_q * c1 * c2,
      2.0 * w.lambda_q * c2 * c2,
  };
  for (double p : poly::real_roots(poly, lo, hi)) out.push_back({p, k.cap(p)});
}

void stationary_points(const Constraint& k, PqPoint x0, Weights w, const CellProblem& cell,
                       std::vector<PqPoint>& out) {
  switch (k.kind) {
    case Kind::PLower:
    case Kind::PUpper: out.push_back({k.a, x0.q_kvar}); break;
    case Kind::QLower:
    case Kind::QUpper: out.push_back({x0.p_kw, k.a}); break;
    case Kind::Circle: circle_stationary(k, x0, w, out); break;
    case Kind::Cap: cap_stationary(k, x0, w, cell.env_lo, cell.env_hi, out); break;
  }
}

void intersections(const Constraint& x, const Constraint& y, const CellProblem& cell,
                   std::vector<PqPoint>& out) {
  const Constraint* u = &x;
  const Constraint* v = &y;
  // Order as P-line < Q-line < Circle < Cap to halve the case analysis.
  auto rank = [](const Constraint& k) {
    if (k.is_p_line()) return 0;
    if (k.is_q_line()) return 1;
    return k.kind == Kind::Circle ? 2 : 3;
  };
  if (rank(*u) > rank(*v)) std::swap(u, v);
  const int ru = rank(*u);
  const int rv = rank(*v);

  if (ru == rv && ru != 3) return;  // parallel lines, concentric circles
  if (ru == 0 && rv == 1) {
    out.push_back({u->a, v->a});
  } else if (ru == 0 && rv == 2) {
    const double s = v->a * v->a - u->a * u->a;
    if (s >= 0.0) {
      out.push_back({u->a, std::sqrt(s)});
      out.push_back({u->a, -std::sqrt(s)});
    }
  } else if (ru == 0 && rv == 3) {
    out.push_back({u->a, v->cap(u->a)});
  } else if (ru == 1 && rv == 2) {
    const double s = v->a * v->a - u->a * u->a;
    if (s >= 0.0) {
      out.push_back({std::sqrt(s), u->a});
      out.push_back({-std::sqrt(s), u->a});
    }
  } else if (ru == 1 && rv == 3) {
    const std::array<double, 3> poly{v->a - u->a, v->b, v->c};
    for (double p : poly::real_roots(poly, cell.env_lo, cell.env_hi)) out.push_back({p, u->a});
  } else if (ru == 2 && rv == 3) {
    // P^2 + cap(P)^2 = r^2
    const double r = u->a;
    const double c0 = v->a;
    const double c1 = v->b;
    const double c2 = v->c;
    const std::array<double, 5> poly{
        c0 * c0 - r * r,
        2.0 * c0 * c1,
        c1 * c1 + 2.0 * c0 * c2 + 1.0,
        2.0 * c1 * c2,
        c2 * c2,
    };
    const double lo = std::max(-r, cell.env_lo);
    const double hi = std::min(r, cell.env_hi);
    for (double p : poly::real_roots(poly, lo, hi)) out.push_back({p, v->cap(p)});
  } else if (ru == 3 && rv == 3) {
    const std::array<double, 3> poly{u->a - v->a, u->b - v->b, u->c - v->c};
    for (double p : poly::real_roots(poly, cell.env_lo, cell.env_hi)) {
      out.push_back({p, u->cap(p)});
    }
  }
}

struct CellSolution {
  PqPoint point;
  double objective = kInf;
  double secondary = 0.0;  // tie-break distance for zero-weight problems
};

// Feasible Q values at a given P, or nothing.
std::optional<std::pair<double, double>> q_interval_at(const CellProblem& cell, double p) {
  double lo = -kInf;
  double hi = kInf;
  for (const auto& k : cell.cons) {
    switch (k.kind) {
      case Kind::PLower:
        if (p < k.a) return std::nullopt;
        break;
      case Kind::PUpper:
        if (p > k.a) return std::nullopt;
        break;
      case Kind::QLower: lo = std::max(lo, k.a); break;
      case Kind::QUpper: hi = std::min(hi, k.a); break;
      case Kind::Circle: {
        if (std::abs(p) > k.a) return std::nullopt;
        const double s = std::sqrt(k.a * k.a - p * p);
        lo = std::max(lo, -s);
        hi = std::min(hi, s);
        break;
      }
      case Kind::Cap: hi = std::min(hi, k.cap(p)); break;
    }
  }
  if (lo > hi) return std::nullopt;
  return std::pair{lo, hi};
}

// Feasible P values at a given Q, or nothing.
std::optional<std::pair<double, double>> p_interval_at(const CellProblem& cell, double q) {
  double lo = -kInf;
  double hi = kInf;
  for (const auto& k : cell.cons) {
    switch (k.kind) {
      case Kind::PLower: lo = std::max(lo, k.a); break;
      case Kind::PUpper: hi = std::min(hi, k.a); break;
      case Kind::QLower:
        if (q < k.a) return std::nullopt;
        break;
      case Kind::QUpper:
        if (q > k.a) return std::nullopt;
        break;
      case Kind::Circle: {
        if (std::abs(q) > k.a) return std::nullopt;
        const double s = std::sqrt(k.a * k.a - q * q);
        lo = std::max(lo, -s);
        hi = std::min(hi, s);
        break;
      }
      case Kind::Cap: {
        // c2 P^2 + c1 P + (c0 - Q) >= 0
        const double c0 = k.a - q;
        if (k.c < 0.0) {
          const double disc = k.b * k.b - 4.0 * k.c * c0;
          if (disc < 0.0) return std::nullopt;
          const double sq = std::sqrt(disc);
          const double r1 = (-k.b + sq) / (2.0 * k.c);
          const double r2 = (-k.b - sq) / (2.0 * k.c);
          lo = std::max(lo, std::min(r1, r2));
          hi = std::min(hi, std::max(r1, r2));
        } else if (k.b > 0.0) {
          lo = std::max(lo, -c0 / k.b);
        } else if (k.b < 0.0) {
          hi = std::min(hi, -c0 / k.b);
        } else if (c0 < 0.0) {
          return std::nullopt;
        }
        break;
      }
    }
  }
  if (lo > hi) return std::nullopt;
  return std::pair{lo, hi};
}

// Extent of a convex set along one axis, given a membership test and a
// feasible starting value inside [lo, hi].
template <class Feasible>
std::pair<double, double> feasible_extent(Feasible&& ok, double start, double lo, double hi) {
  auto search = [&](double edge) {
    if (ok(edge)) return edge;
    double in = start;
    double out = edge;
    for (int iter = 0; iter < 200; ++iter) {
      const double mid = 0.5 * (in + out);
      if (mid == in || mid == out) break;
      (ok(mid) ? in : out) = mid;
    }
    return in;
  };
  return {search(lo), search(hi)};
}

CellSolution solve_lexicographic(const CellProblem& cell, PqPoint x0, Weights w) {
  CellSolution sol;
  if (w.lambda_q == 0.0) {
    auto [lo, hi] = feasible_extent([&](double p) { return q_interval_at(cell, p).has_value(); },
                                    0.0, cell.env_lo, cell.env_hi);
    const double p = std::clamp(x0.p_kw, lo, hi);
    const auto qs = q_interval_at(cell, p);
    const double q = qs ? std::clamp(x0.q_kvar, qs->first, qs->second) : 0.0;
    sol.point = {p, q};
    sol.secondary = (q - x0.q_kvar) * (q - x0.q_kvar);
  } else {
    double q_lo = -1e7;
    double q_hi = 1e7;
    for (const auto& k : cell.cons) {
      if (k.kind == Kind::Circle) {
        q_lo = std::max(q_lo, -k.a);
        q_hi = std::min(q_hi, k.a);
      }
    }
    auto [lo, hi] = feasible_extent([&](double q) { return p_interval_at(cell, q).has_value(); },
                                    0.0, q_lo, q_hi);
    const double q = std::clamp(x0.q_kvar, lo, hi);
    const auto ps = p_interval_at(cell, q);
    const double p = ps ? std::clamp(x0.p_kw, ps->first, ps->second) : 0.0;
    sol.point = {p, q};
    sol.secondary = (p - x0.p_kw) * (p - x0.p_kw);
  }
  sol.objective = objective(sol.point, x0, w);
  return sol;
}

CellSolution solve_cell(const CellProblem& cell, PqPoint x0, Weights w) {
  if (w.lambda_p == 0.0 || w.lambda_q == 0.0) return solve_lexicographic(cell, x0, w);

  std::vector<PqPoint> candidates;
  candidates.reserve(64);
  candidates.push_back(x0);
  for (const auto& k : cell.cons) stationary_points(k, x0, w, cell, candidates);
  for (std::size_t i = 0; i < cell.cons.size(); ++i) {
    for (std::size_t j = i + 1; j < cell.cons.size(); ++j) {
      intersections(cell.cons[i], cell.cons[j], cell, candidates);
    }
  }

  CellSolution best;
  for (const auto& x : candidates) {
    if (!cell.feasible(x.p_kw, x.q_kvar, kCandidateTolerance)) continue;
    const double f = objective(x, x0, w);
    if (f < best.objective) {
      best.objective = f;
      best.point = x;
    }
  }
  // The origin is always feasible, so this only triggers on an empty cell.
  if (!std::isfinite(best.objective)) {
    best.point = {0.0, 0.0};
    best.objective = objective(best.point, x0, w);
  }
  return best;
}

bool strictly_better(const CellSolution& a, const CellSolution& b) {
  const double scale = 1e-12 * (1.0 + std::max(a.objective, b.objective));
  if (a.objective < b.objective - scale) return true;
  if (a.objective > b.objective + scale) return false;
  return a.secondary < b.secondary - 1e-12 * (1.0 + std::max(a.secondary, b.secondary));
}

bool admissible(const FeasibleRegion& region, PowerInterval bounds, PqPoint x) {
  return bounds.contains(x.p_kw) && contains(region, x.p_kw, x.q_kvar);
}

}  // namespace

double objective(PqPoint x, PqPoint target, Weights w) {
  const double dp = x.p_kw - target.p_kw;
  const double dq = x.q_kvar - target.q_kvar;
  return w.lambda_p * dp * dp + w.lambda_q * dq * dq;
}

ProjectionResult project_detailed(const FeasibleRegion& region, PqPoint target, Weights w,
                                  PowerInterval p_bounds) {
  if (!(w.lambda_p >= 0.0 && w.lambda_q >= 0.0) || (w.lambda_p == 0.0 && w.lambda_q == 0.0)) {
    throw DomainError("projection weights must be non-negative and not both zero");
  }
  if (!(p_bounds.min_kw <= 0.0 && p_bounds.max_kw >= 0.0)) {
    throw DomainError("active power bounds must admit idle operation");
  }

  const CellSolution upper = solve_cell(make_cell(region, Cell::Upper, p_bounds), target, w);
  const CellSolution lower = solve_cell(make_cell(region, Cell::Lower, p_bounds), target, w);
  const bool pick_lower = strictly_better(lower, upper);
  const CellSolution& best = pick_lower ? lower : upper;

  ProjectionResult out{best.point, pick_lower ? Cell::Lower : Cell::Upper, best.objective};
  if (!admissible(region, p_bounds, out.point)) {
    // Pull toward the (feasible) origin until the membership test agrees.
    double in = 0.0;
    double outside = 1.0;
    for (int iter = 0; iter < 100; ++iter) {
      const double mid = 0.5 * (in + outside);
      const PqPoint x{best.point.p_kw * mid, best.point.q_kvar * mid};
      (admissible(region, p_bounds, x) ? in : outside) = mid;
    }
    out.point = {best.point.p_kw * in, best.point.q_kvar * in};
    out.objective = objective(out.point, target, w);
  }
  return out;
}

PqPoint project(const ProjectionProblem& problem) {
  return project_detailed(problem.region, problem.target, problem.weights, problem.p_bounds).point;
}

double kkt_residual(const FeasibleRegion& region, Cell cell, PqPoint target, Weights w,
                    PowerInterval p_bounds, PqPoint x) {
  const CellProblem cp = make_cell(region, cell, p_bounds);
  double violation = 0.0;
  std::vector<std::array<double, 2>> active;
  for (const auto& k : cp.cons) {
    const double s = k.slack(x.p_kw, x.q_kvar);
    violation = std::max(violation, s);
    if (s >= -kActiveTolerance) active.push_back(k.gradient(x.p_kw, x.q_kvar));
  }
  const std::array<double, 2> g0{2.0 * w.lambda_p * (x.p_kw - target.p_kw),
                                 2.0 * w.lambda_q * (x.q_kvar - target.q_kvar)};
  auto norm_with = [&](double m1, const std::array<double, 2>& a1, double m2,
                       const std::array<double, 2>& a2) {
    return std::hypot(g0[0] + m1 * a1[0] + m2 * a2[0], g0[1] + m1 * a1[1] + m2 * a2[1]);
  };
  const std::array<double, 2> zero{0.0, 0.0};

  // Non-negative least squares in 2-D: some optimal multiplier vector uses at
  // most two gradients, so enumerating supports of size <= 2 is exact.
  double best = std::hypot(g0[0], g0[1]);
  for (std::size_t i = 0; i < active.size(); ++i) {
    const auto& a = active[i];
    const double aa = a[0] * a[0] + a[1] * a[1];
    if (aa > 0.0) {
      const double mu = -(g0[0] * a[0] + g0[1] * a[1]) / aa;
      if (mu >= 0.0) best = std::min(best, norm_with(mu, a, 0.0, zero));
    }
    for (std::size_t j = i + 1; j < active.size(); ++j) {
      const auto& b = active[j];
      const double det = a[0] * b[1] - a[1] * b[0];
      if (std::abs(det) < 1e-14) continue;
      const double m1 = (-g0[0] * b[1] + g0[1] * b[0]) / det;
      const double m2 = (-a[0] * g0[1] + a[1] * g0[0]) / det;
      if (m1 >= 0.0 && m2 >= 0.0) best = std::min(best, norm_with(m1, a, m2, b));
    }
  }
  return std::max(violation, best);
}

bool verify_consistency(double vdc, double vac, VoltageRange assumed_dc, VoltageRange assumed_ac) {
  return assumed_dc.contains(vdc) && assumed_ac.contains(vac);
}

void ControllerConfig::validate() const {
  droop.validate();
  battery.validate();
  transformer.validate();
  if (!(c_shrink > 0.0 && c_shrink <= 1.0)) throw ValidationError("c_shrink must be in (0, 1]");
}

const char* to_string(StepOutcome outcome) {
  switch (outcome) {
    case StepOutcome::FeasibleUnchanged: return "feasible";
    case StepOutcome::ClippedToBoundary: return "clipped";
    case StepOutcome::Fallback: return "fallback";
  }
  return "unknown";
}

namespace {

std::size_t ac_index(AcRange r) {
  return static_cast<std::size_t>(std::find(kAcRanges.begin(), kAcRanges.end(), r) -
                                  kAcRanges.begin());
}

}  // namespace

SetpointSolver::SetpointSolver(ControllerConfig cfg, TtcParamSet params, const CurveLibrary& curves)
    : cfg_(std::move(cfg)), params_(std::move(params)) {
  cfg_.validate();
  for (std::size_t i = 0; i < kDcRanges.size(); ++i) {
    for (const AcRange ac : kAcRanges) {
      std::vector<CurveId> ids{dc_curve_for(i)};
      if (auto extra = ac_curve_for(ac)) ids.push_back(*extra);
      regions_[i][ac_index(ac)] = build_region(curves, ids, cfg_.c_shrink);
    }
  }
}

const FeasibleRegion& SetpointSolver::region(std::size_t dc_range, AcRange ac) const {
  return regions_.at(dc_range)[ac_index(ac)];
}

StepResult SetpointSolver::step(const GridSample& sample, const TtcState& state) const {
  sample.validate();
  const BatteryConfig& bat = cfg_.battery;
  const Weights weights{cfg_.droop.lambda_p, cfg_.droop.lambda_q};
  // Parameter bands switch between steps only.
  const TtcParams& params = params_.for_soc(state.soc);

  ControlRecord rec;
  rec.sample = sample;
  rec.delta_f_hz = frequency_deviation(sample, cfg_.droop);
  rec.delta_v_v = voltage_deviation_v(sample, cfg_.droop);
  rec.target = droop_targets(sample, cfg_.droop);

  // Charging and discharging map through different efficiencies, but both
  // branches meet at 0, so the admissible AC interval covers both at once.
  const DcPowerBounds dc = dc_power_bounds(state, params, bat);
  rec.p_ac_bounds = {ac_from_dc(dc.p_min_kw, bat.eta), ac_from_dc(dc.p_max_kw, bat.eta)};

  // Seed the assumption with the voltages the unclipped target would produce.
  const double vac_guess = predict_vac(sample, rec.target, cfg_.transformer);
  const double p_guess = std::clamp(rec.target.p_kw, rec.p_ac_bounds.min_kw, rec.p_ac_bounds.max_kw);
  const double vdc_guess = solve_vdc(dc_from_ac(p_guess, bat.eta), state, params);
  std::size_t dc0 = 0;
  if (auto r = dc_range_of(vdc_guess)) {
    dc0 = *r;
  } else if (vdc_guess > kDcRanges.back().hi) {
    dc0 = kDcRanges.size() - 1;
  }
  const std::size_t ac0 = ac_index(ac_range_of(vac_guess));

  std::vector<std::pair<std::size_t, std::size_t>> order{{dc0, ac0}};
  for (std::size_t i = 0; i < kDcRanges.size(); ++i) {
    for (std::size_t j = 0; j < kAcRanges.size(); ++j) {
      if (i != dc0 || j != ac0) order.emplace_back(i, j);
    }
  }

  struct Trial {
    bool done = false;
    ProjectionResult proj;
    double p_dc = 0.0;
    double vdc = 0.0;
    double vac = 0.0;
  };
  std::array<std::array<Trial, kAcRanges.size()>, kDcRanges.size()> trials{};

  auto evaluate = [&](std::size_t i, std::size_t j) -> Trial& {
    Trial& t = trials[i][j];
    if (!t.done) {
      t.proj = project_detailed(regions_[i][j], rec.target, weights, rec.p_ac_bounds);
      t.p_dc = dc_from_ac(t.proj.point.p_kw, bat.eta);
      t.vdc = solve_vdc(t.p_dc, state, params);
      t.vac = predict_vac(sample, t.proj.point, cfg_.transformer);
      t.done = true;
      ++rec.projections;
    }
    return t;
  };

  const Trial* accepted = nullptr;
  std::size_t acc_i = 0;
  std::size_t acc_j = 0;
  double last_vac = vac_guess;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const auto [i, j] = order[k];
    const Trial& t = evaluate(i, j);
    last_vac = t.vac;
    if (verify_consistency(t.vdc, t.vac, kDcRanges[i], ac_interval(kAcRanges[j]))) {
      accepted = &t;
      acc_i = i;
      acc_j = j;
      rec.switches = static_cast<int>(k);
      break;
    }
  }
  if (accepted == nullptr) {
    // No self-consistent assumption: lowest DC anchor, AC curve from the last
    // predicted voltage.
    acc_i = 0;
    acc_j = ac_index(ac_range_of(last_vac));
    accepted = &evaluate(acc_i, acc_j);
    rec.switches = static_cast<int>(order.size()) - 1;
    rec.outcome = StepOutcome::Fallback;
  } else {
    rec.outcome = accepted->proj.point == rec.target ? StepOutcome::FeasibleUnchanged
                                                      : StepOutcome::ClippedToBoundary;
  }

  const FeasibleRegion& region = regions_[acc_i][acc_j];
  rec.optimal = accepted->proj.point;
  rec.p_dc_kw = accepted->p_dc;
  rec.vdc_pred_v = accepted->vdc;
  rec.vac_pred_v = accepted->vac;
  rec.dc_curve = dc_curve_for(acc_i);
  rec.ac_curve = ac_curve_for(kAcRanges[acc_j]);
  rec.conservative_clamp = kAcRanges[acc_j] == AcRange::Low;
  rec.exceeds_target = std::abs(rec.optimal.p_kw) > std::abs(rec.target.p_kw) + 1e-9;
  rec.droops = optimal_droops(rec.optimal, rec.delta_f_hz, rec.delta_v_v);

  const bool target_ok = rec.p_ac_bounds.contains(rec.target.p_kw) &&
                         contains(region, rec.target.p_kw, rec.target.q_kvar);
  rec.p_naive_kw = target_ok ? rec.target.p_kw : 0.0;

  StepResult out;
  out.next = ttc_step(state, rec.p_dc_kw, rec.vdc_pred_v, params, bat, bat.delta_t_s);
  rec.soc_after = out.next.soc;
  out.record = std::move(rec);
  return out;
}

StepResult solve_step(const GridSample& sample, const TtcState& state, const ControllerConfig& cfg,
                      const TtcParamSet& params, const CurveLibrary& curves) {
  return SetpointSolver(cfg, params, curves).step(sample, state);
}

FeasibleRegion record_region(const ControlRecord& record, const CurveLibrary& curves,
                             double c_shrink) {
  std::vector<CurveId> ids{record.dc_curve};
  if (record.ac_curve) ids.push_back(*record.ac_curve);
  return build_region(curves, ids, c_shrink);
}

}  // namespace bess
