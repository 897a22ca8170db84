#pragma once

// Converter PQ capability curves: the feasible (P, Q) set of the converter as
// a function of DC-bus and AC voltage, made of a handful of convex atoms.

#include <array>
#include <compare>
#include <istream>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace bess {

// Active/reactive power pair, kW and kvar.
struct PqPoint {
  double p_kw = 0.0;
  double q_kvar = 0.0;
  friend bool operator==(const PqPoint&, const PqPoint&) = default;
};

// A curve is keyed by its (DC, AC) anchor voltages.
struct CurveId {
  int vdc_v = 0;
  int vac_v = 0;
  friend auto operator<=>(const CurveId&, const CurveId&) = default;
  std::string label() const;  // "600/300"
};

enum class DiskSector { All, UpperQ, LowerQ };

// P >= p
struct PMin {
  double p_kw;
};
// P <= p
struct PMax {
  double p_kw;
};
// P^2 + Q^2 <= r^2, restricted to one Q half-plane unless sector == All
struct Disk {
  double radius_kva;
  DiskSector sector = DiskSector::All;
};
// Q <= c0 + c1 P + c2 P^2 with c2 <= 0
struct ParabolaCap {
  double c0;
  double c1;
  double c2;
  double operator()(double p) const { return c0 + (c1 + c2 * p) * p; }
};
// Q <= q
struct QMax {
  double q_kvar;
};

using ConstraintAtom = std::variant<PMin, PMax, Disk, ParabolaCap, QMax>;

// Signed violation of an atom at (p, q) in kW/kvar; <= 0 means satisfied.
double atom_slack(const ConstraintAtom& atom, double p, double q);

// Same atom for the region scaled by `shrink` about the origin.
ConstraintAtom scale_atom(const ConstraintAtom& atom, double shrink);

struct CapabilityCurve {
  std::string label;
  CurveId id;
  std::vector<ConstraintAtom> atoms;

  double vdc_anchor() const { return id.vdc_v; }
  double vac_anchor() const { return id.vac_v; }

  // Throws ValidationError when an invariant is broken.
  void validate() const;
};

// The five anchor pairs the curve data is expected to cover.
inline constexpr std::array<CurveId, 5> kKnownAnchors{{
    {600, 300}, {550, 300}, {500, 300}, {500, 330}, {500, 270}}};

// Parses the curve-definition format (docs/file_formats.md). Every curve is
// validated; an empty document yields an empty list.
std::vector<CapabilityCurve> load_curves(std::istream& in);
std::vector<CapabilityCurve> load_curves_file(const std::string& path);

class CurveLibrary {
public:
  CurveLibrary() = default;
  explicit CurveLibrary(std::vector<CapabilityCurve> curves);

  const CapabilityCurve& at(CurveId id) const;
  bool has(CurveId id) const;
  std::span<const CapabilityCurve> curves() const { return curves_; }

private:
  std::vector<CapabilityCurve> curves_;
};

enum class Cell { Upper, Lower };

// Intersection of all atoms of the selected curves, split at Q = 0 into two
// convex cells. Atoms are stored unscaled; `shrink` scales the whole region.
struct FeasibleRegion {
  std::vector<ConstraintAtom> upper_cell;
  std::vector<ConstraintAtom> lower_cell;
  double shrink = 1.0;
  std::vector<CurveId> curves;

  const std::vector<ConstraintAtom>& atoms(Cell cell) const {
    return cell == Cell::Upper ? upper_cell : lower_cell;
  }
};

FeasibleRegion build_region(std::span<const CapabilityCurve> curves, double shrink);
FeasibleRegion build_region(const CurveLibrary& library, std::span<const CurveId> ids,
                            double shrink);

inline constexpr double kMembershipTolerance = 1e-9;

// Membership of one cell, including the Q-sign half-plane.
bool cell_contains(const FeasibleRegion& region, Cell cell, double p, double q,
                   double tol = kMembershipTolerance);
bool contains(const FeasibleRegion& region, double p, double q,
              double tol = kMembershipTolerance);

// Half-open voltage interval (lo, hi].
struct VoltageRange {
  double lo;
  double hi;
  bool contains(double v) const { return v > lo && v <= hi; }
};

inline constexpr std::array<VoltageRange, 3> kDcRanges{{{500.0, 550.0}, {550.0, 600.0},
                                                        {600.0, 800.0}}};

enum class AcRange { Nominal, High, Low };

inline constexpr std::array<AcRange, 3> kAcRanges{AcRange::Nominal, AcRange::High, AcRange::Low};

VoltageRange ac_interval(AcRange range);
std::optional<std::size_t> dc_range_of(double vdc);
AcRange ac_range_of(double vac);

// Curve anchored at the lower end of a DC range.
CurveId dc_curve_for(std::size_t dc_range);
// Extra curve intersected for an AC range, if any.
std::optional<CurveId> ac_curve_for(AcRange range);

struct CurveSelection {
  CurveId dc;
  std::optional<CurveId> ac;
  bool conservative_clamp = false;  // vac fell below every tabulated range

  std::vector<CurveId> ids() const;
};

// Throws OutOfRangeError for vdc outside (500, 800].
CurveSelection select_curves(double vdc, double vac);

}  // namespace bess
