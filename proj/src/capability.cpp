#include "bess/capability.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "bess/error.hpp"
#include "bess/line_format.hpp"

namespace bess {

namespace {

template <class... Fs>
struct Overloaded : Fs... {
  using Fs::operator()...;
};
template <class... Fs>
Overloaded(Fs...) -> Overloaded<Fs...>;

bool applies_to(const ConstraintAtom& atom, Cell cell) {
  const auto* disk = std::get_if<Disk>(&atom);
  if (disk == nullptr || disk->sector == DiskSector::All) return true;
  return (disk->sector == DiskSector::UpperQ) == (cell == Cell::Upper);
}

std::string describe(const ConstraintAtom& atom) {
  return std::visit(Overloaded{
                        [](const PMin&) { return std::string("pmin"); },
                        [](const PMax&) { return std::string("pmax"); },
                        [](const Disk&) { return std::string("disk"); },
                        [](const ParabolaCap&) { return std::string("parabola"); },
                        [](const QMax&) { return std::string("qmax"); },
                    },
                    atom);
}

void expect_args(const text::Line& line, std::size_t n) {
  if (line.tokens.size() != n + 1) {
    throw ParseError(line.number, "'" + line.tokens[0] + "' expects " + std::to_string(n) +
                                      " argument(s), got " +
                                      std::to_string(line.tokens.size() - 1));
  }
}

ConstraintAtom parse_atom(const text::Line& line) {
  const std::string& kind = line.tokens[0];
  auto num = [&](std::size_t i) { return text::parse_number(line.tokens[i], line.number); };
  if (kind == "pmin") {
    expect_args(line, 1);
    return PMin{num(1)};
  }
  if (kind == "pmax") {
    expect_args(line, 1);
    return PMax{num(1)};
  }
  if (kind == "qmax") {
    expect_args(line, 1);
    return QMax{num(1)};
  }
  if (kind == "parabola") {
    expect_args(line, 3);
    return ParabolaCap{num(1), num(2), num(3)};
  }
  if (kind == "disk") {
    if (line.tokens.size() != 2 && line.tokens.size() != 3) {
      throw ParseError(line.number, "'disk' expects a radius and an optional sector");
    }
    DiskSector sector = DiskSector::All;
    if (line.tokens.size() == 3) {
      const std::string& s = line.tokens[2];
      if (s == "all") {
        sector = DiskSector::All;
      } else if (s == "upper") {
        sector = DiskSector::UpperQ;
      } else if (s == "lower") {
        sector = DiskSector::LowerQ;
      } else {
        throw ParseError(line.number, "unknown disk sector '" + s + "'");
      }
    }
    return Disk{num(1), sector};
  }
  throw ParseError(line.number, "unknown atom '" + kind + "'");
}

}  // namespace

std::string CurveId::label() const {
  return std::to_string(vdc_v) + "/" + std::to_string(vac_v);
}

double atom_slack(const ConstraintAtom& atom, double p, double q) {
  return std::visit(Overloaded{
                        [&](const PMin& a) { return a.p_kw - p; },
                        [&](const PMax& a) { return p - a.p_kw; },
                        [&](const Disk& a) { return std::hypot(p, q) - a.radius_kva; },
                        [&](const ParabolaCap& a) { return q - a(p); },
                        [&](const QMax& a) { return q - a.q_kvar; },
                    },
                    atom);
}

ConstraintAtom scale_atom(const ConstraintAtom& atom, double shrink) {
  // s*R = {x : x/s in R}; for the cap, Q/s <= c0 + c1 P/s + c2 (P/s)^2.
  return std::visit(Overloaded{
                        [&](const PMin& a) -> ConstraintAtom { return PMin{a.p_kw * shrink}; },
                        [&](const PMax& a) -> ConstraintAtom { return PMax{a.p_kw * shrink}; },
                        [&](const Disk& a) -> ConstraintAtom {
                          return Disk{a.radius_kva * shrink, a.sector};
                        },
                        [&](const ParabolaCap& a) -> ConstraintAtom {
                          return ParabolaCap{a.c0 * shrink, a.c1, a.c2 / shrink};
                        },
                        [&](const QMax& a) -> ConstraintAtom { return QMax{a.q_kvar * shrink}; },
                    },
                    atom);
}

void CapabilityCurve::validate() const {
  const std::string where = "curve " + id.label();
  if (std::find(kKnownAnchors.begin(), kKnownAnchors.end(), id) == kKnownAnchors.end()) {
    throw ValidationError(where + ": anchors do not match a known capability curve");
  }
  if (atoms.empty()) throw ValidationError(where + ": no atoms");
  std::optional<double> pmin;
  std::optional<double> pmax;
  for (const auto& atom : atoms) {
    if (const auto* d = std::get_if<Disk>(&atom); d != nullptr && !(d->radius_kva > 0.0)) {
      throw ValidationError(where + ": disk radius must be positive");
    }
    if (const auto* c = std::get_if<ParabolaCap>(&atom); c != nullptr && !(c->c2 <= 0.0)) {
      throw ValidationError(where + ": parabola cap must be concave (c2 <= 0)");
    }
    if (const auto* a = std::get_if<PMin>(&atom)) pmin = pmin ? std::max(*pmin, a->p_kw) : a->p_kw;
    if (const auto* a = std::get_if<PMax>(&atom)) pmax = pmax ? std::min(*pmax, a->p_kw) : a->p_kw;
    if (atom_slack(atom, 0.0, 0.0) > 0.0) {
      throw ValidationError(where + ": " + describe(atom) + " excludes the origin");
    }
  }
  if (pmin && pmax && !(*pmin < *pmax)) {
    throw ValidationError(where + ": pmin must be below pmax");
  }
}

std::vector<CapabilityCurve> load_curves(std::istream& in) {
  std::vector<CapabilityCurve> curves;
  std::optional<CapabilityCurve> open;
  std::size_t open_line = 0;
  for (const auto& line : text::tokenize(in)) {
    const std::string& head = line.tokens[0];
    if (head == "curve") {
      if (open) throw ParseError(line.number, "'curve' before previous 'end'");
      if (line.tokens.size() != 4) {
        throw ParseError(line.number, "expected 'curve <label> vdc=<V> vac=<V>'");
      }
      CapabilityCurve curve;
      curve.label = line.tokens[1];
      bool have_dc = false;
      bool have_ac = false;
      for (std::size_t i = 2; i < 4; ++i) {
        auto [name, value] = text::split_assignment(line.tokens[i], line.number);
        const double v = text::parse_number(value, line.number);
        if (v != std::round(v)) throw ParseError(line.number, "anchor must be whole volts");
        if (name == "vdc") {
          curve.id.vdc_v = static_cast<int>(v);
          have_dc = true;
        } else if (name == "vac") {
          curve.id.vac_v = static_cast<int>(v);
          have_ac = true;
        } else {
          throw ParseError(line.number, "unknown curve field '" + name + "'");
        }
      }
      if (!have_dc || !have_ac) throw ParseError(line.number, "curve needs vdc= and vac=");
      open = std::move(curve);
      open_line = line.number;
    } else if (head == "end") {
      if (!open) throw ParseError(line.number, "'end' without 'curve'");
      if (line.tokens.size() != 1) throw ParseError(line.number, "unexpected tokens after 'end'");
      open->validate();
      for (const auto& c : curves) {
        if (c.id == open->id) {
          throw ValidationError("duplicate curve " + open->id.label());
        }
      }
      curves.push_back(std::move(*open));
      open.reset();
    } else {
      if (!open) throw ParseError(line.number, "atom '" + head + "' outside a curve block");
      open->atoms.push_back(parse_atom(line));
    }
  }
  if (open) throw ParseError(open_line, "curve block is not closed with 'end'");
  return curves;
}

std::vector<CapabilityCurve> load_curves_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open curve file '" + path + "'");
  return load_curves(in);
}

CurveLibrary::CurveLibrary(std::vector<CapabilityCurve> curves) : curves_(std::move(curves)) {}

bool CurveLibrary::has(CurveId id) const {
  return std::any_of(curves_.begin(), curves_.end(), [&](const auto& c) { return c.id == id; });
}

const CapabilityCurve& CurveLibrary::at(CurveId id) const {
  for (const auto& c : curves_) {
    if (c.id == id) return c;
  }
  throw InputError("curve " + id.label() + " is not loaded");
}

FeasibleRegion build_region(std::span<const CapabilityCurve> curves, double shrink) {
  if (!(shrink > 0.0 && shrink <= 1.0)) throw DomainError("shrink factor must be in (0, 1]");
  if (curves.empty()) throw DomainError("a region needs at least one curve");
  FeasibleRegion region;
  region.shrink = shrink;
  for (const auto& curve : curves) {
    region.curves.push_back(curve.id);
    for (const auto& atom : curve.atoms) {
      if (applies_to(atom, Cell::Upper)) region.upper_cell.push_back(atom);
      if (applies_to(atom, Cell::Lower)) region.lower_cell.push_back(atom);
    }
  }
  return region;
}

FeasibleRegion build_region(const CurveLibrary& library, std::span<const CurveId> ids,
                            double shrink) {
  std::vector<CapabilityCurve> selected;
  selected.reserve(ids.size());
  for (const auto id : ids) selected.push_back(library.at(id));
  return build_region(selected, shrink);
}

bool cell_contains(const FeasibleRegion& region, Cell cell, double p, double q, double tol) {
  const double s = region.shrink;
  const double ps = p / s;
  const double qs = q / s;
  if (cell == Cell::Upper ? qs < -tol : qs > tol) return false;
  for (const auto& atom : region.atoms(cell)) {
    if (atom_slack(atom, ps, qs) > tol) return false;
  }
  return true;
}

bool contains(const FeasibleRegion& region, double p, double q, double tol) {
  return cell_contains(region, Cell::Upper, p, q, tol) ||
         cell_contains(region, Cell::Lower, p, q, tol);
}

VoltageRange ac_interval(AcRange range) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  switch (range) {
    case AcRange::Nominal:
      return {270.0, 330.0};
    case AcRange::High:
      return {330.0, inf};
    case AcRange::Low:
      return {-inf, 270.0};
  }
  return {270.0, 330.0};
}

std::optional<std::size_t> dc_range_of(double vdc) {
  for (std::size_t i = 0; i < kDcRanges.size(); ++i) {
    if (kDcRanges[i].contains(vdc)) return i;
  }
  return std::nullopt;
}

AcRange ac_range_of(double vac) {
  if (vac > 330.0) return AcRange::High;
  if (vac > 270.0) return AcRange::Nominal;
  return AcRange::Low;
}

CurveId dc_curve_for(std::size_t dc_range) {
  static constexpr std::array<int, 3> anchors{500, 550, 600};
  return CurveId{anchors.at(dc_range), 300};
}

std::optional<CurveId> ac_curve_for(AcRange range) {
  switch (range) {
    case AcRange::Nominal:
      return std::nullopt;
    case AcRange::High:
      return CurveId{500, 330};
    case AcRange::Low:
      return CurveId{500, 270};
  }
  return std::nullopt;
}

std::vector<CurveId> CurveSelection::ids() const {
  std::vector<CurveId> out{dc};
  if (ac) out.push_back(*ac);
  return out;
}

CurveSelection select_curves(double vdc, double vac) {
  const auto dc = dc_range_of(vdc);
  if (!dc) {
    throw OutOfRangeError("DC bus voltage " + std::to_string(vdc) +
                          " V is outside the tabulated window (500, 800]");
  }
  if (!(vac > 0.0)) throw DomainError("AC voltage must be positive");
  const AcRange ac = ac_range_of(vac);
  return CurveSelection{dc_curve_for(*dc), ac_curve_for(ac), ac == AcRange::Low};
}

}  // namespace bess
