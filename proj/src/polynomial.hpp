#pragma once

#include <span>
#include <vector>

namespace bess::poly {

// Coefficients in ascending order: c[0] + c[1] x + c[2] x^2 + ...
double evaluate(std::span<const double> c, double x);

// All real roots in [lo, hi], ascending. Roots are isolated between the real
// roots of the derivative, where the polynomial is monotone, then bisected to
// full precision. Double roots are reported where the polynomial touches zero
// at a critical point.
std::vector<double> real_roots(std::span<const double> c, double lo, double hi);

}  // namespace bess::poly
