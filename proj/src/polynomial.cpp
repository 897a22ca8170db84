#include "polynomial.hpp"

#include <algorithm>
#include <cmath>

namespace bess::poly {

namespace {

double magnitude(std::span<const double> c, double x) {
  double acc = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * std::abs(x) + std::abs(*it);
  return acc;
}

double bisect(std::span<const double> c, double a, double b, double fa) {
  for (int iter = 0; iter < 200; ++iter) {
    const double m = 0.5 * (a + b);
    if (m <= a || m >= b) break;
    const double fm = evaluate(c, m);
    if (fm == 0.0) return m;
    if ((fm < 0.0) == (fa < 0.0)) {
      a = m;
      fa = fm;
    } else {
      b = m;
    }
  }
  return 0.5 * (a + b);
}

}  // namespace

double evaluate(std::span<const double> c, double x) {
  double acc = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * x + *it;
  return acc;
}

std::vector<double> real_roots(std::span<const double> c, double lo, double hi) {
  std::size_t n = c.size();
  while (n > 0 && c[n - 1] == 0.0) --n;
  c = c.first(n);
  std::vector<double> roots;
  if (n <= 1 || !(lo <= hi)) return roots;
  if (n == 2) {
    const double x = -c[0] / c[1];
    if (x >= lo && x <= hi) roots.push_back(x);
    return roots;
  }

  std::vector<double> deriv(n - 1);
  for (std::size_t i = 1; i < n; ++i) deriv[i - 1] = static_cast<double>(i) * c[i];
  std::vector<double> knots{lo};
  for (double x : real_roots(deriv, lo, hi)) {
    if (x > knots.back() && x < hi) knots.push_back(x);
  }
  knots.push_back(hi);

  for (std::size_t k = 0; k < knots.size(); ++k) {
    const double x = knots[k];
    const double fx = evaluate(c, x);
    const bool interior = k > 0 && k + 1 < knots.size();
    if (fx == 0.0 || (interior && std::abs(fx) <= 1e-13 * magnitude(c, x))) {
      roots.push_back(x);
    }
    if (k + 1 == knots.size()) break;
    const double y = knots[k + 1];
    const double fy = evaluate(c, y);
    if (fx != 0.0 && fy != 0.0 && (fx < 0.0) != (fy < 0.0)) roots.push_back(bisect(c, x, y, fx));
  }

  std::sort(roots.begin(), roots.end());
  roots.erase(std::unique(roots.begin(), roots.end(),
                          [](double a, double b) { return std::abs(a - b) <= 1e-12 * (1.0 + std::abs(a)); }),
              roots.end());
  return roots;
}

}  // namespace bess::poly
