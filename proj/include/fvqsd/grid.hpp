#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "fvqsd/error.hpp"

namespace fvqsd {

/// Values of a function sampled on the uniform grid lo = x_0 < ... < x_{n-1} = hi.
struct GridFunction {
  double lo = 0.0;
  double hi = 1.0;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  double step() const { return (hi - lo) / static_cast<double>(values.size() - 1); }
  double x(std::size_t i) const {
    // Pin the last node to hi exactly.
    return i + 1 == values.size() ? hi : lo + step() * static_cast<double>(i);
  }

  /// Piecewise-linear interpolation; zero outside [lo, hi].
  double operator()(double at) const {
    if (values.empty() || at < lo || at > hi) return 0.0;
    const double s = (at - lo) / step();
    const auto i = std::min(static_cast<std::size_t>(s), values.size() - 2);
    const double t = s - static_cast<double>(i);
    return (1.0 - t) * values[i] + t * values[i + 1];
  }

  template <class F>
  static GridFunction sample(double lo, double hi, std::size_t n, F&& f) {
    if (n < 2 || !(lo < hi)) throw ConfigError("grid needs n >= 2 and lo < hi");
    GridFunction g{lo, hi, std::vector<double>(n)};
    for (std::size_t i = 0; i < n; ++i) g.values[i] = f(g.x(i));
    return g;
  }
};

/// Composite trapezoidal rule on a uniform grid.
inline double trapezoid(std::span<const double> v, double h) {
  if (v.size() < 2) return 0.0;
  double s = 0.5 * (v.front() + v.back());
  for (std::size_t i = 1; i + 1 < v.size(); ++i) s += v[i];
  return s * h;
}

inline double integrate(const GridFunction& g) { return trapezoid(g.values, g.step()); }

/// Rescales g to unit trapezoidal mass.
inline GridFunction normalized(GridFunction g) {
  const double mass = integrate(g);
  if (!(mass > 0.0) || !std::isfinite(mass)) throw NumericalError("zero mass");
  for (double& v : g.values) v /= mass;
  return g;
}

}  // namespace fvqsd
