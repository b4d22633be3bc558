#pragma once

// Reference computations used by the tests. Nothing here calls into the
// library's numerics; each routine reaches its answer by a separate path.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <utility>
#include <vector>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace oracle {

inline double integrate(const std::function<double(double)>& f, double a, double b) {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 15, 1e-13);
}

/// Ito drift of X = f(Z) for dZ = sigma(Z) dB + mu(Z) dt, with the
/// derivatives of f taken by central differences.
inline double ito_drift(const std::function<double(double)>& f, const std::function<double(double)>& mu,
                        const std::function<double(double)>& sigma2, double z, double h = 1e-5) {
  const double d1 = (f(z + h) - f(z - h)) / (2.0 * h);
  const double d2 = (f(z + h) - 2.0 * f(z) + f(z - h)) / (h * h);
  return d1 * mu(z) + 0.5 * d2 * sigma2(z);
}

/// Diffusion coefficient squared of X = f(Z), which is 1 for the unit-noise
/// coordinates.
inline double ito_diffusion2(const std::function<double(double)>& f, const std::function<double(double)>& sigma2,
                             double z, double h = 1e-6) {
  const double d1 = (f(z + h) - f(z - h)) / (2.0 * h);
  return d1 * d1 * sigma2(z);
}

using Vertex = std::pair<double, double>;

/// Closed polyline tracing a rounded rectangle with `segments` pieces in
/// total, distributed over the four edges and four quarter arcs by length.
inline std::vector<Vertex> rounded_rectangle_polyline(double x0, double x1, double y0, double y1, double r,
                                                      int segments) {
  const double pi = std::numbers::pi;
  struct Piece {
    bool arc;
    double ax, ay, bx, by;  // edge endpoints, or arc center and start angle in ax/ay/bx
    double length;
  };
  std::vector<Piece> pieces{
      {false, x0 + r, y0, x1 - r, y0, x1 - x0 - 2 * r},
      {true, x1 - r, y0 + r, -pi / 2, 0, pi * r / 2},
      {false, x1, y0 + r, x1, y1 - r, y1 - y0 - 2 * r},
      {true, x1 - r, y1 - r, 0, 0, pi * r / 2},
      {false, x1 - r, y1, x0 + r, y1, x1 - x0 - 2 * r},
      {true, x0 + r, y1 - r, pi / 2, 0, pi * r / 2},
      {false, x0, y1 - r, x0, y0 + r, y1 - y0 - 2 * r},
      {true, x0 + r, y0 + r, pi, 0, pi * r / 2},
  };
  double total = 0.0;
  for (const auto& p : pieces) total += p.length;
  std::vector<Vertex> out;
  for (const auto& p : pieces) {
    const int n = std::max(1, static_cast<int>(std::lround(segments * p.length / total)));
    for (int k = 0; k < n; ++k) {
      const double t = static_cast<double>(k) / n;
      if (p.arc) {
        const double ang = p.bx + t * pi / 2;
        out.emplace_back(p.ax + r * std::cos(ang), p.ay + r * std::sin(ang));
      } else {
        out.emplace_back(p.ax + t * (p.bx - p.ax), p.ay + t * (p.by - p.ay));
      }
    }
  }
  return out;
}

/// Minimum distance from (px, py) to the closed polyline.
inline double distance_to_polyline(const std::vector<Vertex>& poly, double px, double py) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const auto [ax, ay] = poly[i];
    const auto [bx, by] = poly[(i + 1) % poly.size()];
    const double dx = bx - ax;
    const double dy = by - ay;
    const double len2 = dx * dx + dy * dy;
    double t = len2 > 0 ? ((px - ax) * dx + (py - ay) * dy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    best = std::min(best, std::hypot(px - (ax + t * dx), py - (ay + t * dy)));
  }
  return best;
}

/// Stationary law (cell masses) of a Gaussian random walk on [0, a] with
/// step mean -Q dt and variance dt, folded at both walls, discretized into
/// `cells` cells and solved by power iteration on the transition matrix.
inline std::vector<double> folded_walk_stationary(double a, double Q, double dt, int cells, int iterations = 4000) {
  const double h = a / cells;
  const double s = std::sqrt(dt);
  const boost::math::normal_distribution<double> gauss(0.0, 1.0);
  // Probability of landing in [lo, hi] from x after folding: sum over images.
  auto landing = [&](double x, double lo, double hi) {
    double p = 0.0;
    for (int k = -4; k <= 4; ++k) {
      const double shift = 2.0 * a * k;
      p += boost::math::cdf(gauss, (hi + shift - x + Q * dt) / s) - boost::math::cdf(gauss, (lo + shift - x + Q * dt) / s);
      p += boost::math::cdf(gauss, (-lo + shift - x + Q * dt) / s) - boost::math::cdf(gauss, (-hi + shift - x + Q * dt) / s);
    }
    return p;
  };
  std::vector<std::vector<double>> P(static_cast<std::size_t>(cells), std::vector<double>(static_cast<std::size_t>(cells)));
  for (int i = 0; i < cells; ++i) {
    double row = 0.0;
    for (int j = 0; j < cells; ++j) {
      const double v = landing((i + 0.5) * h, j * h, (j + 1) * h);
      P[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = v;
      row += v;
    }
    for (double& v : P[static_cast<std::size_t>(i)]) v /= row;
  }
  std::vector<double> pi(static_cast<std::size_t>(cells), 0.0);
  pi[0] = 1.0;
  for (int it = 0; it < iterations; ++it) {
    std::vector<double> next(static_cast<std::size_t>(cells), 0.0);
    for (int i = 0; i < cells; ++i) {
      for (int j = 0; j < cells; ++j) {
        next[static_cast<std::size_t>(j)] += pi[static_cast<std::size_t>(i)] * P[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      }
    }
    pi = std::move(next);
  }
  return pi;
}

}  // namespace oracle
