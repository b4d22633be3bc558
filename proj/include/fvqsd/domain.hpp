#pragma once

// Open domains D in R^1 / R^2, their boundary distance phi_D and the
// cut-off families U_m used to approximate the natural state spaces from
// inside.

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <variant>

#include "fvqsd/error.hpp"

namespace fvqsd {

/// A point of R^1 or R^2. Unused trailing coordinates are zero.
struct Point {
  std::array<double, 2> c{0.0, 0.0};
  int dim = 1;

  static Point of(double x) { return Point{{x, 0.0}, 1}; }
  static Point of(double x, double y) { return Point{{x, y}, 2}; }

  double operator[](int i) const { return c[static_cast<std::size_t>(i)]; }
  double& operator[](int i) { return c[static_cast<std::size_t>(i)]; }
  const double* data() const { return c.data(); }

  friend bool operator==(const Point&, const Point&) = default;
};

/// First and second order geometry of phi_D at an interior point.
struct DistanceJet {
  double phi = 0.0;
  std::array<double, 2> gradient{0.0, 0.0};
  double laplacian = 0.0;
};

/// Axis-aligned bounds of a domain.
struct Box {
  std::array<double, 2> lo{0.0, 0.0};
  std::array<double, 2> hi{0.0, 0.0};
};

/// The open interval (a, b).
struct Interval {
  double a = 0.0;
  double b = 1.0;

  static constexpr int dimension = 1;

  void validate() const {
    if (!(std::isfinite(a) && std::isfinite(b) && a < b)) {
      throw ConfigError("interval requires finite a < b");
    }
  }

  bool contains(const double* x) const { return x[0] > a && x[0] < b; }

  /// Distance to the boundary; meaningful only for interior points.
  double distance(const double* x) const { return std::min(x[0] - a, b - x[0]); }

  DistanceJet jet(const double* x) const {
    DistanceJet j;
    const double left = x[0] - a;
    const double right = b - x[0];
    j.phi = std::min(left, right);
    j.gradient[0] = left <= right ? 1.0 : -1.0;
    return j;
  }

  Box bounds() const { return Box{{a, 0.0}, {b, 0.0}}; }

  friend bool operator==(const Interval&, const Interval&) = default;
};

/// The rectangle (x_min, x_max) x (y_min, y_max) with its four corners
/// replaced by quarter circles of radius corner_radius.
struct RoundedRectangle {
  double x_min = 0.0;
  double x_max = 1.0;
  double y_min = 0.0;
  double y_max = 1.0;
  double corner_radius = 0.1;

  static constexpr int dimension = 2;

  void validate() const {
    const bool finite = std::isfinite(x_min) && std::isfinite(x_max) && std::isfinite(y_min) &&
                        std::isfinite(y_max) && std::isfinite(corner_radius);
    if (!finite || !(x_min < x_max) || !(y_min < y_max)) {
      throw ConfigError("rounded rectangle requires x_min < x_max and y_min < y_max");
    }
    const double limit = 0.5 * std::min(x_max - x_min, y_max - y_min);
    if (!(corner_radius > 0.0 && corner_radius <= limit)) {
      throw ConfigError("rounded rectangle requires 0 < corner_radius <= min(width, height)/2");
    }
  }

  // Center of the corner disc governing x, or false when x lies outside all
  // four corner squares.
  bool corner_center(const double* x, double& cx, double& cy) const {
    const double r = corner_radius;
    if (x[0] < x_min + r) {
      cx = x_min + r;
    } else if (x[0] > x_max - r) {
      cx = x_max - r;
    } else {
      return false;
    }
    if (x[1] < y_min + r) {
      cy = y_min + r;
    } else if (x[1] > y_max - r) {
      cy = y_max - r;
    } else {
      return false;
    }
    return true;
  }

  bool contains(const double* x) const {
    if (!(x[0] > x_min && x[0] < x_max && x[1] > y_min && x[1] < y_max)) return false;
    double cx = 0.0;
    double cy = 0.0;
    if (!corner_center(x, cx, cy)) return true;
    return std::hypot(x[0] - cx, x[1] - cy) < corner_radius;
  }

  double distance(const double* x) const {
    double cx = 0.0;
    double cy = 0.0;
    if (corner_center(x, cx, cy)) return corner_radius - std::hypot(x[0] - cx, x[1] - cy);
    return std::min({x[0] - x_min, x_max - x[0], x[1] - y_min, y_max - x[1]});
  }

  DistanceJet jet(const double* x) const {
    DistanceJet j;
    double cx = 0.0;
    double cy = 0.0;
    if (corner_center(x, cx, cy)) {
      const double dx = x[0] - cx;
      const double dy = x[1] - cy;
      const double rho = std::hypot(dx, dy);
      j.phi = corner_radius - rho;
      if (rho > 0.0) {
        j.gradient = {-dx / rho, -dy / rho};
        j.laplacian = -1.0 / rho;
      }
      return j;
    }
    const std::array<double, 4> d{x[0] - x_min, x_max - x[0], x[1] - y_min, y_max - x[1]};
    const auto k = static_cast<std::size_t>(std::min_element(d.begin(), d.end()) - d.begin());
    j.phi = d[k];
    static constexpr std::array<std::array<double, 2>, 4> normals{
        {{1.0, 0.0}, {-1.0, 0.0}, {0.0, 1.0}, {0.0, -1.0}}};
    j.gradient = normals[k];
    return j;
  }

  Box bounds() const { return Box{{x_min, y_min}, {x_max, y_max}}; }

  friend bool operator==(const RoundedRectangle&, const RoundedRectangle&) = default;
};

/// An open domain of dimension 1 or 2.
class Domain {
 public:
  using Kind = std::variant<Interval, RoundedRectangle>;

  Domain() : kind_(Interval{}) {}
  Domain(Interval i) : kind_(i) { i.validate(); }                // NOLINT
  Domain(RoundedRectangle r) : kind_(r) { r.validate(); }        // NOLINT

  const Kind& kind() const { return kind_; }
  int dimension() const {
    return std::visit([](const auto& k) { return std::decay_t<decltype(k)>::dimension; }, kind_);
  }

  bool contains(const Point& x) const {
    check_dimension(x);
    return std::visit([&](const auto& k) { return k.contains(x.data()); }, kind_);
  }

  /// Euclidean distance from an interior point to the boundary.
  double phi(const Point& x) const {
    if (!contains(x)) throw Error("outside domain");
    return std::visit([&](const auto& k) { return k.distance(x.data()); }, kind_);
  }

  DistanceJet jet(const Point& x) const {
    if (!contains(x)) throw Error("outside domain");
    return std::visit([&](const auto& k) { return k.jet(x.data()); }, kind_);
  }

  /// Membership in the sublevel set D_r = {phi_D > r}.
  bool in_sublevel(const Point& x, double r) const { return phi(x) > r; }

  Box bounds() const {
    return std::visit([](const auto& k) { return k.bounds(); }, kind_);
  }

  friend bool operator==(const Domain&, const Domain&) = default;

 private:
  void check_dimension(const Point& x) const {
    if (x.dim != dimension()) throw Error("dimension mismatch");
    for (int i = 0; i < x.dim; ++i) {
      if (!std::isfinite(x[i])) throw Error("non-finite point");
    }
  }

  Kind kind_;
};

/// Rules m -> U_m approximating each model's natural state space.
enum class CutoffFamily { WrightFisher, Logistic, LotkaVolterra };

inline Domain cutoff(CutoffFamily family, int m) {
  if (m < 2) throw ConfigError("degenerate cutoff");
  const double inv = 1.0 / m;
  switch (family) {
    case CutoffFamily::WrightFisher:
      return Interval{inv, std::numbers::pi - inv};
    case CutoffFamily::Logistic:
      return Interval{inv, static_cast<double>(m)};
    case CutoffFamily::LotkaVolterra:
      return RoundedRectangle{inv, static_cast<double>(m), inv, static_cast<double>(m), 0.5 * inv};
  }
  throw ConfigError("unknown cutoff family");
}

inline std::string to_string(CutoffFamily f) {
  switch (f) {
    case CutoffFamily::WrightFisher: return "wright_fisher";
    case CutoffFamily::Logistic: return "logistic";
    case CutoffFamily::LotkaVolterra: return "lotka_volterra";
  }
  return "unknown";
}

}  // namespace fvqsd
