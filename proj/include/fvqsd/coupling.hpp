#pragma once

// Comparison of a particle's boundary distance with a doubly reflected
// one-dimensional process Y on [0, a] driven by the same noise:
//
//   Y_t = Y_0 + W_t - Q t + L0_t - La_t,   0 <= Y_t <= phi_D(X_t) ^ a,
//
// where W uses the projected increment grad phi_D(X) . dB inside the band
// {phi_D < 2a} and independent noise elsewhere.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "fvqsd/domain.hpp"
#include "fvqsd/error.hpp"
#include "fvqsd/models.hpp"
#include "fvqsd/random.hpp"

namespace fvqsd {

/// Largest downward drift of phi_D seen on the band {0 < phi_D < width}:
/// max(0, -min L phi_D) with L phi = 1/2 Laplacian phi + b . grad phi.
inline double estimate_Q(const DriftModel& model, const Domain& domain, double width, int grid_n) {
  if (grid_n < 2) throw ConfigError("grid_n must be >= 2");
  if (!(width > 0.0)) throw ConfigError("band width must be > 0");
  double lowest = std::numeric_limits<double>::infinity();
  auto visit_point = [&](const Point& x) {
    if (!domain.contains(x)) return;
    const DistanceJet j = domain.jet(x);
    if (!(j.phi < width)) return;
    const Point b = model.drift(x);
    const double l = 0.5 * j.laplacian + b[0] * j.gradient[0] + b[1] * j.gradient[1];
    lowest = std::min(lowest, l);
  };
  const Box box = domain.bounds();
  if (domain.dimension() == 1) {
    // Both end bands, grid_n points each.
    const double w = std::min(width, 0.5 * (box.hi[0] - box.lo[0]));
    for (int k = 0; k < grid_n; ++k) {
      const double off = w * (k + 0.5) / grid_n;
      visit_point(Point::of(box.lo[0] + off));
      visit_point(Point::of(box.hi[0] - off));
    }
  } else {
    for (int i = 0; i < grid_n; ++i) {
      for (int k = 0; k < grid_n; ++k) {
        visit_point(Point::of(box.lo[0] + (box.hi[0] - box.lo[0]) * (i + 0.5) / grid_n,
                              box.lo[1] + (box.hi[1] - box.lo[1]) * (k + 0.5) / grid_n));
      }
    }
  }
  if (!std::isfinite(lowest)) throw Error("empty band");
  return std::max(0.0, -lowest);
}

/// Euler scheme for Brownian motion with drift -Q reflected at 0 and a.
class ReflectedPath {
 public:
  ReflectedPath(double y0, double Q, double a) : y_(y0), a_(a), q_(Q) {
    if (!(a > 0.0)) throw ConfigError("reflection ceiling a must be > 0");
    if (!(y0 >= 0.0 && y0 <= a)) throw ConfigError("y0 must lie in [0, a]");
  }

  double y() const { return y_; }
  double a() const { return a_; }
  double Q() const { return q_; }
  double local_time_0() const { return l0_; }
  double local_time_a() const { return la_; }

  /// y <- fold(y + dw - Q dt). The folded displacement is added to the local
  /// time of the wall it came from.
  void step(double dw, double dt) {
    double y = y_ + dw - q_ * dt;
    for (int guard = 0; guard < 64 && (y < 0.0 || y > a_); ++guard) {
      if (y < 0.0) {
        l0_ += -2.0 * y;
        y = -y;
      } else {
        la_ += 2.0 * (y - a_);
        y = 2.0 * a_ - y;
      }
    }
    y_ = std::clamp(y, 0.0, a_);
  }

 private:
  double y_;
  double a_;
  double q_;
  double l0_ = 0.0;
  double la_ = 0.0;
};

/// Trajectory of ReflectedPath for the given Brownian increments, including
/// the initial state.
inline std::vector<ReflectedPath> simulate_reflected(double y0, double Q, double a, double dt,
                                                     std::span<const double> increments) {
  if (!(dt > 0.0)) throw ConfigError("dt must be > 0");
  std::vector<ReflectedPath> path;
  path.reserve(increments.size() + 1);
  path.emplace_back(y0, Q, a);
  for (double dw : increments) {
    ReflectedPath next = path.back();
    next.step(dw, dt);
    path.push_back(next);
  }
  return path;
}

struct CouplingReport {
  double violation_fraction = 0.0;
  double max_excess = -std::numeric_limits<double>::infinity();
  std::uint64_t n_paths = 0;
  std::uint64_t samples = 0;
  std::uint64_t violations = 0;
  std::uint64_t lower_violations = 0;
  double dt = 0.0;
  double tol = 0.0;

  void merge(const CouplingReport& o) {
    n_paths += o.n_paths;
    samples += o.samples;
    violations += o.violations;
    lower_violations += o.lower_violations;
    max_excess = std::max(max_excess, o.max_excess);
    violation_fraction = samples > 0 ? static_cast<double>(violations) / static_cast<double>(samples) : 0.0;
  }
};

struct CouplingSetup {
  double Q = 0.0;
  double a = 0.1;
  double dt = 1e-4;
  double horizon = 1.0;
  int n_paths = 1000;
  std::uint64_t seed = 1;
  Point x0;
};

/// Runs n_paths absorbed particles (each stopped at its first exit) together
/// with coupled reflected processes, counting samples with
/// Y > min(phi_D(X), a) + 4 sqrt(dt).
inline CouplingReport coupling_check(const DriftModel& model, const Domain& domain, const CouplingSetup& setup) {
  if (!(setup.dt > 0.0)) throw ConfigError("dt must be > 0");
  if (!(setup.a > 0.0)) throw ConfigError("a must be > 0");
  if (setup.n_paths < 1) throw ConfigError("n_paths must be >= 1");
  if (model.dimension() != domain.dimension()) throw ConfigError("model and domain dimensions differ");
  const double phi0 = domain.phi(setup.x0);
  const double sqrt_dt = std::sqrt(setup.dt);
  const auto steps = static_cast<std::int64_t>(std::llround(setup.horizon / setup.dt));
  const int dim = domain.dimension();

  CouplingReport total;
  total.dt = setup.dt;
  total.tol = 4.0 * sqrt_dt;
  for (int p = 0; p < setup.n_paths; ++p) {
    CouplingReport r;
    r.n_paths = 1;
    Xoshiro256pp rng = Xoshiro256pp::stream(setup.seed, static_cast<std::uint64_t>(p));
    Point x = setup.x0;
    ReflectedPath y(std::min(phi0, setup.a), setup.Q, setup.a);
    for (std::int64_t k = 0; k < steps; ++k) {
      const DistanceJet jet = domain.jet(x);
      std::array<double, 2> db{0.0, 0.0};
      for (int i = 0; i < dim; ++i) db[static_cast<std::size_t>(i)] = sqrt_dt * standard_normal(rng);
      const double dw = jet.phi < 2.0 * setup.a ? jet.gradient[0] * db[0] + jet.gradient[1] * db[1]
                                                : sqrt_dt * standard_normal(rng);
      const Point b = model.drift(x);
      Point next = x;
      for (int i = 0; i < dim; ++i) next[i] = x[i] + b[i] * setup.dt + db[static_cast<std::size_t>(i)];
      if (!domain.contains(next)) break;
      x = next;
      y.step(dw, setup.dt);
      const double excess = y.y() - std::min(domain.phi(x), setup.a);
      ++r.samples;
      if (excess > total.tol) ++r.violations;
      if (y.y() < 0.0) ++r.lower_violations;
      r.max_excess = std::max(r.max_excess, excess);
    }
    total.merge(r);
  }
  return total;
}

}  // namespace fvqsd
