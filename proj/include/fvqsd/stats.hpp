#pragma once

// Binned empirical measures and the distances used to compare them.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <ostream>
#include <span>
#include <utility>
#include <vector>

#include "fvqsd/domain.hpp"
#include "fvqsd/error.hpp"
#include "fvqsd/grid.hpp"
#include "fvqsd/models.hpp"

namespace fvqsd {

/// Bin edges of one axis.
class Axis {
 public:
  Axis() = default;

  static Axis uniform(double lo, double hi, std::size_t bins) {
    if (bins == 0 || !(lo < hi)) throw ConfigError("axis requires bins > 0 and lo < hi");
    Axis a;
    a.edges_.resize(bins + 1);
    for (std::size_t i = 0; i <= bins; ++i) {
      a.edges_[i] = i == bins ? hi : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bins);
    }
    a.uniform_ = true;
    a.inv_width_ = static_cast<double>(bins) / (hi - lo);
    return a;
  }

  static Axis from_edges(std::vector<double> edges) {
    if (edges.size() < 2) throw ConfigError("axis requires at least two edges");
    for (std::size_t i = 1; i < edges.size(); ++i) {
      if (!(edges[i] > edges[i - 1])) throw ConfigError("bin edges must be strictly increasing");
    }
    Axis a;
    a.edges_ = std::move(edges);
    return a;
  }

  std::size_t bins() const { return edges_.size() - 1; }
  double lo() const { return edges_.front(); }
  double hi() const { return edges_.back(); }
  const std::vector<double>& edges() const { return edges_; }
  double center(std::size_t i) const { return 0.5 * (edges_[i] + edges_[i + 1]); }
  bool is_uniform() const { return uniform_; }

  /// Bin holding x; the upper edge belongs to the last bin.
  bool locate(double x, std::size_t& index) const {
    if (!(x >= lo() && x <= hi())) return false;
    if (uniform_) {
      index = std::min(static_cast<std::size_t>((x - lo()) * inv_width_), bins() - 1);
    } else {
      const auto it = std::upper_bound(edges_.begin(), edges_.end(), x);
      index = std::min(static_cast<std::size_t>(it - edges_.begin()) - 1, bins() - 1);
    }
    return true;
  }

  friend bool operator==(const Axis& a, const Axis& b) { return a.edges_ == b.edges_; }

 private:
  std::vector<double> edges_;
  bool uniform_ = false;
  double inv_width_ = 0.0;
};

/// A weighted histogram on one or two axes. Represents probability measures
/// (total mass 1) as well as sub-probability measures.
class EmpiricalMeasure {
 public:
  EmpiricalMeasure() = default;

  explicit EmpiricalMeasure(Axis x) : axes_{std::move(x), Axis{}}, dim_(1) {
    weights_.assign(axes_[0].bins(), 0.0);
  }
  EmpiricalMeasure(Axis x, Axis y) : axes_{std::move(x), std::move(y)}, dim_(2) {
    weights_.assign(axes_[0].bins() * axes_[1].bins(), 0.0);
  }

  /// Default binning over a domain's bounding box.
  static EmpiricalMeasure over(const Domain& domain, std::size_t bins_per_axis) {
    const Box b = domain.bounds();
    if (domain.dimension() == 1) return EmpiricalMeasure(Axis::uniform(b.lo[0], b.hi[0], bins_per_axis));
    return EmpiricalMeasure(Axis::uniform(b.lo[0], b.hi[0], bins_per_axis),
                            Axis::uniform(b.lo[1], b.hi[1], bins_per_axis));
  }

  int dimension() const { return dim_; }
  const Axis& axis(int i) const { return axes_[static_cast<std::size_t>(i)]; }
  std::span<const double> weights() const { return weights_; }
  double total_mass() const { return total_mass_; }
  std::size_t size() const { return weights_.size(); }

  double weight(std::size_t i) const { return weights_[i]; }
  double weight(std::size_t i, std::size_t j) const { return weights_[i * axes_[1].bins() + j]; }

  /// Adds weight / n to the bin of each of the n points, stored as rows of
  /// `dimension()` coordinates.
  void accumulate(std::span<const double> coords, double weight) {
    const std::size_t n = coords.size() / static_cast<std::size_t>(dim_);
    if (n == 0) return;
    const double w = weight / static_cast<double>(n);
    for (std::size_t p = 0; p < n; ++p) {
      const double* x = coords.data() + p * static_cast<std::size_t>(dim_);
      std::size_t i = 0;
      std::size_t j = 0;
      if (!axes_[0].locate(x[0], i) || (dim_ == 2 && !axes_[1].locate(x[1], j))) {
        throw Error("position out of histogram range");
      }
      weights_[dim_ == 1 ? i : i * axes_[1].bins() + j] += w;
    }
    total_mass_ += weight;
  }

  /// Sums another histogram with identical binning into this one.
  void merge(const EmpiricalMeasure& other) {
    require_same_binning(other);
    for (std::size_t k = 0; k < weights_.size(); ++k) weights_[k] += other.weights_[k];
    total_mass_ += other.total_mass_;
  }

  /// Multiplies all weights by s.
  void scale(double s) {
    for (double& w : weights_) w *= s;
    total_mass_ *= s;
  }

  EmpiricalMeasure normalized() const {
    if (!(total_mass_ > 0.0)) throw NumericalError("zero mass");
    EmpiricalMeasure out = *this;
    out.scale(1.0 / total_mass_);
    out.total_mass_ = 1.0;
    return out;
  }

  /// Expectation of f over bin centers, divided by the total mass.
  template <class F>
  double mean(F&& f) const {
    if (!(total_mass_ > 0.0)) throw NumericalError("zero mass");
    double s = 0.0;
    for_each_bin([&](const Point& c, double w) { s += w * f(c); });
    return s / total_mass_;
  }

  template <class F>
  void for_each_bin(F&& f) const {
    if (dim_ == 1) {
      for (std::size_t i = 0; i < axes_[0].bins(); ++i) f(Point::of(axes_[0].center(i)), weights_[i]);
      return;
    }
    const std::size_t ny = axes_[1].bins();
    for (std::size_t i = 0; i < axes_[0].bins(); ++i) {
      for (std::size_t j = 0; j < ny; ++j) {
        f(Point::of(axes_[0].center(i), axes_[1].center(j)), weights_[i * ny + j]);
      }
    }
  }

  bool same_binning(const EmpiricalMeasure& o) const {
    return dim_ == o.dim_ && axes_[0] == o.axes_[0] && (dim_ == 1 || axes_[1] == o.axes_[1]);
  }

  void require_same_binning(const EmpiricalMeasure& o) const {
    if (!same_binning(o)) throw Error("binning mismatch");
  }

  /// CSV with header `x, weight` (1D) or `x, y, weight` (2D), bin centers.
  void write_csv(std::ostream& os) const {
    const auto old = os.precision(17);
    if (dim_ == 1) {
      os << "x,weight\n";
      for_each_bin([&](const Point& c, double w) { os << c[0] << ',' << w << '\n'; });
    } else {
      os << "x,y,weight\n";
      for_each_bin([&](const Point& c, double w) { os << c[0] << ',' << c[1] << ',' << w << '\n'; });
    }
    os.precision(old);
  }

  friend bool operator==(const EmpiricalMeasure&, const EmpiricalMeasure&) = default;

 private:
  std::array<Axis, 2> axes_{};
  int dim_ = 1;
  std::vector<double> weights_;
  double total_mass_ = 0.0;
};

/// Image of a 1D histogram under the coordinate change x -> z. The map is
/// monotone, so bin masses are carried over exactly onto mapped edges.
inline EmpiricalMeasure push_forward(const ChangeOfVariables& cov, const EmpiricalMeasure& h) {
  if (h.dimension() != 1) throw Error("push_forward needs a 1D histogram");
  std::vector<double> edges;
  edges.reserve(h.axis(0).edges().size());
  for (double e : h.axis(0).edges()) edges.push_back(cov.inverse(e));
  std::vector<double> w(h.weights().begin(), h.weights().end());
  if (edges.front() > edges.back()) {
    std::reverse(edges.begin(), edges.end());
    std::reverse(w.begin(), w.end());
  }
  EmpiricalMeasure out(Axis::from_edges(std::move(edges)));
  // Each bin receives its mass through a single representative point.
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double c = out.axis(0).center(i);
    out.accumulate(std::span<const double>(&c, 1), w[i]);
  }
  return out;
}

/// Cumulative distribution function that is piecewise linear between knots
/// (x_k, F_k). Repeated abscissae encode atoms.
class Cdf1d {
 public:
  Cdf1d() = default;

  static Cdf1d from_histogram(const EmpiricalMeasure& h) {
    if (h.dimension() != 1) throw Error("dimension must be 1");
    Cdf1d c;
    const auto& e = h.axis(0).edges();
    double acc = 0.0;
    c.knots_.emplace_back(e[0], 0.0);
    for (std::size_t i = 0; i < h.size(); ++i) {
      acc += h.weight(i);
      c.knots_.emplace_back(e[i + 1], acc);
    }
    c.mass_ = h.total_mass();
    return c;
  }

  /// From a density sampled on a grid; mass per cell by the trapezoid rule.
  static Cdf1d from_density(const GridFunction& g) {
    Cdf1d c;
    const double h = g.step();
    double acc = 0.0;
    c.knots_.emplace_back(g.x(0), 0.0);
    for (std::size_t i = 1; i < g.size(); ++i) {
      acc += 0.5 * h * (g.values[i - 1] + g.values[i]);
      c.knots_.emplace_back(g.x(i), acc);
    }
    c.mass_ = acc;
    return c;
  }

  /// Atoms at the given locations, each carrying mass 1/n.
  static Cdf1d from_samples(std::vector<double> xs) {
    if (xs.empty()) throw Error("no samples");
    std::sort(xs.begin(), xs.end());
    Cdf1d c;
    const double w = 1.0 / static_cast<double>(xs.size());
    double acc = 0.0;
    for (double x : xs) {
      c.knots_.emplace_back(x, acc);
      acc += w;
      c.knots_.emplace_back(x, acc);
    }
    c.mass_ = 1.0;
    return c;
  }

  double mass() const { return mass_; }
  const std::vector<std::pair<double, double>>& knots() const { return knots_; }

  /// Right-continuous value F(x).
  double operator()(double x) const {
    if (knots_.empty() || x < knots_.front().first) return 0.0;
    if (x >= knots_.back().first) return knots_.back().second;
    const auto it = std::upper_bound(knots_.begin(), knots_.end(), x,
                                     [](double v, const auto& k) { return v < k.first; });
    const auto& hi = *it;
    const auto& lo = *(it - 1);
    const double t = (x - lo.first) / (hi.first - lo.first);
    return lo.second + t * (hi.second - lo.second);
  }

 private:
  std::vector<std::pair<double, double>> knots_;
  double mass_ = 0.0;
};

/// Wasserstein-1 distance on the line, the integral of |F_p - F_q| computed
/// exactly for piecewise-linear CDFs.
inline double wasserstein1_1d(const Cdf1d& p, const Cdf1d& q) {
  if (std::abs(p.mass() - q.mass()) > 1e-9) throw Error("mass mismatch");
  std::vector<double> xs;
  xs.reserve(p.knots().size() + q.knots().size());
  for (const auto& k : p.knots()) xs.push_back(k.first);
  for (const auto& k : q.knots()) xs.push_back(k.first);
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  double total = 0.0;
  for (std::size_t i = 1; i < xs.size(); ++i) {
    const double x0 = xs[i - 1];
    const double x1 = xs[i];
    const double w = x1 - x0;
    // Left limits at x1: both CDFs are linear on the open cell (x0, x1).
    const double d0 = p(x0) - q(x0);
    const double xm = x0 + 0.5 * w;
    const double dm = p(xm) - q(xm);
    const double d1 = 2.0 * dm - d0;
    if (d0 * d1 >= 0.0) {
      total += 0.5 * w * (std::abs(d0) + std::abs(d1));
    } else {
      total += 0.5 * w * (d0 * d0 + d1 * d1) / (std::abs(d0) + std::abs(d1));
    }
  }
  return total;
}

inline double wasserstein1_1d(const EmpiricalMeasure& p, const EmpiricalMeasure& q) {
  return wasserstein1_1d(Cdf1d::from_histogram(p), Cdf1d::from_histogram(q));
}
inline double wasserstein1_1d(const EmpiricalMeasure& p, const GridFunction& density) {
  return wasserstein1_1d(Cdf1d::from_histogram(p), Cdf1d::from_density(density));
}
inline double wasserstein1_1d(const GridFunction& p, const GridFunction& q) {
  return wasserstein1_1d(Cdf1d::from_density(p), Cdf1d::from_density(q));
}

/// Total variation distance between histograms with identical binning.
inline double tv_binned(const EmpiricalMeasure& p, const EmpiricalMeasure& q) {
  p.require_same_binning(q);
  if (std::abs(p.total_mass() - q.total_mass()) > 1e-9) throw Error("mass mismatch");
  if (!(p.total_mass() > 0.0)) throw NumericalError("zero mass");
  double s = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) s += std::abs(p.weights()[k] - q.weights()[k]);
  return std::min(1.0, 0.5 * s / p.total_mass());
}

/// Mass of {phi_D <= r} for each r, with each bin represented by its center.
/// Bins whose center lies outside the domain count as boundary mass for every
/// r > 0.
inline std::vector<std::pair<double, double>> tightness_profile(const EmpiricalMeasure& hist,
                                                                const Domain& domain,
                                                                std::span<const double> r_grid) {
  std::vector<std::pair<double, double>> bins;  // (phi at center, weight)
  hist.for_each_bin([&](const Point& c, double w) {
    const double phi = domain.contains(c) ? domain.phi(c) : std::numeric_limits<double>::denorm_min();
    bins.emplace_back(phi, w);
  });
  std::sort(bins.begin(), bins.end());
  std::vector<double> cumulative(bins.size() + 1, 0.0);
  for (std::size_t i = 0; i < bins.size(); ++i) cumulative[i + 1] = cumulative[i] + bins[i].second;

  std::vector<std::pair<double, double>> profile;
  profile.reserve(r_grid.size());
  for (double r : r_grid) {
    const auto it = std::upper_bound(bins.begin(), bins.end(), r,
                                     [](double v, const auto& b) { return v < b.first; });
    profile.emplace_back(r, cumulative[static_cast<std::size_t>(it - bins.begin())]);
  }
  return profile;
}

/// Sample mean and standard error of the mean.
struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

inline MeanSe mean_and_se(std::span<const double> xs) {
  MeanSe out;
  if (xs.empty()) return out;
  const double n = static_cast<double>(xs.size());
  out.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  if (xs.size() < 2) return out;
  double ss = 0.0;
  for (double x : xs) ss += (x - out.mean) * (x - out.mean);
  out.se = std::sqrt(ss / (n - 1.0) / n);
  return out;
}

}  // namespace fvqsd
