#pragma once

// Drift fields b for unit-diffusion SDEs dX = dB + b(X) dt, the coordinate
// changes that bring each population model to that form, and the potential
// V (b = -grad V) of the gradient models.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "fvqsd/domain.hpp"
#include "fvqsd/error.hpp"
#include "fvqsd/grid.hpp"

namespace fvqsd {

/// Which drift formula a transformed model uses.
///
/// ItoConsistent is obtained by applying Ito's formula to the original SDE.
/// PaperLiteral keeps an alternative set of Wright-Fisher and logistic
/// coefficients that differ from the Ito computation; it exists for
/// comparison runs only.
enum class DriftSource { ItoConsistent, PaperLiteral };

/// V, grad V and Laplacian of V at a point.
struct PotentialJet {
  double value = 0.0;
  std::array<double, 2> gradient{0.0, 0.0};
  double laplacian = 0.0;
};

struct BrownianMotion {
  static constexpr int dimension = 1;

  void drift(const double*, double* out) const { out[0] = 0.0; }
  bool regular(const double*) const { return true; }
  PotentialJet potential(const double*) const { return {}; }

  friend bool operator==(const BrownianMotion&, const BrownianMotion&) = default;
};

/// Wright-Fisher diffusion conditioned on absorption at 0, in the angle
/// coordinate x = arccos(1 - 2z) on (0, pi).
struct WrightFisher {
  DriftSource source = DriftSource::ItoConsistent;

  static constexpr int dimension = 1;

  void drift(const double* x, double* out) const {
    const double s = std::sin(x[0]);
    const double c = std::cos(x[0]);
    out[0] = source == DriftSource::ItoConsistent ? -(2.0 - c) / (2.0 * s)
                                                  : -(1.0 - 2.0 * c) / (2.0 * s);
  }

  bool regular(const double* x) const { return x[0] > 0.0 && x[0] < std::numbers::pi; }

  PotentialJet potential(const double* x) const {
    const double s = std::sin(x[0]);
    const double c = std::cos(x[0]);
    const double log_tan_half = std::log(std::tan(0.5 * x[0]));
    PotentialJet p;
    if (source == DriftSource::ItoConsistent) {
      p.value = log_tan_half - 0.5 * std::log(s);
      p.gradient[0] = (2.0 - c) / (2.0 * s);
      p.laplacian = (1.0 - 2.0 * c) / (2.0 * s * s);
    } else {
      p.value = 0.5 * log_tan_half - std::log(s);
      p.gradient[0] = (1.0 - 2.0 * c) / (2.0 * s);
      p.laplacian = (2.0 - c) / (2.0 * s * s);
    }
    return p;
  }

  friend bool operator==(const WrightFisher&, const WrightFisher&) = default;
};

/// Logistic Feller diffusion dZ = sqrt(Z) dB + (rZ - cZ^2) dt in the
/// coordinate x = 2 sqrt(z).
struct LogisticFeller {
  double r = 1.0;
  double c = 1.0;
  DriftSource source = DriftSource::ItoConsistent;

  static constexpr int dimension = 1;

  // Denominator of the cubic term: 8 from Ito's formula, 4 as printed.
  double cubic_denominator() const { return source == DriftSource::ItoConsistent ? 8.0 : 4.0; }

  void drift(const double* x, double* out) const {
    const double v = x[0];
    out[0] = -1.0 / (2.0 * v) + r * v / 2.0 - c * v * v * v / cubic_denominator();
  }

  bool regular(const double* x) const { return x[0] > 0.0; }

  PotentialJet potential(const double* x) const {
    const double v = x[0];
    const double k = cubic_denominator();
    PotentialJet p;
    p.value = 0.5 * std::log(v) - r * v * v / 4.0 + c * v * v * v * v / (4.0 * k);
    p.gradient[0] = 1.0 / (2.0 * v) - r * v / 2.0 + c * v * v * v / k;
    p.laplacian = -1.0 / (2.0 * v * v) - r / 2.0 + 3.0 * c * v * v / k;
    return p;
  }

  friend bool operator==(const LogisticFeller&, const LogisticFeller&) = default;
};

/// Two-species stochastic Lotka-Volterra system in the coordinates
/// y_i = 2 sqrt(z_i / gamma_i).
struct LotkaVolterra {
  double r1 = 1.0;
  double r2 = 1.0;
  double c11 = 1.0;
  double c12 = 0.0;
  double c21 = 0.0;
  double c22 = 1.0;
  double gamma1 = 1.0;
  double gamma2 = 1.0;

  static constexpr int dimension = 2;

  void drift(const double* y, double* out) const {
    const double y1 = y[0];
    const double y2 = y[1];
    out[0] = r1 * y1 / 2.0 - c11 * gamma1 * y1 * y1 * y1 / 8.0 - c12 * gamma2 * y1 * y2 * y2 / 8.0 -
             1.0 / (2.0 * y1);
    out[1] = r2 * y2 / 2.0 - c22 * gamma2 * y2 * y2 * y2 / 8.0 - c21 * gamma1 * y2 * y1 * y1 / 8.0 -
             1.0 / (2.0 * y2);
  }

  bool regular(const double* y) const { return y[0] > 0.0 && y[1] > 0.0; }

  /// The drift is a gradient iff the cross-interaction terms match.
  bool is_gradient() const {
    const double lhs = c12 * gamma2;
    const double rhs = c21 * gamma1;
    return std::abs(lhs - rhs) <= 1e-12 * std::max({1.0, std::abs(lhs), std::abs(rhs)});
  }

  /// Weak cooperative regime: c11, c22 > 0, c12 g2 = c21 g1 < 0 and
  /// c11 c22 - c12 c21 > 0.
  void validate_weak_cooperative() const {
    if (!(gamma1 > 0.0 && gamma2 > 0.0)) throw ConfigError("lotka_volterra requires gamma1, gamma2 > 0");
    if (!(c11 > 0.0 && c22 > 0.0)) throw ConfigError("lotka_volterra requires c11, c22 > 0");
    if (!is_gradient() || !(c12 * gamma2 < 0.0)) {
      throw ConfigError("lotka_volterra requires c12*gamma2 = c21*gamma1 < 0");
    }
    if (!(c11 * c22 - c12 * c21 > 0.0)) throw ConfigError("lotka_volterra requires c11*c22 - c12*c21 > 0");
  }

  PotentialJet potential(const double* y) const {
    const double y1 = y[0];
    const double y2 = y[1];
    const double cross = c12 * gamma2;
    PotentialJet p;
    p.value = 0.5 * std::log(y1) + 0.5 * std::log(y2) - r1 * y1 * y1 / 4.0 - r2 * y2 * y2 / 4.0 +
              c11 * gamma1 * std::pow(y1, 4) / 32.0 + c22 * gamma2 * std::pow(y2, 4) / 32.0 +
              cross * y1 * y1 * y2 * y2 / 16.0;
    p.gradient[0] = 1.0 / (2.0 * y1) - r1 * y1 / 2.0 + c11 * gamma1 * y1 * y1 * y1 / 8.0 +
                    cross * y1 * y2 * y2 / 8.0;
    p.gradient[1] = 1.0 / (2.0 * y2) - r2 * y2 / 2.0 + c22 * gamma2 * y2 * y2 * y2 / 8.0 +
                    cross * y2 * y1 * y1 / 8.0;
    p.laplacian = -1.0 / (2.0 * y1 * y1) - r1 / 2.0 + 3.0 * c11 * gamma1 * y1 * y1 / 8.0 +
                  cross * y2 * y2 / 8.0 - 1.0 / (2.0 * y2 * y2) - r2 / 2.0 +
                  3.0 * c22 * gamma2 * y2 * y2 / 8.0 + cross * y1 * y1 / 8.0;
    return p;
  }

  friend bool operator==(const LotkaVolterra&, const LotkaVolterra&) = default;
};

/// One-dimensional drift given by a table, linearly interpolated. Has no
/// associated potential.
struct TabulatedDrift {
  GridFunction table{0.0, 1.0, {0.0, 0.0}};

  static constexpr int dimension = 1;

  static TabulatedDrift constant(double lo, double hi, double value) {
    return TabulatedDrift{GridFunction{lo, hi, {value, value}}};
  }

  void drift(const double* x, double* out) const {
    const double v = std::clamp(x[0], table.lo, table.hi);
    out[0] = table(v);
  }

  bool regular(const double* x) const { return x[0] >= table.lo && x[0] <= table.hi; }

  friend bool operator==(const TabulatedDrift& a, const TabulatedDrift& b) {
    return a.table.lo == b.table.lo && a.table.hi == b.table.hi && a.table.values == b.table.values;
  }
};

template <class M>
concept HasPotential = requires(const M& m, const double* x) {
  { m.potential(x) } -> std::same_as<PotentialJet>;
};

/// A drift model for dX = dB + b(X) dt.
class DriftModel {
 public:
  using Kind = std::variant<BrownianMotion, WrightFisher, LogisticFeller, LotkaVolterra, TabulatedDrift>;

  DriftModel() : kind_(BrownianMotion{}) {}
  DriftModel(Kind k) : kind_(std::move(k)) {}  // NOLINT
  template <class M>
    requires std::is_constructible_v<Kind, M> && (!std::is_same_v<std::decay_t<M>, Kind>) &&
             (!std::is_same_v<std::decay_t<M>, DriftModel>)
  DriftModel(M&& m) : kind_(std::forward<M>(m)) {}  // NOLINT

  const Kind& kind() const { return kind_; }

  int dimension() const {
    return std::visit([](const auto& k) { return std::decay_t<decltype(k)>::dimension; }, kind_);
  }

  std::string id() const {
    return std::visit(
        [](const auto& k) -> std::string {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, BrownianMotion>) return "brownian";
          if constexpr (std::is_same_v<K, WrightFisher>) return "wright_fisher";
          if constexpr (std::is_same_v<K, LogisticFeller>) return "logistic";
          if constexpr (std::is_same_v<K, LotkaVolterra>) return "lotka_volterra";
          if constexpr (std::is_same_v<K, TabulatedDrift>) return "tabulated";
        },
        kind_);
  }

  /// b(x). Throws "singular drift" outside the model's natural domain.
  Point drift(const Point& x) const {
    if (x.dim != dimension()) throw Error("dimension mismatch");
    Point out{{0.0, 0.0}, x.dim};
    std::visit(
        [&](const auto& k) {
          if (!k.regular(x.data())) throw Error("singular drift");
          k.drift(x.data(), out.c.data());
        },
        kind_);
    return out;
  }

  bool is_gradient() const {
    return std::visit(
        [](const auto& k) {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, LotkaVolterra>) return k.is_gradient();
          return HasPotential<K>;
        },
        kind_);
  }

  /// V, grad V, Laplacian V with b = -grad V.
  PotentialJet potential(const Point& x) const {
    if (!is_gradient()) throw Error("G undefined");
    if (x.dim != dimension()) throw Error("dimension mismatch");
    return std::visit(
        [&](const auto& k) -> PotentialJet {
          using K = std::decay_t<decltype(k)>;
          if constexpr (HasPotential<K>) {
            if (!k.regular(x.data())) throw Error("singular drift");
            return k.potential(x.data());
          } else {
            throw Error("G undefined");
          }
        },
        kind_);
  }

  friend bool operator==(const DriftModel&, const DriftModel&) = default;

 private:
  Kind kind_;
};

/// G(x) = |grad V|^2 - Laplacian V.
inline double g_function(const DriftModel& model, const Point& x) {
  const PotentialJet p = model.potential(x);
  return p.gradient[0] * p.gradient[0] + p.gradient[1] * p.gradient[1] - p.laplacian;
}

/// Minimum of G over a uniform grid of the domain's interior points.
inline double g_function_min(const DriftModel& model, const Domain& domain, int grid_n) {
  const Box box = domain.bounds();
  double best = std::numeric_limits<double>::infinity();
  const int ny = domain.dimension() == 2 ? grid_n : 1;
  for (int i = 0; i < grid_n; ++i) {
    for (int j = 0; j < ny; ++j) {
      Point p = Point::of(box.lo[0] + (box.hi[0] - box.lo[0]) * (i + 0.5) / grid_n);
      if (domain.dimension() == 2) {
        p = Point::of(p[0], box.lo[1] + (box.hi[1] - box.lo[1]) * (j + 0.5) / grid_n);
      }
      if (domain.contains(p)) best = std::min(best, g_function(model, p));
    }
  }
  return best;
}

/// Map between the original coordinates z of a model and the unit-diffusion
/// coordinates x.
class ChangeOfVariables {
 public:
  enum class Kind { Identity, WrightFisher, Logistic, LotkaVolterra };

  ChangeOfVariables() = default;
  static ChangeOfVariables identity() { return {}; }
  static ChangeOfVariables wright_fisher() { return ChangeOfVariables(Kind::WrightFisher); }
  static ChangeOfVariables logistic() { return ChangeOfVariables(Kind::Logistic); }
  static ChangeOfVariables lotka_volterra(double gamma1, double gamma2) {
    ChangeOfVariables c(Kind::LotkaVolterra);
    c.gamma_ = {gamma1, gamma2};
    return c;
  }

  /// The coordinate change attached to a model; identity when none applies.
  static ChangeOfVariables for_model(const DriftModel& model) {
    return std::visit(
        [](const auto& k) {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, WrightFisher>) return wright_fisher();
          else if constexpr (std::is_same_v<K, LogisticFeller>) return logistic();
          else if constexpr (std::is_same_v<K, LotkaVolterra>) return lotka_volterra(k.gamma1, k.gamma2);
          else return identity();
        },
        model.kind());
  }

  Kind kind() const { return kind_; }

  /// z -> x.
  double forward(double z, int axis = 0) const {
    switch (kind_) {
      case Kind::Identity: return z;
      case Kind::WrightFisher: return std::acos(1.0 - 2.0 * z);
      case Kind::Logistic: return 2.0 * std::sqrt(z);
      case Kind::LotkaVolterra: return 2.0 * std::sqrt(z / gamma_[static_cast<std::size_t>(axis)]);
    }
    return z;
  }

  /// x -> z.
  double inverse(double x, int axis = 0) const {
    switch (kind_) {
      case Kind::Identity: return x;
      case Kind::WrightFisher: return 0.5 * (1.0 - std::cos(x));
      case Kind::Logistic: return 0.25 * x * x;
      case Kind::LotkaVolterra: return 0.25 * gamma_[static_cast<std::size_t>(axis)] * x * x;
    }
    return x;
  }

  /// |dz/dx| at x.
  double jacobian_inverse(double x, int axis = 0) const {
    switch (kind_) {
      case Kind::Identity: return 1.0;
      case Kind::WrightFisher: return 0.5 * std::abs(std::sin(x));
      case Kind::Logistic: return 0.5 * std::abs(x);
      case Kind::LotkaVolterra: return 0.5 * gamma_[static_cast<std::size_t>(axis)] * std::abs(x);
    }
    return 1.0;
  }

  Point forward(const Point& z) const {
    Point x = z;
    for (int i = 0; i < z.dim; ++i) x[i] = forward(z[i], i);
    return x;
  }
  Point inverse(const Point& x) const {
    Point z = x;
    for (int i = 0; i < x.dim; ++i) z[i] = inverse(x[i], i);
    return z;
  }

 private:
  explicit ChangeOfVariables(Kind k) : kind_(k) {}

  Kind kind_ = Kind::Identity;
  std::array<double, 2> gamma_{1.0, 1.0};
};

/// Density of Z = inverse(X) on a uniform z-grid with the same node count,
/// f_Z(z) = f_X(forward(z)) / |dz/dx|, renormalized to unit mass.
inline GridFunction push_forward_density(const ChangeOfVariables& cov, const GridFunction& density_x) {
  for (double v : density_x.values) {
    if (!(v >= 0.0)) throw Error("density must be nonnegative");
  }
  const double z_lo = cov.inverse(density_x.lo);
  const double z_hi = cov.inverse(density_x.hi);
  GridFunction out = GridFunction::sample(z_lo, z_hi, density_x.size(), [&](double z) {
    const double x = std::clamp(cov.forward(z), density_x.lo, density_x.hi);
    const double jac = cov.jacobian_inverse(x);
    return jac > 0.0 ? density_x(x) / jac : 0.0;
  });
  return normalized(std::move(out));
}

}  // namespace fvqsd
