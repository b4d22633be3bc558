#pragma once

// Finite-difference spectral oracle for one-dimensional absorbed diffusions
// dX = dB + b(X) dt on an interval with Dirichlet (killing) ends.
//
// The generator L = 1/2 d^2/dx^2 + b d/dx is discretized by second-order
// central differences on the interior nodes. The quasi-stationary density is
// the positive left eigenvector of -L for its smallest eigenvalue lambda,
// found by inverse power iteration on the transposed matrix.

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "fvqsd/error.hpp"
#include "fvqsd/grid.hpp"
#include "fvqsd/models.hpp"

namespace fvqsd {

struct EigenPair {
  double lambda = 0.0;
  /// Quasi-stationary density on the full grid (zero at both ends), unit mass.
  GridFunction density;
  /// Right eigenfunction eta, scaled to max 1.
  GridFunction eta;
  std::size_t grid_n = 0;
  /// max |L^T p + lambda p| / max |lambda p| for the returned density p.
  double residual = 0.0;
  int iterations = 0;
};

/// Tridiagonal matrix; row k is sub[k] x_{k-1} + diag[k] x_k + sup[k] x_{k+1}.
struct Tridiagonal {
  std::vector<double> sub;
  std::vector<double> diag;
  std::vector<double> sup;

  std::size_t size() const { return diag.size(); }

  Tridiagonal transposed() const {
    const std::size_t m = size();
    Tridiagonal t{std::vector<double>(m, 0.0), diag, std::vector<double>(m, 0.0)};
    for (std::size_t k = 0; k < m; ++k) {
      if (k > 0) t.sub[k] = sup[k - 1];
      if (k + 1 < m) t.sup[k] = sub[k + 1];
    }
    return t;
  }

  std::vector<double> apply(const std::vector<double>& x) const {
    const std::size_t m = size();
    std::vector<double> y(m);
    for (std::size_t k = 0; k < m; ++k) {
      double v = diag[k] * x[k];
      if (k > 0) v += sub[k] * x[k - 1];
      if (k + 1 < m) v += sup[k] * x[k + 1];
      y[k] = v;
    }
    return y;
  }

  /// Thomas algorithm without pivoting.
  std::vector<double> solve(std::vector<double> rhs) const {
    const std::size_t m = size();
    std::vector<double> c(m, 0.0);
    double denom = diag[0];
    if (denom == 0.0) throw NumericalError("singular tridiagonal system");
    c[0] = m > 1 ? sup[0] / denom : 0.0;
    rhs[0] /= denom;
    for (std::size_t k = 1; k < m; ++k) {
      denom = diag[k] - sub[k] * c[k - 1];
      if (denom == 0.0) throw NumericalError("singular tridiagonal system");
      if (k + 1 < m) c[k] = sup[k] / denom;
      rhs[k] = (rhs[k] - sub[k] * rhs[k - 1]) / denom;
    }
    for (std::size_t k = m - 1; k-- > 0;) rhs[k] -= c[k] * rhs[k + 1];
    return rhs;
  }
};

/// -L on the interior nodes of a uniform grid with n points over [a, b].
inline Tridiagonal absorbed_generator(const std::function<double(double)>& drift, double a, double b,
                                      std::size_t n) {
  if (n < 50) throw ConfigError("grid_n must be >= 50");
  if (!(a < b)) throw ConfigError("interval requires a < b");
  const double h = (b - a) / static_cast<double>(n - 1);
  const std::size_t m = n - 2;
  Tridiagonal t{std::vector<double>(m), std::vector<double>(m), std::vector<double>(m)};
  const double diffusion = 0.5 / (h * h);
  for (std::size_t k = 0; k < m; ++k) {
    const double x = a + h * static_cast<double>(k + 1);
    const double bx = drift(x);
    if (!std::isfinite(bx)) throw NumericalError("drift not finite on the grid");
    t.sub[k] = -(diffusion - bx / (2.0 * h));
    t.diag[k] = 2.0 * diffusion;
    t.sup[k] = -(diffusion + bx / (2.0 * h));
  }
  return t;
}

namespace detail {

struct PowerResult {
  double lambda = 0.0;
  std::vector<double> vector;
  double residual = 0.0;
  int iterations = 0;
};

inline double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

// Inverse iteration with zero shift: converges to the eigenvalue of A of
// smallest magnitude.
inline PowerResult inverse_iteration(const Tridiagonal& A, int max_iterations = 10000) {
  const std::size_t m = A.size();
  std::vector<double> x(m, 1.0);
  double lambda = 0.0;
  double residual = 0.0;
  for (int it = 1; it <= max_iterations; ++it) {
    std::vector<double> y = A.solve(x);
    double xy = 0.0;
    double yy = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      xy += x[k] * y[k];
      yy += y[k] * y[k];
    }
    const double next = xy / yy;
    const double scale = 1.0 / max_abs(y);
    for (double& v : y) v *= scale;
    const std::vector<double> Ay = A.apply(y);
    double r = 0.0;
    for (std::size_t k = 0; k < m; ++k) r = std::max(r, std::abs(Ay[k] - next * y[k]));
    residual = r / std::abs(next);
    const bool stalled = std::abs(next - lambda) <= 1e-12 * std::abs(next);
    lambda = next;
    x = std::move(y);
    if (residual <= 1e-11 || (stalled && residual <= 1e-7)) return {lambda, std::move(x), residual, it};
  }
  std::ostringstream msg;
  msg << "inverse iteration did not converge, last residual " << residual;
  throw NumericalError(msg.str());
}

inline GridFunction embed(const std::vector<double>& interior, double a, double b) {
  GridFunction g{a, b, std::vector<double>(interior.size() + 2, 0.0)};
  std::copy(interior.begin(), interior.end(), g.values.begin() + 1);
  return g;
}

// Flips the sign so the vector is mostly positive, then checks the Perron
// property and clears round-off negatives.
inline void make_positive(std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  if (s < 0.0) {
    for (double& x : v) x = -x;
  }
  const double scale = max_abs(v);
  for (double& x : v) {
    if (x < -1e-10 * scale) throw NumericalError("non-Perron mode");
    x = std::max(x, 0.0);
  }
}

}  // namespace detail

/// Principal eigenvalue of the absorbed generator and the quasi-stationary
/// density on [a, b] with grid_n nodes (both ends are absorbing).
inline EigenPair principal_eigenpair(const std::function<double(double)>& drift, double a, double b,
                                     std::size_t grid_n = 2000) {
  const Tridiagonal A = absorbed_generator(drift, a, b, grid_n);
  const Tridiagonal At = A.transposed();

  detail::PowerResult left = detail::inverse_iteration(At);
  detail::make_positive(left.vector);
  detail::PowerResult right = detail::inverse_iteration(A);
  detail::make_positive(right.vector);

  EigenPair out;
  out.lambda = left.lambda;
  out.grid_n = grid_n;
  out.iterations = left.iterations;
  if (!(out.lambda > 0.0)) throw NumericalError("principal eigenvalue is not positive");

  const std::vector<double> Ap = At.apply(left.vector);
  double r = 0.0;
  for (std::size_t k = 0; k < Ap.size(); ++k) r = std::max(r, std::abs(Ap[k] - out.lambda * left.vector[k]));
  out.residual = r / (out.lambda * detail::max_abs(left.vector));

  out.density = normalized(detail::embed(left.vector, a, b));
  out.eta = detail::embed(right.vector, a, b);
  return out;
}

inline EigenPair principal_eigenpair(const DriftModel& model, double a, double b, std::size_t grid_n = 2000) {
  if (model.dimension() != 1) throw ConfigError("oracle is one-dimensional");
  return principal_eigenpair([&](double x) { return model.drift(Point::of(x))[0]; }, a, b, grid_n);
}

/// Smallest eigenvalue of the same discretization computed through its
/// symmetrization D^{-1} (-L) D with a diagonal D, solved by a dense
/// symmetric tridiagonal eigensolver. Requires every cell Peclet number
/// |b| h to be below 1.
inline double symmetric_principal_eigenvalue(const std::function<double(double)>& drift, double a, double b,
                                             std::size_t grid_n = 2000) {
  const Tridiagonal A = absorbed_generator(drift, a, b, grid_n);
  const std::size_t m = A.size();
  Eigen::VectorXd diag(static_cast<Eigen::Index>(m));
  Eigen::VectorXd off(static_cast<Eigen::Index>(m - 1));
  for (std::size_t k = 0; k < m; ++k) diag[static_cast<Eigen::Index>(k)] = A.diag[k];
  for (std::size_t k = 0; k + 1 < m; ++k) {
    const double prod = A.sup[k] * A.sub[k + 1];
    if (!(prod > 0.0)) throw NumericalError("cell Peclet number too large for symmetrization");
    off[static_cast<Eigen::Index>(k)] = -std::sqrt(prod);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, off, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw NumericalError("tridiagonal eigensolver failed");
  return solver.eigenvalues().minCoeff();
}

/// Normalized eta(x) exp(-2 V(x)) on eta's grid.
inline GridFunction qsd_density_from_potential(const std::function<double(double)>& potential,
                                               const GridFunction& eta) {
  std::vector<double> v(eta.size());
  double v_min = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < eta.size(); ++i) {
    if (eta.values[i] < 0.0) throw Error("eta must be nonnegative");
    v[i] = eta.values[i] > 0.0 ? potential(eta.x(i)) : 0.0;
    if (eta.values[i] > 0.0) v_min = std::min(v_min, v[i]);
  }
  GridFunction out{eta.lo, eta.hi, std::vector<double>(eta.size(), 0.0)};
  for (std::size_t i = 0; i < eta.size(); ++i) {
    if (eta.values[i] > 0.0) out.values[i] = eta.values[i] * std::exp(-2.0 * (v[i] - v_min));
  }
  return normalized(std::move(out));
}

}  // namespace fvqsd
