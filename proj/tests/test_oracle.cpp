#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "fvqsd/oracle.hpp"
#include "fvqsd/stats.hpp"
#include "oracles.hpp"

using namespace fvqsd;

namespace {

const double kPi = std::numbers::pi;

auto zero_drift = [](double) { return 0.0; };

void expect_eigenpair_invariants(const EigenPair& p) {
  EXPECT_GT(p.lambda, 0.0);
  EXPECT_LE(p.residual, 1e-6);
  EXPECT_NEAR(integrate(p.density), 1.0, 1e-8);
  for (double v : p.density.values) EXPECT_GE(v, 0.0);
}

TEST(Oracle, BrownianUnitInterval) {
  const EigenPair p = principal_eigenpair(zero_drift, 0.0, 1.0, 2000);
  expect_eigenpair_invariants(p);
  EXPECT_NEAR(p.lambda, kPi * kPi / 2, 1e-3);
  double worst = 0.0;
  for (std::size_t i = 0; i < p.density.size(); ++i) {
    worst = std::max(worst, std::abs(p.density.values[i] - kPi / 2 * std::sin(kPi * p.density.x(i))));
  }
  EXPECT_LE(worst, 1e-3);
}

TEST(Oracle, LengthScaling) {
  const EigenPair one = principal_eigenpair(zero_drift, 0.0, 1.0, 2000);
  const EigenPair two = principal_eigenpair(zero_drift, 0.0, 2.0, 2000);
  EXPECT_NEAR(two.lambda, kPi * kPi / 8, 1e-3);
  EXPECT_NEAR(two.lambda, one.lambda / 4, 1e-10);
}

TEST(Oracle, GridConvergenceIsSecondOrder) {
  const double exact = kPi * kPi / 2;
  std::vector<double> err;
  std::vector<double> h;
  for (std::size_t n : {500u, 1000u, 2000u, 4000u}) {
    err.push_back(std::abs(principal_eigenpair(zero_drift, 0.0, 1.0, n).lambda - exact));
    h.push_back(1.0 / static_cast<double>(n - 1));
  }
  for (std::size_t k = 1; k < err.size(); ++k) {
    const double order = std::log(err[k - 1] / err[k]) / std::log(h[k - 1] / h[k]);
    EXPECT_GE(order, 1.9) << "between grids " << k - 1 << " and " << k;
  }
}

TEST(Oracle, WrightFisherMatchesAnalyticDensity) {
  const double a = 0.01;
  const double b = kPi - 0.01;
  const EigenPair p = principal_eigenpair(WrightFisher{}, a, b, 2000);
  expect_eigenpair_invariants(p);
  const double mass = oracle::integrate([](double x) { return (1 + std::cos(x)) * std::sin(x) / 2; }, 0.0, kPi);
  EXPECT_NEAR(mass, 1.0, 1e-12);
  const GridFunction exact = GridFunction::sample(0.0, kPi, 20001, [](double x) {
    return (1 + std::cos(x)) * std::sin(x) / 2;
  });
  EXPECT_LE(wasserstein1_1d(p.density, normalized(exact)), 0.01);
  EXPECT_NEAR(p.lambda, 1.0, 0.01);
}

TEST(Oracle, SymmetricRouteAgrees) {
  struct Case {
    DriftModel model;
    double a, b;
  };
  const std::vector<Case> cases{
      {BrownianMotion{}, 0.0, 1.0},
      {WrightFisher{}, 0.01, kPi - 0.01},
      {LogisticFeller{1.0, 1.0, DriftSource::ItoConsistent}, 0.1, 10.0},
      {LogisticFeller{2.0, 0.5, DriftSource::ItoConsistent}, 0.05, 5.0},
  };
  for (const auto& c : cases) {
    auto drift = [&](double x) { return c.model.drift(Point::of(x))[0]; };
    const double direct = principal_eigenpair(drift, c.a, c.b, 2000).lambda;
    const double sym = symmetric_principal_eigenvalue(drift, c.a, c.b, 2000);
    EXPECT_NEAR(direct, sym, 1e-8) << c.model.id();
  }
}

TEST(Oracle, SymmetricRouteRejectsLargePeclet) {
  auto drift = [](double) { return 1e4; };
  EXPECT_THROW(symmetric_principal_eigenvalue(drift, 0.0, 1.0, 100), NumericalError);
}

TEST(Oracle, EigenvalueDecreasesWithCutoff) {
  const DriftModel m = LogisticFeller{1.0, 1.0, DriftSource::ItoConsistent};
  double previous = std::numeric_limits<double>::infinity();
  for (int mm : {10, 20, 40}) {
    const double lambda = principal_eigenpair(m, 1.0 / mm, mm, 40000).lambda;
    EXPECT_LE(lambda, previous) << "m=" << mm;
    previous = lambda;
  }
}

TEST(Oracle, PotentialRouteMatchesLeftEigenvector) {
  const EigenPair p = principal_eigenpair(zero_drift, 0.0, 1.0, 2000);
  const GridFunction via_v = qsd_density_from_potential([](double) { return 0.0; }, p.eta);
  for (std::size_t i = 0; i < p.density.size(); ++i) EXPECT_NEAR(via_v.values[i], p.density.values[i], 1e-6);

  const DriftModel wf = WrightFisher{};
  const EigenPair q = principal_eigenpair(wf, 0.01, kPi - 0.01, 4000);
  const GridFunction via_wf = qsd_density_from_potential(
      [&](double x) { return wf.potential(Point::of(x)).value; }, q.eta);
  EXPECT_LE(wasserstein1_1d(via_wf, q.density), 1e-3);
}

TEST(Oracle, DensityFromPotentialExamples) {
  const GridFunction eta{0.0, 1.0, std::vector<double>(1001, 1.0)};
  const GridFunction d = qsd_density_from_potential([](double x) { return x; }, eta);
  const double norm = (1.0 - std::exp(-2.0)) / 2.0;
  for (std::size_t i = 0; i < d.size(); i += 100) {
    EXPECT_NEAR(d.values[i], std::exp(-2.0 * d.x(i)) / norm, 1e-5);
  }
  const GridFunction shaped{0.0, 1.0, {0.0, 1.0, 3.0, 1.0, 0.0}};
  const GridFunction same = qsd_density_from_potential([](double) { return 0.0; }, shaped);
  EXPECT_NEAR(same.values[2] / same.values[1], 3.0, 1e-12);
  const GridFunction zero{0.0, 1.0, std::vector<double>(5, 0.0)};
  EXPECT_THROW(qsd_density_from_potential([](double) { return 0.0; }, zero), Error);
}

TEST(Oracle, Errors) {
  EXPECT_THROW(principal_eigenpair(zero_drift, 0.0, 1.0, 40), ConfigError);
  EXPECT_THROW(principal_eigenpair(LotkaVolterra{}, 0.1, 1.0, 100), ConfigError);
  EXPECT_THROW(principal_eigenpair([](double) { return 1e4; }, 0.0, 1.0, 100), NumericalError);
}

}  // namespace
