#pragma once

// Fleming-Viot particle system: N copies of an absorbed diffusion evolving
// by Euler-Maruyama inside U_m; a particle whose step leaves the domain is
// moved onto the current position of another particle (or onto a fresh
// point of a fixed measure).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include "fvqsd/domain.hpp"
#include "fvqsd/error.hpp"
#include "fvqsd/models.hpp"
#include "fvqsd/random.hpp"
#include "fvqsd/stats.hpp"

namespace fvqsd {

/// Jump onto a particle chosen uniformly among the N - 1 others.
struct UniformOther {
  friend bool operator==(const UniformOther&, const UniformOther&) = default;
};

/// Jump onto a fixed interior point.
struct FixedPoint {
  Point point;
  friend bool operator==(const FixedPoint&, const FixedPoint&) = default;
};

/// Jump onto a point drawn uniformly from an axis-aligned box, which must
/// lie inside U_m.
struct FixedUniformBox {
  Box box;
  friend bool operator==(const FixedUniformBox& a, const FixedUniformBox& b) {
    return a.box.lo == b.box.lo && a.box.hi == b.box.hi;
  }
};

using JumpPolicy = std::variant<UniformOther, FixedPoint, FixedUniformBox>;

enum class HitTest {
  CrossingOnly,     ///< a step hits the boundary iff the proposal is outside
  BridgeCorrected,  ///< additionally fires with the Brownian-bridge crossing probability
};

struct UniformInterior {
  friend bool operator==(const UniformInterior&, const UniformInterior&) = default;
};
struct StartAt {
  Point x0;
  friend bool operator==(const StartAt&, const StartAt&) = default;
};
struct StartList {
  std::vector<Point> points;
  friend bool operator==(const StartList&, const StartList&) = default;
};
using InitialCondition = std::variant<UniformInterior, StartAt, StartList>;

struct SimulationConfig {
  int N = 1000;
  double dt = 1e-4;
  double burn_in = 2.0;
  double sample_horizon = 8.0;
  std::uint64_t seed = 1;
  JumpPolicy jump_policy = UniformOther{};
  HitTest hit_test = HitTest::CrossingOnly;
  int snapshot_stride = 100;
  /// Worker threads for the proposal phase; 1 runs serially.
  int threads = 1;
  /// Sub-windows of the sampling window used for Monte-Carlo error bars.
  int batches = 10;
  /// Histogram bins per axis.
  int bins = 200;
  InitialCondition initial = UniformInterior{};

  void validate() const {
    if (N < 2) throw ConfigError("engine.N must be >= 2");
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("engine.dt must be > 0");
    if (!(burn_in >= 0.0)) throw ConfigError("engine.burn_in must be >= 0");
    if (!(sample_horizon >= 0.0)) throw ConfigError("engine.sample_horizon must be >= 0");
    if (snapshot_stride < 1) throw ConfigError("engine.snapshot_stride must be >= 1");
    if (threads < 1) throw ConfigError("engine.threads must be >= 1");
    if (batches < 1) throw ConfigError("engine.batches must be >= 1");
    if (bins < 1) throw ConfigError("engine.bins must be >= 1");
  }

  std::int64_t burn_in_steps() const { return std::llround(burn_in / dt); }
  std::int64_t sample_steps() const { return std::llround(sample_horizon / dt); }
};

/// State of the N-particle system.
class ParticleSystem {
 public:
  ParticleSystem() = default;
  ParticleSystem(int n, int dim) : n_(n), dim_(dim) {
    positions_.assign(static_cast<std::size_t>(n) * static_cast<std::size_t>(dim), 0.0);
    scratch_ = positions_;
    hits_.assign(static_cast<std::size_t>(n), 0);
    per_particle_jumps_.assign(static_cast<std::size_t>(n), 0);
  }

  int size() const { return n_; }
  int dimension() const { return dim_; }
  double time() const { return t_; }
  std::uint64_t total_jumps() const { return total_jumps_; }
  const std::vector<std::uint64_t>& per_particle_jumps() const { return per_particle_jumps_; }

  /// Positions as n rows of `dimension()` coordinates.
  std::span<const double> positions() const { return positions_; }

  Point position(int i) const {
    Point p{{0.0, 0.0}, dim_};
    for (int k = 0; k < dim_; ++k) p[k] = positions_[static_cast<std::size_t>(i * dim_ + k)];
    return p;
  }

  friend bool operator==(const ParticleSystem&, const ParticleSystem&) = default;

 private:
  template <class M, class D>
  friend class Stepper;
  friend ParticleSystem init_system(const SimulationConfig&, const Domain&, const InitialCondition&);

  int n_ = 0;
  int dim_ = 1;
  double t_ = 0.0;
  std::uint64_t total_jumps_ = 0;
  std::vector<double> positions_;
  std::vector<double> scratch_;
  std::vector<std::uint8_t> hits_;
  std::vector<std::uint64_t> per_particle_jumps_;
  std::vector<Xoshiro256pp> rngs_;
};

namespace detail {

inline bool sample_uniform_in(const Domain& domain, const Box& box, Xoshiro256pp& rng, Point& out) {
  for (int attempt = 0; attempt < 100000; ++attempt) {
    Point p{{0.0, 0.0}, domain.dimension()};
    for (int k = 0; k < p.dim; ++k) {
      const auto kk = static_cast<std::size_t>(k);
      p[k] = box.lo[kk] + (box.hi[kk] - box.lo[kk]) * uniform01(rng);
    }
    if (domain.contains(p)) {
      out = p;
      return true;
    }
  }
  return false;
}

}  // namespace detail

/// System at t = 0 with no jumps. Stream i of `config.seed` drives particle i.
inline ParticleSystem init_system(const SimulationConfig& config, const Domain& domain,
                                  const InitialCondition& initial) {
  config.validate();
  ParticleSystem s(config.N, domain.dimension());
  s.rngs_.reserve(static_cast<std::size_t>(config.N));
  for (int i = 0; i < config.N; ++i) {
    s.rngs_.push_back(Xoshiro256pp::stream(config.seed, static_cast<std::uint64_t>(i)));
  }
  auto place = [&](int i, const Point& p) {
    if (p.dim != s.dim_ || !domain.contains(p)) throw Error("initial point not interior");
    for (int k = 0; k < s.dim_; ++k) s.positions_[static_cast<std::size_t>(i * s.dim_ + k)] = p[k];
  };
  std::visit(
      [&](const auto& init) {
        using I = std::decay_t<decltype(init)>;
        if constexpr (std::is_same_v<I, UniformInterior>) {
          const Box box = domain.bounds();
          for (int i = 0; i < config.N; ++i) {
            Point p;
            if (!detail::sample_uniform_in(domain, box, s.rngs_[static_cast<std::size_t>(i)], p)) {
              throw Error("could not sample an interior point");
            }
            place(i, p);
          }
        } else if constexpr (std::is_same_v<I, StartAt>) {
          for (int i = 0; i < config.N; ++i) place(i, init.x0);
        } else {
          if (init.points.size() != static_cast<std::size_t>(config.N)) {
            throw ConfigError("initial list must hold exactly N points");
          }
          for (int i = 0; i < config.N; ++i) place(i, init.points[static_cast<std::size_t>(i)]);
        }
      },
      initial);
  s.scratch_ = s.positions_;
  return s;
}

/// Throws if a particle is outside the domain or the jump counters disagree.
inline void check_invariants(const ParticleSystem& s, const Domain& domain) {
  std::uint64_t sum = 0;
  for (int i = 0; i < s.size(); ++i) {
    if (!domain.contains(s.position(i))) throw Error("particle left the domain");
    sum += s.per_particle_jumps()[static_cast<std::size_t>(i)];
  }
  if (sum != s.total_jumps()) throw Error("jump counters disagree");
}

/// One Euler-Maruyama step of the whole system for a fixed model and domain
/// type.
template <class M, class D>
class Stepper {
 public:
  static constexpr int dim = M::dimension;
  static_assert(M::dimension == D::dimension);

  Stepper(const M& model, const D& domain, const Domain& erased, const SimulationConfig& config)
      : model_(model), domain_(domain), erased_(erased), config_(config), sqrt_dt_(std::sqrt(config.dt)) {}

  /// Advances by config.dt and returns the number of boundary hits.
  std::uint64_t step(ParticleSystem& s) const {
    const int n = s.n_;
    std::uint64_t hits = 0;
    if (config_.threads > 1) {
      // Proposals are independent given the pre-step state; resolution is
      // sequential in particle order.
#pragma omp parallel for num_threads(config_.threads) schedule(static)
      for (int i = 0; i < n; ++i) propose(s, i);
      for (int i = 0; i < n; ++i) hits += resolve(s, i);
    } else {
      for (int i = 0; i < n; ++i) {
        propose(s, i);
        hits += resolve(s, i);
      }
    }
    s.positions_.swap(s.scratch_);
    s.t_ += config_.dt;
    s.total_jumps_ += hits;
#ifdef FVQSD_CHECK_INVARIANTS
    check_invariants(s, erased_);
#endif
    return hits;
  }

 private:
  void propose(ParticleSystem& s, int i) const {
    const auto ui = static_cast<std::size_t>(i);
    const double* x = s.positions_.data() + ui * dim;
    double* y = s.scratch_.data() + ui * dim;
    Xoshiro256pp& rng = s.rngs_[ui];
    double b[dim];
    model_.drift(x, b);
    for (int k = 0; k < dim; ++k) y[k] = x[k] + b[k] * config_.dt + sqrt_dt_ * standard_normal(rng);
    bool hit = !domain_.contains(y);
    if (!hit && config_.hit_test == HitTest::BridgeCorrected) {
      const double p = std::exp(-2.0 * domain_.distance(x) * domain_.distance(y) / config_.dt);
      hit = uniform01(rng) < p;
    }
    s.hits_[ui] = hit ? 1 : 0;
  }

  // Finalizes particle i in scratch_. Lower-indexed particles are already
  // final there; higher-indexed ones are read at their pre-step position.
  std::uint64_t resolve(ParticleSystem& s, int i) const {
    const auto ui = static_cast<std::size_t>(i);
    if (!s.hits_[ui]) return 0;
    double* y = s.scratch_.data() + ui * dim;
    Xoshiro256pp& rng = s.rngs_[ui];
    std::visit(
        [&](const auto& policy) {
          using P = std::decay_t<decltype(policy)>;
          if constexpr (std::is_same_v<P, UniformOther>) {
            auto j = static_cast<int>(uniform_index(rng, 0, static_cast<std::uint64_t>(s.n_ - 2)));
            if (j >= i) ++j;
            const auto uj = static_cast<std::size_t>(j);
            const double* src = j < i ? s.scratch_.data() + uj * dim : s.positions_.data() + uj * dim;
            for (int k = 0; k < dim; ++k) y[k] = src[k];
          } else if constexpr (std::is_same_v<P, FixedPoint>) {
            for (int k = 0; k < dim; ++k) y[k] = policy.point[k];
          } else {
            for (int k = 0; k < dim; ++k) {
              const auto kk = static_cast<std::size_t>(k);
              y[k] = policy.box.lo[kk] + (policy.box.hi[kk] - policy.box.lo[kk]) * uniform01(rng);
            }
          }
          if constexpr (!std::is_same_v<P, UniformOther>) {
            if (!domain_.contains(y)) throw Error("jump target outside domain");
          }
        },
        config_.jump_policy);
    ++s.per_particle_jumps_[ui];
    return 1;
  }

  const M& model_;
  const D& domain_;
  const Domain& erased_;
  const SimulationConfig& config_;
  double sqrt_dt_;
};

/// Calls f(model, domain) with the concrete alternative types.
template <class F>
decltype(auto) visit_model_domain(const DriftModel& model, const Domain& domain, F&& f) {
  using R = decltype(f(std::declval<const BrownianMotion&>(), std::declval<const Interval&>()));
  if (model.dimension() != domain.dimension()) throw ConfigError("model and domain dimensions differ");
  return std::visit(
      [&](const auto& m, const auto& d) -> R {
        using M = std::decay_t<decltype(m)>;
        using D = std::decay_t<decltype(d)>;
        if constexpr (M::dimension == D::dimension) {
          return f(m, d);
        } else {
          throw ConfigError("model and domain dimensions differ");
        }
      },
      model.kind(), domain.kind());
}

/// Advances the system by one step of length config.dt; returns the hits.
inline std::uint64_t step(ParticleSystem& system, const DriftModel& model, const Domain& domain,
                          const SimulationConfig& config) {
  config.validate();
  if (system.dimension() != domain.dimension()) throw ConfigError("system and domain dimensions differ");
  return visit_model_domain(model, domain, [&](const auto& m, const auto& d) {
    using M = std::decay_t<decltype(m)>;
    using D = std::decay_t<decltype(d)>;
    return Stepper<M, D>(m, d, domain, config).step(system);
  });
}

/// ((N - 1) / N)^A.
inline double mass_loss(int n, std::uint64_t jumps) {
  return std::exp(static_cast<double>(jumps) * std::log1p(-1.0 / n));
}

struct MassLossPoint {
  double t = 0.0;        ///< time since the start of the sampling window
  double log_mass = 0.0; ///< A_t log((N - 1) / N)

  double mass() const { return std::exp(log_mass); }
  friend bool operator==(const MassLossPoint&, const MassLossPoint&) = default;
};

struct LambdaEstimate {
  double value = 0.0;
  /// Set when the curve carries no decay information (no jumps or too few
  /// points); value is then 0.
  bool degenerate = false;
};

/// Least-squares slope of -log(mass) against t.
inline LambdaEstimate estimate_lambda(std::span<const MassLossPoint> curve) {
  if (curve.size() < 10) throw Error("mass-loss curve needs at least 10 points");
  const double first = curve.front().log_mass;
  const bool flat = std::all_of(curve.begin(), curve.end(),
                                [&](const MassLossPoint& p) { return p.log_mass == first; });
  if (flat) return {0.0, true};
  const double n = static_cast<double>(curve.size());
  double mt = 0.0;
  double my = 0.0;
  for (const auto& p : curve) {
    mt += p.t;
    my += -p.log_mass;
  }
  mt /= n;
  my /= n;
  double stt = 0.0;
  double sty = 0.0;
  for (const auto& p : curve) {
    stt += (p.t - mt) * (p.t - mt);
    sty += (p.t - mt) * (-p.log_mass - my);
  }
  if (!(stt > 0.0)) return {0.0, true};
  return {std::max(0.0, sty / stt), false};
}

struct SimulationResult {
  /// Time average over the sampling window, unit mass.
  EmpiricalMeasure empirical;
  EmpiricalMeasure final_snapshot;
  ParticleSystem final_system;
  /// Time averages over consecutive sub-windows, unit mass each.
  std::vector<EmpiricalMeasure> batch_empirical;
  /// Jumps per unit time per particle over the sampling window.
  double jump_rate = 0.0;
  std::vector<MassLossPoint> mass_loss_curve;
  LambdaEstimate lambda_hat;
  /// Time average of phi_D over particles in the sampling window.
  double mean_phi = 0.0;
  std::vector<double> batch_mean_phi;
  std::uint64_t window_jumps = 0;
  std::uint64_t seed = 0;
};

/// Burn-in followed by a sampling window during which the empirical measure
/// is accumulated every snapshot_stride steps.
inline SimulationResult run(const SimulationConfig& config, const DriftModel& model, const Domain& domain) {
  config.validate();
  ParticleSystem system = init_system(config, domain, config.initial);
  SimulationResult out;
  out.seed = config.seed;

  visit_model_domain(model, domain, [&](const auto& m, const auto& d) {
    using M = std::decay_t<decltype(m)>;
    using D = std::decay_t<decltype(d)>;
    const Stepper<M, D> stepper(m, d, domain, config);

    for (std::int64_t k = 0; k < config.burn_in_steps(); ++k) stepper.step(system);

    const EmpiricalMeasure empty = EmpiricalMeasure::over(domain, static_cast<std::size_t>(config.bins));
    auto snapshot = [&] {
      EmpiricalMeasure h = empty;
      h.accumulate(system.positions(), 1.0);
      return h;
    };
    auto phi_average = [&] {
      double acc = 0.0;
      for (int i = 0; i < system.size(); ++i) {
        acc += d.distance(system.positions().data() + static_cast<std::size_t>(i * M::dimension));
      }
      return acc / system.size();
    };

    const std::int64_t steps = config.sample_steps();
    const std::int64_t snapshots = steps / config.snapshot_stride;
    const std::uint64_t jumps0 = system.total_jumps();
    const double log_keep = std::log1p(-1.0 / config.N);
    out.mass_loss_curve.push_back({0.0, 0.0});

    if (snapshots == 0) {
      for (std::int64_t k = 0; k < steps; ++k) stepper.step(system);
      out.empirical = snapshot();
      out.batch_empirical = {out.empirical};
      out.mean_phi = phi_average();
      out.batch_mean_phi = {out.mean_phi};
    } else {
      const auto n_batches = static_cast<std::int64_t>(std::min<std::int64_t>(config.batches, snapshots));
      std::vector<EmpiricalMeasure> batches(static_cast<std::size_t>(n_batches), empty);
      std::vector<double> phi_sum(static_cast<std::size_t>(n_batches), 0.0);
      std::vector<std::int64_t> counts(static_cast<std::size_t>(n_batches), 0);
      std::int64_t taken = 0;
      for (std::int64_t k = 1; k <= steps; ++k) {
        stepper.step(system);
        if (k % config.snapshot_stride != 0 || taken >= snapshots) continue;
        const auto b = static_cast<std::size_t>(taken * n_batches / snapshots);
        batches[b].accumulate(system.positions(), 1.0);
        phi_sum[b] += phi_average();
        ++counts[b];
        ++taken;
        out.mass_loss_curve.push_back(
            {static_cast<double>(k) * config.dt, static_cast<double>(system.total_jumps() - jumps0) * log_keep});
      }
      out.empirical = empty;
      double phi_total = 0.0;
      for (std::size_t b = 0; b < batches.size(); ++b) {
        out.empirical.merge(batches[b]);
        phi_total += phi_sum[b];
        out.batch_mean_phi.push_back(phi_sum[b] / static_cast<double>(counts[b]));
        out.batch_empirical.push_back(batches[b].normalized());
      }
      out.empirical = out.empirical.normalized();
      out.mean_phi = phi_total / static_cast<double>(taken);
    }
    out.final_snapshot = snapshot();
    out.window_jumps = system.total_jumps() - jumps0;
  });
  out.final_system = std::move(system);

  if (config.sample_horizon > 0.0) {
    out.jump_rate = static_cast<double>(out.window_jumps) / (config.N * config.sample_horizon);
  }
  out.lambda_hat = out.mass_loss_curve.size() >= 10 ? estimate_lambda(out.mass_loss_curve) : LambdaEstimate{0.0, true};
  return out;
}

/// CSV dump of the particles: `t,particle_id,x1[,x2],jumps`.
inline void write_snapshot_csv(const ParticleSystem& s, std::ostream& os) {
  const auto old = os.precision(17);
  os << "t,particle_id,x1" << (s.dimension() == 2 ? ",x2" : "") << ",jumps\n";
  for (int i = 0; i < s.size(); ++i) {
    const Point p = s.position(i);
    os << s.time() << ',' << i << ',' << p[0];
    if (s.dimension() == 2) os << ',' << p[1];
    os << ',' << s.per_particle_jumps()[static_cast<std::size_t>(i)] << '\n';
  }
  os.precision(old);
}

}  // namespace fvqsd
