#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "obstacle_walk/domain.hpp"
#include "obstacle_walk/environment.hpp"

namespace obstacle_walk {

/// u(t, .) of the killed evolution; u is indexed like `domain`.
struct MassProfile {
  std::shared_ptr<const LatticeDomain> domain;
  std::int64_t t = 0;
  Site start;
  /// Absolute parity of the sites that can carry mass at time t.
  Parity parity_class = Parity::kEven;
  std::vector<double> u;
  double total_mass = 0.0;

  double at(const Site& s) const;
};

struct EvolveOptions {
  /// Times at which to keep the full profile; empty keeps only t_max.
  std::vector<std::int64_t> snapshots;
  /// Advance by P^2 on the start's parity class; only even snapshot times
  /// (and t_max) are then available.
  bool two_step = false;
};

struct Evolution {
  /// Open component of the start inside the box, minus the absorbing set.
  std::shared_ptr<const LatticeDomain> domain;
  std::vector<MassProfile> profiles;
  /// Reporting times (every step, or every second step in two-step mode).
  std::vector<std::int64_t> times;
  std::vector<double> total_mass;
  /// Mass killed on obstacles or absorbing sites since the previous time.
  std::vector<double> killed;
  /// Mass that stepped outside the environment box since the previous time.
  std::vector<double> exited;
};

/// Exact law of the walk started at `start`, killed on obstacles and on
/// `absorbing`, with mass leaving the box reported separately.
Evolution evolve_mass(const EnvironmentField& env, const Site& start, std::int64_t t_max,
                      std::span<const Site> absorbing = {}, const EvolveOptions& options = {});

/// P(tau > n) for the walk in `env`, counting box exits as losses.
double survival_probability(const EnvironmentField& env, const Site& start, std::int64_t n);

/// P|_A^steps v.
std::vector<double> propagate(const LatticeDomain& domain, std::vector<double> v,
                              std::int64_t steps);

/// The walk is conditioned to stay inside the domain up to `horizon` and,
/// optionally, to sit at `endpoint` at that time.
struct Condition {
  std::int64_t horizon = 0;
  std::optional<Site> endpoint;

  static Condition survive_to(std::int64_t n) { return {n, std::nullopt}; }
  static Condition bridge(std::int64_t m, const Site& y) { return {m, y}; }
};

/// P(S_t = x | condition) on `domain`, computed as forward mass at t times
/// backward survival (or bridge) mass over horizon - t steps, normalized.
MassProfile conditional_law(const LatticeDomain& domain, const Site& start, std::int64_t t,
                            const Condition& condition);
/// Same on the open sites of `env`, optionally intersected with `region`
/// (empty region means the whole box).
MassProfile conditional_law(const EnvironmentField& env, const Site& start, std::int64_t t,
                            const Condition& condition, std::span<const Site> region = {});

struct WalkPathSample {
  std::vector<Site> path;
  std::optional<std::int64_t> killed_at;
  std::optional<std::int64_t> exited_at;
  std::uint64_t seed = 0;
};

struct PathSampling {
  std::vector<WalkPathSample> kept;
  std::size_t samples = 0;
  std::size_t survived = 0;
  std::size_t killed = 0;
  std::size_t exited = 0;
  double estimate = 0.0;
  double standard_error = 0.0;
};

/// Seed of the per-sample stream; sample i uses mt19937_64 seeded with it,
/// so results are independent of how samples are split across workers.
std::uint64_t sample_stream_seed(std::uint64_t seed, std::uint64_t index);

/// Monte Carlo killed walks. The first `keep` trajectories are returned.
PathSampling sample_paths(const EnvironmentField& env, const Site& start, std::int64_t n,
                          std::size_t n_samples, std::uint64_t seed, std::size_t keep = 0);

/// First index t with path[t] in target, or nullopt.
std::optional<std::int64_t> hitting_time(std::span<const Site> path, std::span<const Site> target);

struct HittingDistribution {
  /// cdf[t] = P(walk reaches the target by time t before being killed).
  std::vector<double> cdf;
  bool reachable = false;
  /// Smallest t with cdf[t] > 0, or nullopt ("never within horizon").
  std::optional<std::int64_t> earliest;
};

HittingDistribution hitting_time_distribution(const EnvironmentField& env, const Site& start,
                                              std::span<const Site> target, std::int64_t horizon);

}  // namespace obstacle_walk
