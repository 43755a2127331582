#include "obstacle_walk/killed_walk.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <random>

#include "obstacle_walk/error.hpp"
#include "obstacle_walk/numerics.hpp"
#include "obstacle_walk/parallel.hpp"

namespace obstacle_walk {

double MassProfile::at(const Site& s) const {
  const auto i = domain->index_of(s);
  return i < 0 ? 0.0 : u[static_cast<std::size_t>(i)];
}

namespace {

/// Open sites reachable from `start` without entering `blocked`.
LatticeDomain reachable_domain(const EnvironmentField& env, const Site& start,
                               const BoxMask& blocked) {
  const int d = env.dim();
  std::vector<Site> sites;
  BoxMask seen(env.box());
  std::deque<Site> queue{start};
  seen.set(start);
  while (!queue.empty()) {
    const Site s = queue.front();
    queue.pop_front();
    sites.push_back(s);
    const auto nb = neighbours(s, d);
    for (int k = 0; k < 2 * d; ++k) {
      const Site& t = nb[static_cast<std::size_t>(k)];
      if (env.is_open(t) && !blocked.test(t) && !seen.test(t)) {
        seen.set(t);
        queue.push_back(t);
      }
    }
  }
  return LatticeDomain(std::move(sites), d);
}

std::vector<std::uint8_t> outside_box_counts(const LatticeDomain& domain, const Box& box) {
  std::vector<std::uint8_t> out(domain.size(), 0);
  const int d = domain.dim();
  for (std::size_t i = 0; i < domain.size(); ++i) {
    const auto nb = neighbours(domain.site(i), d);
    for (int k = 0; k < 2 * d; ++k) out[i] += !box.contains(nb[static_cast<std::size_t>(k)]);
  }
  return out;
}

double weighted_sum(std::span<const double> u, std::span<const double> w) { return dot(u, w); }

}  // namespace

Evolution evolve_mass(const EnvironmentField& env, const Site& start, std::int64_t t_max,
                      std::span<const Site> absorbing, const EvolveOptions& options) {
  require(t_max >= 0, "t_max must be nonnegative");
  require(env.is_open(start), "start " + format_site(start, env.dim()) + " is not an open site");
  BoxMask blocked(env.box());
  for (const auto& s : absorbing) {
    if (env.box().contains(s)) blocked.set(s);
  }
  require(!blocked.test(start), "start lies in the absorbing set");

  std::vector<std::int64_t> snaps = options.snapshots;
  if (snaps.empty()) snaps.push_back(t_max);
  std::sort(snaps.begin(), snaps.end());
  snaps.erase(std::unique(snaps.begin(), snaps.end()), snaps.end());
  for (const auto s : snaps) {
    require(s >= 0 && s <= t_max, "snapshot times must lie in [0, t_max]");
    require(!options.two_step || s % 2 == 0 || s == t_max,
            "two-step evolution only reports even times");
  }

  Evolution ev;
  ev.domain = std::make_shared<const LatticeDomain>(reachable_domain(env, start, blocked));
  const LatticeDomain& dom = *ev.domain;
  const std::size_t n = dom.size();
  const int d = env.dim();
  const double w = 1.0 / (2.0 * d);
  const auto outside = outside_box_counts(dom, env.box());
  std::vector<double> exit_w(n);
  std::vector<double> kill_w(n);
  for (std::size_t i = 0; i < n; ++i) {
    exit_w[i] = w * outside[i];
    kill_w[i] = w * (2 * d - dom.degree(i) - outside[i]);
  }

  const Parity start_parity = parity_of(start, d);
  auto record = [&](std::int64_t t, std::span<const double> u, double total) {
    if (!std::binary_search(snaps.begin(), snaps.end(), t)) return;
    MassProfile p;
    p.domain = ev.domain;
    p.t = t;
    p.start = start;
    p.parity_class = parity_after(start_parity, t);
    p.u.assign(u.begin(), u.end());
    p.total_mass = total;
    ev.profiles.push_back(std::move(p));
  };

  std::vector<double> u(n, 0.0);
  u[static_cast<std::size_t>(dom.index_of(start))] = 1.0;
  ev.times.push_back(0);
  ev.total_mass.push_back(1.0);
  ev.killed.push_back(0.0);
  ev.exited.push_back(0.0);
  record(0, u, 1.0);

  std::vector<double> next(n);
  std::int64_t t = 0;
  if (options.two_step && t_max >= 2) {
    const TwoStepOperator op(dom, start_parity);
    const auto& members = op.members();
    const std::size_t m = op.size();
    // losses over two steps from a class site y: direct exits plus exits of
    // the intermediate mass
    std::vector<double> exit2(m);
    std::vector<double> kill2(m);
    for (std::size_t r = 0; r < m; ++r) {
      const auto y = static_cast<std::size_t>(members[r]);
      double e = exit_w[y];
      double k = kill_w[y];
      for (int a = 0; a < 2 * d; ++a) {
        const auto x = dom.neighbour(y, a);
        if (x < 0) continue;
        e += w * exit_w[static_cast<std::size_t>(x)];
        k += w * kill_w[static_cast<std::size_t>(x)];
      }
      exit2[r] = e;
      kill2[r] = k;
    }
    std::vector<double> v(m);
    std::vector<double> v_next(m);
    for (std::size_t r = 0; r < m; ++r) v[r] = u[static_cast<std::size_t>(members[r])];
    std::vector<double> full(n, 0.0);
    while (t + 2 <= t_max) {
      op.apply(v, v_next);
      ev.exited.push_back(weighted_sum(v, exit2));
      ev.killed.push_back(weighted_sum(v, kill2));
      v.swap(v_next);
      t += 2;
      const double total = compensated_sum(v);
      ev.times.push_back(t);
      ev.total_mass.push_back(total);
      if (std::binary_search(snaps.begin(), snaps.end(), t)) {
        std::fill(full.begin(), full.end(), 0.0);
        for (std::size_t r = 0; r < m; ++r) full[static_cast<std::size_t>(members[r])] = v[r];
        record(t, full, total);
      }
    }
    std::fill(u.begin(), u.end(), 0.0);
    for (std::size_t r = 0; r < m; ++r) u[static_cast<std::size_t>(members[r])] = v[r];
  }
  while (t < t_max) {
    dom.apply(u, next);
    ev.exited.push_back(weighted_sum(u, exit_w));
    ev.killed.push_back(weighted_sum(u, kill_w));
    u.swap(next);
    ++t;
    const double total = compensated_sum(u);
    ev.times.push_back(t);
    ev.total_mass.push_back(total);
    record(t, u, total);
  }
  return ev;
}

double survival_probability(const EnvironmentField& env, const Site& start, std::int64_t n) {
  EvolveOptions options;
  options.snapshots = {n};
  options.two_step = true;
  return evolve_mass(env, start, n, {}, options).total_mass.back();
}

std::vector<double> propagate(const LatticeDomain& domain, std::vector<double> v,
                              std::int64_t steps) {
  require(steps >= 0, "step count must be nonnegative");
  std::vector<double> next(v.size());
  for (std::int64_t s = 0; s < steps; ++s) {
    domain.apply(v, next);
    v.swap(next);
  }
  return v;
}

MassProfile conditional_law(const LatticeDomain& domain, const Site& start, std::int64_t t,
                            const Condition& condition) {
  require(t >= 0 && t <= condition.horizon, "observation time must lie in [0, horizon]");
  const auto s = domain.index_of(start);
  require(s >= 0, "start " + format_site(start, domain.dim()) + " is outside the domain");
  std::vector<double> forward(domain.size(), 0.0);
  forward[static_cast<std::size_t>(s)] = 1.0;
  forward = propagate(domain, std::move(forward), t);
  std::vector<double> backward;
  if (condition.endpoint) {
    const auto y = domain.index_of(*condition.endpoint);
    require(y >= 0, "bridge endpoint is outside the domain");
    backward.assign(domain.size(), 0.0);
    backward[static_cast<std::size_t>(y)] = 1.0;
  } else {
    backward.assign(domain.size(), 1.0);
  }
  backward = propagate(domain, std::move(backward), condition.horizon - t);

  MassProfile p;
  p.domain = std::make_shared<const LatticeDomain>(domain);
  p.t = t;
  p.start = start;
  p.parity_class = parity_after(parity_of(start, domain.dim()), t);
  p.u.resize(domain.size());
  for (std::size_t i = 0; i < domain.size(); ++i) p.u[i] = forward[i] * backward[i];
  const double z = compensated_sum(p.u);
  if (!(z > 0.0)) throw InvalidArgument("conditioning event has probability zero");
  for (auto& x : p.u) x /= z;
  p.total_mass = 1.0;
  return p;
}

MassProfile conditional_law(const EnvironmentField& env, const Site& start, std::int64_t t,
                            const Condition& condition, std::span<const Site> region) {
  require(env.is_open(start), "start " + format_site(start, env.dim()) + " is not an open site");
  BoxMask blocked(env.box(), !region.empty());
  for (const auto& s : region) {
    if (env.box().contains(s)) blocked.set(s, false);
  }
  require(!blocked.test(start), "start lies outside the conditioning region");
  return conditional_law(reachable_domain(env, start, blocked), start, t, condition);
}

std::uint64_t sample_stream_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632be59bd9b4e019ull));
}

PathSampling sample_paths(const EnvironmentField& env, const Site& start, std::int64_t n,
                          std::size_t n_samples, std::uint64_t seed, std::size_t keep) {
  require(n >= 0, "horizon must be nonnegative");
  require(env.is_open(start), "start " + format_site(start, env.dim()) + " is not an open site");
  const int d = env.dim();
  const auto dirs = static_cast<std::uint64_t>(2 * d);
  keep = std::min(keep, n_samples);
  constexpr std::size_t kChunk = 512;
  const std::size_t chunks = (n_samples + kChunk - 1) / kChunk;
  struct Tally {
    std::size_t killed = 0;
    std::size_t exited = 0;
  };
  std::vector<Tally> tallies(chunks);
  PathSampling out;
  out.kept.resize(keep);
  parallel_for(
      n_samples,
      [&](std::size_t begin, std::size_t end) {
        Tally& tally = tallies[begin / kChunk];
        for (std::size_t i = begin; i < end; ++i) {
          const std::uint64_t stream = sample_stream_seed(seed, i);
          std::mt19937_64 rng(stream);
          WalkPathSample sample;
          sample.seed = stream;
          const bool keeping = i < keep;
          Site s = start;
          if (keeping) sample.path.push_back(s);
          for (std::int64_t k = 1; k <= n; ++k) {
            const auto dir = rng() % dirs;
            s[static_cast<int>(dir / 2)] += (dir % 2 == 0) ? -1 : 1;
            if (keeping) sample.path.push_back(s);
            if (!env.in_box(s)) {
              sample.exited_at = k;
              ++tally.exited;
              break;
            }
            if (env.is_closed(s)) {
              sample.killed_at = k;
              ++tally.killed;
              break;
            }
          }
          if (keeping) out.kept[i] = std::move(sample);
        }
      },
      kChunk);
  out.samples = n_samples;
  for (const auto& t : tallies) {
    out.killed += t.killed;
    out.exited += t.exited;
  }
  out.survived = n_samples - out.killed - out.exited;
  if (n_samples > 0) {
    const double p = static_cast<double>(out.survived) / static_cast<double>(n_samples);
    out.estimate = p;
    out.standard_error = std::sqrt(p * (1.0 - p) / static_cast<double>(n_samples));
  }
  return out;
}

std::optional<std::int64_t> hitting_time(std::span<const Site> path, std::span<const Site> target) {
  require(!target.empty(), "target set is empty");
  std::vector<Site> sorted(target.begin(), target.end());
  normalize_sites(sorted);
  for (std::size_t t = 0; t < path.size(); ++t) {
    if (std::binary_search(sorted.begin(), sorted.end(), path[t])) {
      return static_cast<std::int64_t>(t);
    }
  }
  return std::nullopt;
}

HittingDistribution hitting_time_distribution(const EnvironmentField& env, const Site& start,
                                              std::span<const Site> target, std::int64_t horizon) {
  require(!target.empty(), "target set is empty");
  require(horizon >= 0, "horizon must be nonnegative");
  std::vector<Site> sorted(target.begin(), target.end());
  normalize_sites(sorted);
  HittingDistribution out;
  out.cdf.assign(static_cast<std::size_t>(horizon) + 1, 0.0);
  if (std::binary_search(sorted.begin(), sorted.end(), start)) {
    std::fill(out.cdf.begin(), out.cdf.end(), 1.0);
    out.reachable = true;
    out.earliest = 0;
    return out;
  }
  require(env.is_open(start), "start " + format_site(start, env.dim()) + " is not an open site");
  BoxMask blocked(env.box());
  for (const auto& s : sorted) {
    if (env.box().contains(s)) blocked.set(s);
  }
  const LatticeDomain dom = reachable_domain(env, start, blocked);
  const int d = env.dim();
  const double w = 1.0 / (2.0 * d);
  std::vector<double> into(dom.size(), 0.0);
  for (std::size_t i = 0; i < dom.size(); ++i) {
    const auto nb = neighbours(dom.site(i), d);
    int hits = 0;
    for (int k = 0; k < 2 * d; ++k) {
      hits += std::binary_search(sorted.begin(), sorted.end(), nb[static_cast<std::size_t>(k)]);
    }
    into[i] = w * hits;
    if (hits > 0) out.reachable = true;
  }
  std::vector<double> u(dom.size(), 0.0);
  std::vector<double> next(dom.size());
  u[static_cast<std::size_t>(dom.index_of(start))] = 1.0;
  CompensatedSum acc;
  for (std::int64_t t = 1; t <= horizon; ++t) {
    acc.add(dot(u, into));
    dom.apply(u, next);
    u.swap(next);
    out.cdf[static_cast<std::size_t>(t)] = acc.value();
    if (!out.earliest && acc.value() > 0.0) out.earliest = t;
  }
  return out;
}

}  // namespace obstacle_walk
