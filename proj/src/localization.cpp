#include "obstacle_walk/localization.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "obstacle_walk/continuum.hpp"
#include "obstacle_walk/domain.hpp"
#include "obstacle_walk/error.hpp"
#include "obstacle_walk/killed_walk.hpp"
#include "obstacle_walk/parallel.hpp"

namespace obstacle_walk {

namespace {

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return -floor_div(-a, b); }

std::size_t count_closed(const EnvironmentField& env, const Box& tile) {
  std::size_t n = 0;
  tile.for_each([&](const Site& s) { n += env.is_closed(s); });
  return n;
}

/// Lattice offsets of B(0, rho).
std::vector<Site> ball_offsets(std::int64_t rho, int d) {
  return euclidean_ball(Site{}, static_cast<double>(rho), d);
}

Site shifted(const Site& c, const Site& off, int d) {
  Site s = c;
  for (int i = 0; i < d; ++i) s[i] += off[i];
  return s;
}

std::size_t sym_diff_with(const BoxMask& e_set, std::size_t e_volume,
                          const std::vector<Site>& offsets, const Site& c) {
  const int d = e_set.box().dim();
  std::size_t inside = 0;
  for (const auto& off : offsets) inside += e_set.test(shifted(c, off, d));
  return offsets.size() + e_volume - 2 * inside;
}

std::size_t obstacles_with(const EnvironmentField& env, const std::vector<Site>& offsets,
                           const Site& c) {
  const int d = env.dim();
  std::size_t n = 0;
  for (const auto& off : offsets) n += env.is_closed(shifted(c, off, d));
  return n;
}

}  // namespace

std::vector<Site> tile_anchors(const Box& box, std::int32_t tile_radius) {
  require(tile_radius >= 0, "tile radius must be nonnegative");
  const int d = box.dim();
  const std::int64_t w = 2 * static_cast<std::int64_t>(tile_radius) + 1;
  std::array<std::int32_t, kMaxDim> first{};
  std::array<std::int32_t, kMaxDim> last{};
  for (int i = 0; i < d; ++i) {
    const auto k = static_cast<std::size_t>(i);
    first[k] = static_cast<std::int32_t>(ceil_div(box.lo(i) + tile_radius, w) * w);
    last[k] = static_cast<std::int32_t>(floor_div(box.hi(i) - tile_radius, w) * w);
    if (first[k] > last[k]) return {};
  }
  std::vector<Site> out;
  Site a;
  for (int i = 0; i < d; ++i) a[i] = first[static_cast<std::size_t>(i)];
  for (;;) {
    out.push_back(a);
    int i = d - 1;
    for (; i >= 0; --i) {
      const auto k = static_cast<std::size_t>(i);
      if (a[i] + w <= last[k]) {
        a[i] += static_cast<std::int32_t>(w);
        break;
      }
      a[i] = first[k];
    }
    if (i < 0) break;
  }
  return out;
}

CoarseGrid coarse_grid(const EnvironmentField& env, std::int32_t tile_radius) {
  CoarseGrid g;
  g.tile_radius = tile_radius;
  g.anchors = tile_anchors(env.box(), tile_radius);
  g.density.resize(g.anchors.size());
  const int d = env.dim();
  parallel_for(
      g.anchors.size(),
      [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
          const Box tile = Box::around(g.anchors[i], tile_radius, d);
          g.density[i] = static_cast<double>(count_closed(env, tile)) /
                         static_cast<double>(tile.volume());
        }
      },
      64);
  return g;
}

LowDensityRegion low_density_region(const EnvironmentField& env, double epsilon, std::int64_t rho,
                                    const BoxMask* region) {
  require(epsilon > 0.0 && epsilon < 1.0, "epsilon must lie in (0, 1)");
  require(rho >= 1, "rho must be at least 1");
  const auto s = static_cast<std::int32_t>(std::floor(epsilon * static_cast<double>(rho)));
  require(s >= 1, "floor(epsilon * rho) = 0 gives degenerate tiles");
  const int d = env.dim();
  LowDensityRegion out;
  out.epsilon = epsilon;
  out.tile_radius = s;
  out.mask = BoxMask(env.box());
  const CoarseGrid grid = coarse_grid(env, s);
  for (std::size_t i = 0; i < grid.anchors.size(); ++i) {
    const Box tile = Box::around(grid.anchors[i], s, d);
    const double closed = grid.density[i] * static_cast<double>(tile.volume());
    if (closed > epsilon * static_cast<double>(tile.volume()) + 1e-9) continue;
    bool meets = false;
    tile.for_each([&](const Site& x) {
      if (!meets) meets = region ? region->test(x) : env.is_open(x);
    });
    if (!meets) continue;
    out.anchors.push_back(grid.anchors[i]);
    tile.for_each([&](const Site& x) { out.mask.set(x); });
  }
  return out;
}

std::vector<double> stay_probabilities(const EnvironmentField& env, const Site& anchor,
                                       std::int32_t ell) {
  require(ell >= 1, "ell must be at least 1");
  const int d = env.dim();
  const Box outer = Box::around(anchor, 4 * ell, d);
  std::vector<Site> sites;
  outer.for_each([&](const Site& s) {
    if (env.is_open(s)) sites.push_back(s);
  });
  const LatticeDomain dom(std::move(sites), d);
  const auto stay = propagate(dom, std::vector<double>(dom.size(), 1.0),
                              static_cast<std::int64_t>(ell) * ell);
  const Box inner = Box::around(anchor, ell, d);
  std::vector<double> out;
  out.reserve(inner.volume());
  inner.for_each([&](const Site& u) {
    const auto i = dom.index_of(u);
    out.push_back(i < 0 ? 0.0 : stay[static_cast<std::size_t>(i)]);
  });
  return out;
}

double stay_probability(const EnvironmentField& env, const Site& anchor, std::int32_t ell) {
  const auto p = stay_probabilities(env, anchor, ell);
  return *std::max_element(p.begin(), p.end());
}

std::vector<TrulyOpenBox> detect_truly_open(const EnvironmentField& env, std::int32_t ell,
                                            const std::vector<Site>* anchors) {
  require(ell >= 1, "ell must be at least 1");
  const std::vector<Site> all = anchors ? *anchors : tile_anchors(env.box(), ell);
  std::vector<TrulyOpenBox> out(all.size());
  parallel_for(
      all.size(),
      [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
          TrulyOpenBox& b = out[i];
          b.anchor = all[i];
          b.stay_probability = stay_probability(env, all[i], ell);
          // stay probabilities are dyadic rationals, so equality with 1/10 cannot occur
          b.truly_open = b.stay_probability >= kTrulyOpenThreshold;
          b.near_threshold = std::fabs(b.stay_probability - kTrulyOpenThreshold) <= 0.01;
        }
      },
      4);
  return out;
}

std::size_t symmetric_difference(const BoxMask& e_set, const Site& center, std::int64_t rho) {
  return sym_diff_with(e_set, e_set.count(), ball_offsets(rho, e_set.box().dim()), center);
}

BallFit fit_ball_center(const BoxMask& e_set, std::int64_t rho, std::int32_t anchor_radius) {
  require(rho >= 0, "rho must be nonnegative");
  const std::size_t volume = e_set.count();
  require(volume > 0, "cannot fit a ball to an empty set");
  const Box& box = e_set.box();
  const int d = box.dim();
  const auto offsets = ball_offsets(rho, d);
  const auto anchors = tile_anchors(box, anchor_radius);
  require(!anchors.empty(), "no tile anchors inside the search region");

  BallFit fit;
  fit.sym_diff = SIZE_MAX;
  for (const auto& a : anchors) {
    const auto sd = sym_diff_with(e_set, volume, offsets, a);
    if (sd < fit.sym_diff) {
      fit.sym_diff = sd;
      fit.center = a;
    }
  }
  fit.coarse_candidates = anchors.size();
  const Box window = Box::around(fit.center, 2 * anchor_radius + 1, d).intersect(box);
  std::size_t best = SIZE_MAX;
  Site best_center;
  window.for_each([&](const Site& c) {
    const auto sd = sym_diff_with(e_set, volume, offsets, c);
    if (sd < best) {
      best = sd;
      best_center = c;
    }
    ++fit.refine_candidates;
  });
  fit.sym_diff = best;
  fit.center = best_center;
  return fit;
}

std::size_t obstacles_in_ball(const EnvironmentField& env, const Site& center, double radius) {
  std::size_t n = 0;
  for (const auto& s : euclidean_ball(center, radius, env.dim())) n += env.is_closed(s);
  return n;
}

ShellIndex shell_index(const EnvironmentField& env, const Site& center, std::int64_t rho,
                       double delta, double c5) {
  require(delta > 0.0 && delta < 0.5, "delta must lie in (0, 1/2)");
  require(c5 > 0.0 && c5 <= 1.0, "c5 must lie in (0, 1]");
  require(rho >= 1, "rho must be at least 1");
  ShellIndex out;
  out.delta = delta;
  const auto r = static_cast<double>(rho);
  out.clear = obstacles_in_ball(env, center, (1.0 - delta) * r) == 0;
  auto radius = [&](std::int64_t k) { return (1.0 - delta + std::ldexp(delta, -static_cast<int>(k))) * r; };
  out.radii.push_back(radius(0));
  out.counts.push_back(obstacles_in_ball(env, center, radius(0)));
  // counts are nonincreasing integers and fall by a factor c5 < 1 at every
  // step that does not stop, so the loop terminates
  for (std::int64_t k = 1;; ++k) {
    out.radii.push_back(radius(k));
    out.counts.push_back(obstacles_in_ball(env, center, radius(k)));
    const auto cur = static_cast<double>(out.counts.back());
    const auto prev = static_cast<double>(out.counts[out.counts.size() - 2]);
    if (cur >= c5 * prev) {
      out.J = k;
      break;
    }
    if (k > 1000) throw InvariantViolation("shell index failed to terminate");
  }
  return out;
}

LocalizationReport localize(const EnvironmentField& env, double log_n, double p,
                            const LocalizationConfig& config) {
  const int d = env.dim();
  LocalizationReport rep;
  rep.rho = config.rho ? *config.rho : rho_from_log(log_n, d, p);
  require(rep.rho >= 1, "rho_n < 1: n is too small for localization");
  const double rho = static_cast<double>(rep.rho);
  rep.epsilon = config.epsilon ? *config.epsilon : std::pow(rho, -config.c2);
  require(rep.epsilon > 0.0 && rep.epsilon < 1.0, "epsilon_n must lie in (0, 1)");
  const double delta = std::pow(rho, -config.kappa);
  require(delta > 0.0 && delta < 0.5, "delta = rho^-kappa must lie in (0, 1/2); raise kappa");

  const double ball_volume = static_cast<double>(euclidean_ball(Site{}, rho, d).size());
  for (const double eps : {std::sqrt(rep.epsilon), rep.epsilon, rep.epsilon * rep.epsilon}) {
    LocalizationReport::EVolume ev;
    ev.epsilon = eps;
    ev.tile_radius = static_cast<std::int32_t>(std::floor(eps * rho));
    ev.cap = ball_volume + std::sqrt(eps) * std::pow(rho, d);
    if (ev.tile_radius >= 1) {
      auto region = low_density_region(env, eps, rep.rho);
      ev.volume = region.volume();
      if (eps == rep.epsilon) rep.e_set = std::move(region);
    }
    rep.e_volumes.push_back(ev);
  }
  require(rep.e_volumes[1].volume.has_value(),
          "floor(epsilon_n * rho) = 0 gives degenerate tiles");
  if (config.inventory) rep.truly_open = detect_truly_open(env, config.ell);
  if (rep.e_set.volume() == 0) {
    rep.outcome = LocalizationOutcome::kEmpty;
    return rep;
  }
  rep.outcome = LocalizationOutcome::kLocated;

  const BallFit fit = fit_ball_center(rep.e_set.mask, rep.rho, rep.e_set.tile_radius);
  rep.fit_center = fit.center;
  rep.fit_sym_diff = fit.sym_diff;

  // clearance refinement: near the fit, prefer the ball with fewest obstacles,
  // then the smaller symmetric difference, then the lexicographic order
  const auto offsets = ball_offsets(rep.rho, d);
  const std::size_t volume = rep.e_set.volume();
  const Box window =
      Box::around(fit.center, 2 * rep.e_set.tile_radius + 1, d).intersect(env.box());
  std::tuple<std::size_t, std::size_t, Site> best{SIZE_MAX, SIZE_MAX, Site{}};
  window.for_each([&](const Site& c) {
    const std::tuple<std::size_t, std::size_t, Site> key{
        obstacles_with(env, offsets, c), sym_diff_with(rep.e_set.mask, volume, offsets, c), c};
    if (key < best) best = key;
  });
  rep.obstacle_count_in_ball = std::get<0>(best);
  rep.sym_diff = std::get<1>(best);
  rep.center = std::get<2>(best);
  rep.obstacle_bound = static_cast<double>(rep.sym_diff) + rep.epsilon * static_cast<double>(volume);
  rep.shells = shell_index(env, rep.center, rep.rho, delta, config.c5);
  return rep;
}

}  // namespace obstacle_walk
