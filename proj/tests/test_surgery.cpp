#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "obstacle_walk/error.hpp"
#include "obstacle_walk/surgery.hpp"

using namespace obstacle_walk;

namespace {

// P restricted to the sites, built from coordinates only.
Eigen::MatrixXd reference_matrix(const std::vector<Site>& sites, int d) {
  const auto n = static_cast<Eigen::Index>(sites.size());
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      int l1 = 0;
      for (int k = 0; k < d; ++k) l1 += std::abs(sites[static_cast<std::size_t>(i)][k] - sites[static_cast<std::size_t>(j)][k]);
      if (l1 == 1) p(i, j) = 1.0 / (2 * d);
    }
  }
  return p;
}

double reference_lambda(const std::vector<Site>& sites, int d) {
  if (sites.empty()) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(reference_matrix(sites, d));
  return es.eigenvalues().maxCoeff();
}

std::vector<Site> open_cluster(const EnvironmentField& env, const Site& start) {
  std::vector<Site> out;
  if (!env.is_open(start)) return out;
  std::set<Site> seen{start};
  std::vector<Site> stack{start};
  while (!stack.empty()) {
    const Site s = stack.back();
    stack.pop_back();
    out.push_back(s);
    for (const auto& y : neighbours(s, env.dim())) {
      if (env.in_box(y) && env.is_open(y) && seen.insert(y).second) stack.push_back(y);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Site> square(int x0, int y0, int side) {
  std::vector<Site> out;
  for (int x = x0; x < x0 + side; ++x) {
    for (int y = y0; y < y0 + side; ++y) out.push_back(Site{x, y});
  }
  return out;
}

// min(|dA1 n A2|, |dA2 n A1|) by set lookups.
std::pair<std::size_t, std::size_t> reference_boundaries(const std::vector<Site>& ball, const std::set<Site>& a1, int d) {
  const std::set<Site> all(ball.begin(), ball.end());
  std::size_t b1 = 0, b2 = 0;
  for (const auto& s : ball) {
    bool other = false;
    for (const auto& y : neighbours(s, d)) {
      if (all.count(y) && a1.count(y) != a1.count(s)) other = true;
    }
    if (other) (a1.count(s) ? b2 : b1)++;
  }
  return {b1, b2};
}

}  // namespace

TEST_CASE("surgery operations are well formed") {
  const EnvironmentField env = sample_environment(Box::cube(2, -10, 10), 0.7, 1);
  const SurgeryOp rem = remove_obstacles_in(env, euclidean_ball(Site{}, 4.0, 2));
  const SurgeryOp cls = close_region(env, square(-2, -2, 4));
  CHECK(well_formed(rem));
  CHECK(well_formed(cls));
  env.box().for_each([&](const Site& s) {
    const bool in_ball = euclidean_distance(s, Site{}, 2) <= 4.0;
    CHECK(rem.after.is_closed(s) == (env.is_closed(s) && !in_ball));
  });
  const SurgeryOp outside = remove_obstacles_in(env, {Site{50, 50}});
  CHECK(outside.region.empty());
}

TEST_CASE("eigenvalue shifts") {
  const Box box = Box::cube(2, -5, 5);
  const EnvironmentField env = sample_environment(box, 0.7, 3);
  const EigShift none = eig_shift(remove_obstacles_in(env, {}), DomainSpec::open_sites());
  CHECK(none.delta == 0.0);

  // two-site domain, close one site
  std::vector<Site> obstacles;
  box.for_each([&](const Site& s) {
    if (!(s == Site{0, 0} || s == Site{1, 0})) obstacles.push_back(s);
  });
  const EnvironmentField pair = environment_from_obstacles(box, obstacles);
  const EigShift close = eig_shift(close_region(pair, {Site{1, 0}}), DomainSpec::open_sites());
  CHECK(close.lambda_before == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(close.lambda_after == 0.0);
  CHECK(close.delta == doctest::Approx(-0.25).epsilon(1e-14));

  // 2x2 square minus a corner, then the corner obstacle is removed
  std::vector<Site> rest;
  box.for_each([&](const Site& s) {
    if (!(s[0] >= 0 && s[0] <= 1 && s[1] >= 0 && s[1] <= 1) || s == Site{1, 1}) rest.push_back(s);
  });
  const EnvironmentField corner = environment_from_obstacles(box, rest);
  const EigShift rem = eig_shift(remove_obstacles_in(corner, {Site{1, 1}}), DomainSpec::open_sites());
  CHECK(rem.lambda_before == doctest::Approx(std::sqrt(2.0) / 4.0).epsilon(1e-13));
  CHECK(rem.delta == doctest::Approx(0.5 - std::sqrt(2.0) / 4.0).epsilon(1e-13));
  CHECK(rem.lambda_before == doctest::Approx(reference_lambda({Site{0, 0}, Site{0, 1}, Site{1, 0}}, 2)));
}

TEST_CASE("surgery monotonicity on nested random pairs") {
  std::mt19937_64 rng(21);
  for (int k = 0; k < 20; ++k) {
    const EnvironmentField env = sample_environment(Box::cube(2, -8, 8), 0.75, 100 + k);
    std::vector<Site> region;
    env.box().for_each([&](const Site& s) {
      if (rng() % 7 == 0) region.push_back(s);
    });
    const EigShift r = eig_shift(remove_obstacles_in(env, region), DomainSpec::ball(Site{}, 7.0));
    CHECK(r.delta >= -1e-12);
    const EigShift c = eig_shift(close_region(env, region), DomainSpec::ball(Site{}, 7.0));
    CHECK(c.delta <= 1e-12);
  }
}

TEST_CASE("drop upper bound examples") {
  const std::vector<Site> sq = square(0, 0, 2);
  const LatticeDomain d1(sq, 2);
  const DropBound empty = drop_upper_bound_check(d1, {});
  CHECK(empty.q == 0.0);
  CHECK(empty.bound == 0.0);
  CHECK(empty.actual_drop == doctest::Approx(0.0).scale(1.0));

  const DropBound corner = drop_upper_bound_check(d1, {Site{1, 1}});
  CHECK(corner.q == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(corner.bound == doctest::Approx(6.0).epsilon(1e-12));
  CHECK(corner.actual_drop == doctest::Approx(0.5 - std::sqrt(2.0) / 4.0).epsilon(1e-12));
  CHECK(corner.margin > 0.0);

  const DropBound all = drop_upper_bound_check(d1, sq);
  CHECK(all.vacuous);
  CHECK_THROWS_AS(drop_upper_bound_check(d1, {Site{5, 5}}), InvalidArgument);
}

TEST_CASE("drop upper bound on random pairs against a dense oracle") {
  std::mt19937_64 rng(5);
  int checked = 0;
  for (int k = 0; checked < 20; ++k) {
    const EnvironmentField env = sample_environment(Box::cube(2, -12, 12), 0.7, 300 + k);
    const std::vector<Site> cluster = open_cluster(env, Site{});
    if (cluster.size() < 10 || cluster.size() > 400) continue;
    ++checked;
    const Site c = cluster[rng() % cluster.size()];
    const double r = 1.0 + static_cast<double>(rng() % 3);
    std::vector<Site> d2;
    for (const auto& s : cluster) {
      if (euclidean_distance(s, c, 2) <= r) d2.push_back(s);
    }
    const DropBound b = drop_upper_bound_check(LatticeDomain(cluster, 2), d2);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(reference_matrix(cluster, 2));
    Eigen::Index top = 0;
    const double lambda = es.eigenvalues().maxCoeff(&top);
    const Eigen::VectorXd phi = es.eigenvectors().col(top);
    std::set<Site> window(d2.begin(), d2.end());
    for (const auto& s : d2) {
      for (const auto& y : neighbours(s, 2)) window.insert(y);
    }
    double q = 0.0;
    for (std::size_t i = 0; i < cluster.size(); ++i) {
      if (window.count(cluster[i])) q += phi(static_cast<Eigen::Index>(i)) * phi(static_cast<Eigen::Index>(i));
    }
    q /= phi.squaredNorm();
    std::vector<Site> rest;
    std::set_difference(cluster.begin(), cluster.end(), d2.begin(), d2.end(), std::back_inserter(rest));
    const double drop = lambda - reference_lambda(rest, 2);
    CHECK(b.q == doctest::Approx(q).epsilon(1e-8));
    CHECK(b.actual_drop == doctest::Approx(drop).epsilon(1e-8).scale(1.0));
    CHECK(b.margin >= -1e-9);
  }
}

TEST_CASE("Green's function closed forms and methods") {
  const LatticeDomain single({Site{}}, 2);
  CHECK(greens_function(single, {Site{}}, {Site{}}).at(0, 0) == doctest::Approx(1.0).epsilon(1e-12));

  const LatticeDomain two({Site{0, 0}, Site{1, 0}}, 2);
  for (const auto m : {LinearMethod::kDirect, LinearMethod::kConjugateGradient, LinearMethod::kSeries}) {
    GreenOptions o;
    o.method = m;
    const GreenTable g = greens_function(two, two.sites(), two.sites(), o);
    CHECK(g.at(0, 0) == doctest::Approx(16.0 / 15.0).epsilon(1e-8));
    CHECK(g.at(1, 1) == doctest::Approx(16.0 / 15.0).epsilon(1e-8));
    CHECK(g.at(0, 1) == doctest::Approx(4.0 / 15.0).epsilon(1e-8));
    CHECK(g.max_asymmetry <= 1e-10);
  }

  // dense inverse of I - P on a random cluster
  const EnvironmentField env = sample_environment(Box::cube(2, -10, 10), 0.75, 8);
  const std::vector<Site> cluster = open_cluster(env, Site{});
  REQUIRE(cluster.size() > 20);
  const LatticeDomain dom(cluster, 2);
  const auto n = static_cast<Eigen::Index>(cluster.size());
  const Eigen::MatrixXd inv = (Eigen::MatrixXd::Identity(n, n) - reference_matrix(cluster, 2)).inverse();
  const std::vector<Site> src{cluster[0], cluster[cluster.size() / 2]};
  const GreenTable g = greens_function(dom, src, cluster);
  for (std::size_t i = 0; i < src.size(); ++i) {
    const auto row = static_cast<Eigen::Index>(dom.index_of(src[i]));
    for (std::size_t j = 0; j < cluster.size(); ++j) {
      CHECK(g.at(i, j) == doctest::Approx(inv(row, static_cast<Eigen::Index>(j))).epsilon(1e-8));
      CHECK(g.at(i, j) >= 0.0);
    }
  }
}

TEST_CASE("resolvent identity on random domains") {
  for (int k = 0; k < 5; ++k) {
    const EnvironmentField env = sample_environment(Box::cube(2, -15, 15), 0.8, 40 + k);
    const std::vector<Site> cluster = open_cluster(env, Site{});
    if (cluster.size() < 5) continue;
    const LatticeDomain dom(std::vector<Site>(cluster.begin(), cluster.begin() + std::min<std::size_t>(cluster.size(), 1000)), 2);
    CHECK(resolvent_identity_residual(dom) <= 1e-8);
  }
}

TEST_CASE("capacity of points in d = 3") {
  // 1 / G(0, 0) with Watson's integral G(0, 0) = 1.516386059...
  const double watson = 1.0 / 1.516386059151978;
  const CapacityResult one = capacity({Site{}}, 3);
  CHECK(std::fabs(one.capacity - watson) <= std::max(1e-3, 2.0 * one.truncation_error));
  CHECK(one.box_values.size() == 3);
  for (std::size_t i = 1; i < one.box_values.size(); ++i) CHECK(one.box_values[i] <= one.box_values[i - 1]);

  CapacityOptions small;
  small.margins = {8, 16};
  const CapacityResult pair = capacity({Site{}, Site{20, 0, 0}}, 3, small);
  const CapacityResult single = capacity({Site{}}, 3, small);
  CHECK(pair.capacity == doctest::Approx(2.0 * single.capacity).epsilon(0.05));
  CHECK(pair.capacity <= 2.0 * single.capacity);
  CHECK_THROWS_AS(capacity({Site{}, Site{1, 0}}, 2), InvalidArgument);
}

TEST_CASE("escape probability in d = 2 at small radii") {
  const double a = escape_probability(Site{}, 8.0, 2);
  const double b = escape_probability(Site{}, 16.0, 2);
  CHECK(b < a);
  CHECK(a * std::log(8.0) == doctest::Approx(b * std::log(16.0)).epsilon(0.3));
  // direct solve agrees with conjugate gradient
  CHECK(escape_probability(Site{}, 8.0, 2, LinearMethod::kConjugateGradient) == doctest::Approx(a).epsilon(1e-8));
}

TEST_CASE("Harnack ratio sweep") {
  CHECK(harnack_ratio(2, 10.0, 0.0).ratio == doctest::Approx(1.0).epsilon(1e-12));
  std::vector<HarnackResult> sweep;
  for (const double r2 : {10.0, 20.0, 30.0}) sweep.push_back(harnack_ratio(2, 40.0, r2));
  for (std::size_t i = 1; i < sweep.size(); ++i) CHECK(sweep[i].ratio > sweep[i - 1].ratio);
  for (const auto& h : sweep) CHECK(h.ratio >= 1.0);
  CHECK(fit_harnack_exponent(sweep).slope > 0.0);
  CHECK_THROWS_AS(harnack_ratio(2, 10.0, 12.0), InvalidArgument);
}

TEST_CASE("removal gain of a single central obstacle against a dense solve") {
  const EnvironmentField env = environment_from_obstacles(Box::cube(2, -20, 20), {Site{}});
  const RemovalGain g = removal_gain_check(env, Site{}, 7, 0.25, 0.5);
  CHECK(g.m == 1);
  CHECK(g.core_obstacles == 1);
  const std::vector<Site> ball = euclidean_ball(Site{}, 14.0, 2);
  std::vector<Site> holed;
  std::copy_if(ball.begin(), ball.end(), std::back_inserter(holed), [](const Site& s) { return !(s == Site{}); });
  const double want = reference_lambda(ball, 2) - reference_lambda(holed, 2);
  CHECK(g.gain > 0.0);
  CHECK(g.gain == doctest::Approx(want).epsilon(1e-8));
  CHECK_THROWS_AS(removal_gain_check(all_open_environment(Box::cube(2, -20, 20)), Site{}, 7, 0.25, 0.5),
                  InvalidArgument);
}

TEST_CASE("removal gain grows with the cluster size") {
  const Box box = Box::cube(2, -45, 45);
  std::vector<RemovalGain> fixtures;
  for (const int side : {1, 2, 4}) {
    const EnvironmentField env = environment_from_obstacles(box, square(-side / 2, -side / 2, side));
    fixtures.push_back(removal_gain_check(env, Site{}, 20, 0.25, 0.5));
  }
  CHECK(fixtures[0].m == 1);
  CHECK(fixtures[1].m == 4);
  CHECK(fixtures[2].m == 16);
  CHECK(fixtures[0].gain < fixtures[1].gain);
  CHECK(fixtures[1].gain < fixtures[2].gain);
  CHECK(fit_floor_constant(fixtures) > 0.0);

  // obstacles just inside the sphere of radius (1 - delta) rho
  const double inner = 0.75 * 20.0;
  std::vector<Site> shell;
  box.for_each([&](const Site& s) {
    const double r = euclidean_distance(s, Site{}, 2);
    if (r <= inner && r > inner - 1.0 && s[1] >= 0 && s[0] % 2 == 0) shell.push_back(s);
  });
  REQUIRE(!shell.empty());
  const RemovalGain sph = removal_gain_check(environment_from_obstacles(box, shell), Site{}, 20, 0.25, 0.5);
  CHECK(sph.gain > 0.0);
}

TEST_CASE("low-impact box selection prefers far boxes") {
  // a vacant ball and a far open square inside dense noise
  const Box box = Box::cube(2, -40, 40);
  EnvironmentField env = sample_environment(box, 0.3, 2);
  env = plant_vacant_ball(env, Site{-15, 0}, 14.0);
  env = env.with_removed(square(15, -10, 21));
  const LatticeDomain v = resolve_domain(env, DomainSpec::ball(Site{-15, 0}, 14.0));
  const BoxSelection sel = low_impact_box_selection(env, v, 2, 1.0, 1.0);
  CHECK(sel.anchor[0] > 5);
  CHECK(sel.drop <= 1e-6 * (1.0 - sel.lambda_before));
  CHECK(sel.drop <= sel.bound + 1e-10);
  CHECK(sel.truly_open >= 2);

  // closing at the ball center would cost far more than at the boundary box
  const double center_mass = [&] {
    const SpectralPair p = principal_pair(v);
    double m = 0.0;
    Box::around(Site{-15, 0}, 22, 2).for_each([&](const Site& s) {
      const auto i = v.index_of(s);
      if (i >= 0) m += p.phi1[static_cast<std::size_t>(i)] * p.phi1[static_cast<std::size_t>(i)];
    });
    return m;
  }();
  CHECK(sel.window_mass < center_mass);

  const auto steps = iterated_box_selection(env, v, 2, 1.0, 1.0, 3);
  REQUIRE(steps.size() == 3);
  double total_bound = 0.0;
  for (const auto& s : steps) total_bound += s.bound;
  const double total_drop = steps.front().lambda_before - steps.back().lambda_after;
  CHECK(total_drop <= total_bound + 1e-10);
}

TEST_CASE("isoperimetric fixtures") {
  const IsoResult one = isoperimetric_check(2, 3.0, std::vector<Site>{Site{}});
  CHECK(one.boundary1 == 4);
  CHECK(one.boundary2 == 1);
  CHECK(one.min_interface == 1);
  REQUIRE(one.ratio.has_value());
  CHECK(*one.ratio == doctest::Approx(1.0));

  const std::vector<Site> ball = euclidean_ball(Site{}, 20.0, 2);
  std::vector<Site> half;
  std::copy_if(ball.begin(), ball.end(), std::back_inserter(half), [](const Site& s) { return s[0] < 0; });
  const IsoResult h = isoperimetric_check(2, 20.0, half);
  const auto [b1, b2] = reference_boundaries(ball, std::set<Site>(half.begin(), half.end()), 2);
  CHECK(h.boundary1 == b1);
  CHECK(h.boundary2 == b2);
  CHECK(h.boundary1 == 39);
  CHECK(h.size1 == 608);
  CHECK(*h.ratio == doctest::Approx(39.0 / std::sqrt(608.0)));
  CHECK_THROWS_AS(isoperimetric_check(2, 3.0, std::vector<Site>{Site{9, 9}}), InvalidArgument);
  CHECK_FALSE(isoperimetric_check(2, 3.0, std::vector<Site>{}).ratio.has_value());
}

TEST_CASE("exhaustive isoperimetric constant at R = 2 against brute force") {
  const std::vector<Site> ball = euclidean_ball(Site{}, 2.0, 2);
  REQUIRE(ball.size() == 13);
  double best = std::numeric_limits<double>::infinity();
  for (std::uint32_t mask = 1; mask + 1 < (1u << ball.size()); ++mask) {
    std::set<Site> a1;
    for (std::size_t i = 0; i < ball.size(); ++i) {
      if (mask >> i & 1u) a1.insert(ball[i]);
    }
    const auto [b1, b2] = reference_boundaries(ball, a1, 2);
    const double small = static_cast<double>(std::min(a1.size(), ball.size() - a1.size()));
    best = std::min(best, static_cast<double>(std::min(b1, b2)) / std::sqrt(small));
  }
  const IsoSuiteResult r = isoperimetric_suite("exhaustive", 2, 2.0);
  CHECK(r.cases == (1u << 13) - 2);
  CHECK(r.min_ratio == doctest::Approx(best).epsilon(1e-12));
  CHECK(r.min_ratio == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-9));
  CHECK_THROWS_AS(isoperimetric_suite("exhaustive", 2, 5.0), InvalidArgument);
  for (const char* s : {"halfspace", "annulus", "singleton", "random"}) {
    CHECK(isoperimetric_suite(s, 2, 10.0, 200).min_ratio >= 0.5 * r.min_ratio);
  }
  CHECK_THROWS_AS(isoperimetric_suite("spiral", 2, 5.0), InvalidArgument);
}
