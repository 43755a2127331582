#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "obstacle_walk/env_io.hpp"
#include "obstacle_walk/environment.hpp"
#include "obstacle_walk/error.hpp"

using namespace obstacle_walk;

namespace {

// Plain BFS flood fill over open sites, independent of the union-find labeller.
std::vector<std::vector<Site>> flood_clusters(const EnvironmentField& env) {
  const Box& box = env.box();
  const int d = env.dim();
  std::vector<char> seen(box.volume(), 0);
  std::vector<std::vector<Site>> out;
  for (std::size_t i = 0; i < box.volume(); ++i) {
    const Site s = box.site(i);
    if (seen[i] || !env.is_open(s)) continue;
    std::vector<Site> members{s}, queue{s};
    seen[i] = 1;
    while (!queue.empty()) {
      const Site x = queue.back();
      queue.pop_back();
      for (int k = 0; k < d; ++k) {
        for (const int step : {-1, 1}) {
          Site y = x;
          y[k] += step;
          if (!env.is_open(y) || seen[box.linear(y)]) continue;
          seen[box.linear(y)] = 1;
          members.push_back(y);
          queue.push_back(y);
        }
      }
    }
    out.push_back(std::move(members));
  }
  return out;
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("obstacle_walk_test_" + name);
}

}  // namespace

TEST_CASE("site parsing and distances") {
  const Site a = parse_site("3,-4", 2);
  CHECK(a[0] == 3);
  CHECK(a[1] == -4);
  CHECK(format_site(a, 2) == "3,-4");
  CHECK(l1_distance(a, Site{}, 2) == 7);
  CHECK(linf_distance(a, Site{}, 2) == 4);
  CHECK(squared_distance(a, Site{}, 2) == 25);
  CHECK(euclidean_distance(a, Site{}, 2) == doctest::Approx(5.0));
  CHECK_THROWS_AS(parse_site("1,2,3", 2), InvalidArgument);
  CHECK_THROWS_AS(parse_site("1,x", 2), InvalidArgument);
  CHECK(parity_of(a, 2) == Parity::kOdd);
  CHECK(parity_after(Parity::kEven, 3) == Parity::kOdd);
}

TEST_CASE("box indexing is a bijection") {
  const Box box = parse_box("-2:3,0:4,-1:1", 3);
  CHECK(box.volume() == 6 * 5 * 3);
  std::set<std::size_t> seen;
  box.for_each([&](const Site& s) {
    CHECK(box.contains(s));
    CHECK(box.site(box.linear(s)) == s);
    seen.insert(box.linear(s));
  });
  CHECK(seen.size() == box.volume());
  CHECK(*seen.rbegin() == box.volume() - 1);
}

TEST_CASE("euclidean ball enumeration") {
  // direct enumeration of {x : |x|^2 <= r^2}
  auto count = [](int d, int r) {
    std::size_t n = 0;
    const int side = 2 * r + 1;
    const int total = static_cast<int>(std::pow(side, d));
    for (int code = 0; code < total; ++code) {
      int c = code, sq = 0;
      for (int i = 0; i < d; ++i) {
        const int x = c % side - r;
        c /= side;
        sq += x * x;
      }
      n += sq <= r * r;
    }
    return n;
  };
  CHECK(euclidean_ball(Site{}, 0.0, 2).size() == 1);
  CHECK(euclidean_ball(Site{}, 1.0, 2).size() == 5);
  CHECK(euclidean_ball(Site{}, 3.0, 2).size() == 29);
  for (const int d : {2, 3, 4}) {
    for (const int r : {1, 2, 4}) CHECK(euclidean_ball(Site{}, r, d).size() == count(d, r));
  }
  // subset of the enclosing l-infinity box
  for (const auto& s : euclidean_ball(Site{5, -2, 1}, 3.5, 3)) {
    CHECK(linf_distance(s, Site{5, -2, 1}, 3) <= 4);
  }
}

TEST_CASE("neighbours hold exactly 2d sites") {
  for (const int d : {2, 3, 4}) {
    const auto nb = neighbours(Site{1, 2, 3, 4}, d);
    CHECK(nb.size() == static_cast<std::size_t>(2 * d));
    for (const auto& y : nb) CHECK(l1_distance(y, Site{1, 2, 3, 4}, d) == 1);
  }
}

TEST_CASE("outer boundary of a singleton and a segment") {
  const std::vector<Site> one{Site{}};
  CHECK(outer_boundary(one, 2).size() == 4);
  std::vector<Site> seg{Site{0, 0}, Site{1, 0}, Site{2, 0}};
  CHECK(outer_boundary(seg, 2).size() == 8);
}

TEST_CASE("sampling limits p -> 1 and p -> 0") {
  const Box box = Box::cube(2, -1, 1);
  CHECK(sample_environment(box, 1.0 - 1e-15, 7).closed_count() == 0);
  CHECK(sample_environment(box, 1e-15, 7).closed_count() == 9);
  CHECK_THROWS_AS(sample_environment(box, 1.0, 7), InvalidArgument);
  CHECK_THROWS_AS(sample_environment(box, 0.0, 7), InvalidArgument);
}

TEST_CASE("obstacle density concentrates at 1 - p") {
  const EnvironmentField env = sample_environment(Box::cube(2, 0, 999), 0.7, 42);
  const double frac = static_cast<double>(env.closed_count()) / 1e6;
  const double sigma = std::sqrt(0.3 * 0.7 / 1e6);
  CHECK(std::fabs(frac - 0.3) <= 3.0 * sigma);
}

TEST_CASE("site bits are a pure function of seed and site") {
  const EnvironmentField big = sample_environment(Box::cube(2, -20, 20), 0.6, 11);
  const EnvironmentField small = sample_environment(Box::cube(2, -5, 7), 0.6, 11);
  small.box().for_each([&](const Site& s) { CHECK(big.is_closed(s) == small.is_closed(s)); });
  const EnvironmentField other = sample_environment(Box::cube(2, -20, 20), 0.6, 12);
  CHECK_FALSE(other == big);
  for (std::size_t i = 0; i < 200; ++i) {
    const Site s{static_cast<std::int32_t>(i % 17), static_cast<std::int32_t>(i / 17)};
    const double u = site_uniform(11, s, 2);
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    CHECK(big.is_closed(s) == (u >= 0.6));
  }
}

TEST_CASE("planting a vacant ball") {
  const Box box = Box::cube(2, -10, 10);
  const EnvironmentField closed = all_closed_environment(box);
  const EnvironmentField planted = plant_vacant_ball(closed, Site{}, 3.0);
  std::size_t open = 0;
  box.for_each([&](const Site& s) {
    const bool inside = s[0] * s[0] + s[1] * s[1] <= 9;
    CHECK(planted.is_open(s) == inside);
    open += planted.is_open(s);
  });
  CHECK(open == 29);
  CHECK(planted.tag() == GeneratorTag::kPlanted);
  CHECK(planted.planted().size() == 1);

  const EnvironmentField free = all_open_environment(box);
  const EnvironmentField same = plant_vacant_ball(free, Site{2, 2}, 4.0);
  CHECK(same.closed() == free.closed());

  const EnvironmentField one = environment_from_obstacles(box, {Site{}});
  CHECK(plant_vacant_ball(one, Site{}, 0.0).closed_count() == 0);
  CHECK_THROWS_AS(plant_vacant_ball(free, Site{9, 0}, 3.0), InvalidArgument);
}

TEST_CASE("cluster labelling basics") {
  const ClusterLabeling all = label_clusters(all_open_environment(Box::cube(2, 0, 4)));
  REQUIRE(all.cluster_count() == 1);
  CHECK(all.sizes[0] == 25);
  CHECK(all.spanning[0]);
  CHECK(all.origin_cluster == std::optional<std::int32_t>(0));

  std::vector<Site> black;
  Box::cube(2, 0, 5).for_each([&](const Site& s) {
    if ((s[0] + s[1]) % 2 == 0) black.push_back(s);
  });
  const ClusterLabeling checker = label_clusters(environment_from_obstacles(Box::cube(2, 0, 5), black));
  CHECK(checker.cluster_count() == 18);
  for (const auto size : checker.sizes) CHECK(size == 1);
  CHECK_FALSE(checker.origin_cluster.has_value());
}

TEST_CASE("cluster labelling agrees with a flood fill") {
  for (const std::uint64_t seed : {1u, 2u, 3u}) {
    for (const int d : {2, 3}) {
      const EnvironmentField env = sample_environment(Box::cube(d, 0, d == 2 ? 60 : 14), 0.6, seed);
      const ClusterLabeling lab = label_clusters(env);
      const auto oracle = flood_clusters(env);
      REQUIRE(lab.cluster_count() == oracle.size());
      std::multiset<std::size_t> a(lab.sizes.begin(), lab.sizes.end()), b;
      for (const auto& c : oracle) {
        b.insert(c.size());
        const std::int32_t id = lab.label_of(c.front());
        for (const auto& s : c) CHECK(lab.label_of(s) == id);
      }
      CHECK(a == b);
    }
  }
}

TEST_CASE("supercritical largest cluster spans with the expected density") {
  const EnvironmentField env = sample_environment(Box::cube(2, 0, 199), 0.8, 1);
  const ClusterLabeling lab = label_clusters(env);
  const auto id = lab.largest();
  REQUIRE(id.has_value());
  CHECK(lab.spanning[static_cast<std::size_t>(*id)]);
  const double density = static_cast<double>(lab.sizes[static_cast<std::size_t>(*id)]) / 40000.0;
  // independent estimate: flood fill largest-cluster fraction over fresh seeds
  double oracle = 0.0;
  for (std::uint64_t s = 100; s < 105; ++s) {
    const auto clusters = flood_clusters(sample_environment(Box::cube(2, 0, 199), 0.8, s));
    std::size_t best = 0;
    for (const auto& c : clusters) best = std::max(best, c.size());
    oracle += static_cast<double>(best) / 40000.0 / 5.0;
  }
  CHECK(std::fabs(density - oracle) < 0.05);
  CHECK(spans_from(lab, lab.members(*id).front()));
}

TEST_CASE("environment file round trip") {
  EnvironmentField env = sample_environment(Box::cube(3, -6, 7), 0.55, 99);
  env = plant_vacant_ball(env, Site{1, 1, 1}, 2.5);
  const std::string bytes = serialize_environment(env);
  CHECK(deserialize_environment(bytes) == env);
  const auto path = temp_file("roundtrip.env");
  save_environment(env, path.string());
  CHECK(load_environment(path.string()) == env);
  std::filesystem::remove(path);
}

TEST_CASE("corrupted environment files are rejected") {
  const EnvironmentField env = sample_environment(Box::cube(2, 0, 30), 0.5, 5);
  std::string bytes = serialize_environment(env);
  std::string flipped = bytes;
  flipped[flipped.size() - 3] ^= 0x10;
  CHECK_THROWS_AS(deserialize_environment(flipped), FormatError);
  CHECK_THROWS_AS(deserialize_environment(bytes.substr(0, bytes.size() - 5)), FormatError);
  CHECK_THROWS_AS(deserialize_environment("not an environment"), FormatError);
  CHECK_THROWS_AS(load_environment(temp_file("does_not_exist.env").string()), std::exception);
}

TEST_CASE("fnv1a64 reference vectors") {
  auto h = [](const std::string& s) {
    return fnv1a64({reinterpret_cast<const std::uint8_t*>(s.data()), s.size()});
  };
  CHECK(h("") == 0xcbf29ce484222325ull);
  CHECK(h("a") == 0xaf63dc4c8601ec8cull);
  CHECK(h("foobar") == 0x85944171f73967e8ull);
}

TEST_CASE("surgery helpers on environments") {
  const Box box = Box::cube(2, 0, 4);
  const EnvironmentField env = environment_from_obstacles(box, {Site{1, 1}, Site{2, 2}});
  CHECK(env.with_removed({Site{1, 1}}).closed_count() == 1);
  CHECK(env.with_added({Site{0, 0}, Site{1, 1}}).closed_count() == 3);
  CHECK(env.open_count() == 23);
}
