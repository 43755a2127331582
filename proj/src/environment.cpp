#include "obstacle_walk/environment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "obstacle_walk/error.hpp"
#include "obstacle_walk/parallel.hpp"

namespace obstacle_walk {

const char* generator_name(GeneratorTag tag) {
  switch (tag) {
    case GeneratorTag::kIidBernoulli:
      return "iid_bernoulli";
    case GeneratorTag::kPlanted:
      return "planted";
    case GeneratorTag::kLoaded:
      return "loaded";
  }
  return "loaded";
}

GeneratorTag parse_generator(const std::string& name) {
  if (name == "iid_bernoulli") return GeneratorTag::kIidBernoulli;
  if (name == "planted") return GeneratorTag::kPlanted;
  if (name == "loaded") return GeneratorTag::kLoaded;
  throw FormatError("unknown generator tag '" + name + "'");
}

EnvironmentField::EnvironmentField(Box box, BoxMask closed, double p_open, std::uint64_t seed,
                                   GeneratorTag tag, std::vector<PlantedBall> planted)
    : box_(std::move(box)),
      closed_(std::move(closed)),
      p_open_(p_open),
      seed_(seed),
      tag_(tag),
      planted_(std::move(planted)) {
  require(closed_.box() == box_, "obstacle mask must cover exactly the environment box");
}

EnvironmentField EnvironmentField::with_removed(const std::vector<Site>& sites) const {
  EnvironmentField out = *this;
  for (const auto& s : sites) {
    if (box_.contains(s)) out.closed_.set(s, false);
  }
  return out;
}

EnvironmentField EnvironmentField::with_added(const std::vector<Site>& sites) const {
  EnvironmentField out = *this;
  for (const auto& s : sites) {
    if (box_.contains(s)) out.closed_.set(s, true);
  }
  return out;
}

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

double site_uniform(std::uint64_t seed, const Site& s, int d) {
  std::uint64_t h = splitmix64(seed);
  for (int i = 0; i < d; ++i) {
    const auto coord = static_cast<std::uint64_t>(static_cast<std::uint32_t>(s[i]));
    h = splitmix64(h ^ (coord | (static_cast<std::uint64_t>(i) << 32)));
  }
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

EnvironmentField sample_environment(const Box& box, double p_open, std::uint64_t seed) {
  require(box.dim() >= 2, "environments need d >= 2");
  require(p_open > 0.0 && p_open < 1.0, "p_open must lie in (0, 1)");
  BoxMask closed(box);
  const int d = box.dim();
  const std::size_t words = (box.volume() + 63) / 64;
  auto out = closed.words();
  parallel_for(
      words,
      [&](std::size_t begin, std::size_t end) {
        for (std::size_t w = begin; w < end; ++w) {
          std::uint64_t bits = 0;
          const std::size_t last = std::min(box.volume(), (w + 1) * 64);
          for (std::size_t i = w * 64; i < last; ++i) {
            if (site_uniform(seed, box.site(i), d) >= p_open) bits |= std::uint64_t{1} << (i & 63);
          }
          out[w] = bits;
        }
      },
      256);
  return EnvironmentField(box, std::move(closed), p_open, seed, GeneratorTag::kIidBernoulli);
}

EnvironmentField all_open_environment(const Box& box) {
  return EnvironmentField(box, BoxMask(box, false), 1.0, 0, GeneratorTag::kLoaded);
}

EnvironmentField all_closed_environment(const Box& box) {
  return EnvironmentField(box, BoxMask(box, true), 0.0, 0, GeneratorTag::kLoaded);
}

EnvironmentField environment_from_obstacles(const Box& box, const std::vector<Site>& obstacles) {
  BoxMask closed(box);
  for (const auto& s : obstacles) {
    require(box.contains(s), "obstacle " + format_site(s, box.dim()) + " lies outside the box");
    closed.set(s);
  }
  const double volume = static_cast<double>(box.volume());
  const double p = 1.0 - static_cast<double>(closed.count()) / volume;
  return EnvironmentField(box, std::move(closed), p, 0, GeneratorTag::kLoaded);
}

EnvironmentField plant_vacant_ball(const EnvironmentField& env, const Site& center, double radius) {
  const int d = env.dim();
  require(radius >= 0.0, "planted radius must be nonnegative");
  const auto r = static_cast<std::int32_t>(std::floor(radius));
  if (!env.box().contains(Box::around(center, r, d))) {
    throw InvalidArgument("planted ball B(" + format_site(center, d) + ", " + std::to_string(radius) +
                          ") escapes the box " + env.box().describe());
  }
  auto planted = env.planted();
  const PlantedBall ball{center, radius};
  if (std::find(planted.begin(), planted.end(), ball) == planted.end()) planted.push_back(ball);
  BoxMask closed = env.closed();
  for (const auto& s : euclidean_ball(center, radius, d)) closed.set(s, false);
  return EnvironmentField(env.box(), std::move(closed), env.p_open(), env.seed(),
                          GeneratorTag::kPlanted, std::move(planted));
}

std::optional<std::int32_t> ClusterLabeling::largest() const {
  if (sizes.empty()) return std::nullopt;
  const auto it = std::max_element(sizes.begin(), sizes.end());
  return static_cast<std::int32_t>(it - sizes.begin());
}

std::vector<Site> ClusterLabeling::members(std::int32_t id) const {
  std::vector<Site> out;
  for (std::size_t i = 0; i < label.size(); ++i) {
    if (label[i] == id) out.push_back(box.site(i));
  }
  return out;
}

namespace {

struct DisjointSets {
  std::vector<std::int64_t> parent;

  explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }

  std::int64_t find(std::int64_t v) {
    while (parent[static_cast<std::size_t>(v)] != v) {
      auto& p = parent[static_cast<std::size_t>(v)];
      p = parent[static_cast<std::size_t>(p)];
      v = p;
    }
    return v;
  }

  void merge(std::int64_t a, std::int64_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    // the smaller root survives so that roots are first sites in scan order
    if (b < a) std::swap(a, b);
    parent[static_cast<std::size_t>(b)] = a;
  }
};

}  // namespace

ClusterLabeling label_clusters(const EnvironmentField& env) {
  const Box& box = env.box();
  const int d = box.dim();
  const std::size_t n = box.volume();
  DisjointSets sets(n);
  std::vector<std::size_t> stride(static_cast<std::size_t>(d));
  {
    std::size_t s = 1;
    for (int i = d - 1; i >= 0; --i) {
      stride[static_cast<std::size_t>(i)] = s;
      s *= static_cast<std::size_t>(box.extent(i));
    }
  }
  const auto& closed = env.closed();
  Site s;
  for (int i = 0; i < d; ++i) s[i] = box.lo(i);
  for (std::size_t idx = 0; idx < n; ++idx) {
    if (!closed.test(idx)) {
      // merge with the backward neighbour along each axis
      for (int i = 0; i < d; ++i) {
        if (s[i] > box.lo(i)) {
          const std::size_t back = idx - stride[static_cast<std::size_t>(i)];
          if (!closed.test(back)) {
            sets.merge(static_cast<std::int64_t>(idx), static_cast<std::int64_t>(back));
          }
        }
      }
    }
    for (int i = d - 1; i >= 0; --i) {
      if (s[i] < box.hi(i)) {
        ++s[i];
        break;
      }
      s[i] = box.lo(i);
    }
  }

  ClusterLabeling out;
  out.box = box;
  out.label.assign(n, -1);
  std::vector<std::int32_t> root_label(n, -1);
  std::vector<std::uint8_t> face_bits;  // 2 bits per axis: touches lo, touches hi
  for (std::size_t idx = 0; idx < n; ++idx) {
    if (closed.test(idx)) continue;
    const auto root = static_cast<std::size_t>(sets.find(static_cast<std::int64_t>(idx)));
    auto& lab = root_label[root];
    if (lab < 0) {
      lab = static_cast<std::int32_t>(out.sizes.size());
      out.sizes.push_back(0);
      face_bits.push_back(0);
    }
    out.label[idx] = lab;
    ++out.sizes[static_cast<std::size_t>(lab)];
    const Site site = box.site(idx);
    auto& bits = face_bits[static_cast<std::size_t>(lab)];
    for (int i = 0; i < d; ++i) {
      if (site[i] == box.lo(i)) bits |= static_cast<std::uint8_t>(1u << (2 * i));
      if (site[i] == box.hi(i)) bits |= static_cast<std::uint8_t>(2u << (2 * i));
    }
  }
  out.spanning.resize(out.sizes.size());
  for (std::size_t c = 0; c < out.sizes.size(); ++c) {
    bool spans = false;
    for (int i = 0; i < d; ++i) {
      const auto both = static_cast<std::uint8_t>(3u << (2 * i));
      if ((face_bits[c] & both) == both) spans = true;
    }
    out.spanning[c] = spans;
  }
  const Site origin{};
  if (box.contains(origin) && out.label[box.linear(origin)] >= 0) {
    out.origin_cluster = out.label[box.linear(origin)];
  }
  return out;
}

bool spans_from(const ClusterLabeling& labels, const Site& site) {
  const auto id = labels.label_of(site);
  return id >= 0 && labels.spanning[static_cast<std::size_t>(id)];
}

}  // namespace obstacle_walk
