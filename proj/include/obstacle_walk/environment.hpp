#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "obstacle_walk/lattice.hpp"

namespace obstacle_walk {

enum class GeneratorTag : std::uint8_t { kIidBernoulli = 0, kPlanted = 1, kLoaded = 2 };

const char* generator_name(GeneratorTag tag);
GeneratorTag parse_generator(const std::string& name);

struct PlantedBall {
  Site center;
  double radius = 0.0;
  bool operator==(const PlantedBall&) const = default;
};

/// Obstacle configuration on a finite box of Z^d. Sites outside the box are
/// not described by the field; callers treat them as outside the working
/// region (mass reaching them is reported as box truncation).
class EnvironmentField {
 public:
  EnvironmentField() = default;
  EnvironmentField(Box box, BoxMask closed, double p_open, std::uint64_t seed, GeneratorTag tag,
                   std::vector<PlantedBall> planted = {});

  int dim() const { return box_.dim(); }
  const Box& box() const { return box_; }
  const BoxMask& closed() const { return closed_; }
  double p_open() const { return p_open_; }
  std::uint64_t seed() const { return seed_; }
  GeneratorTag tag() const { return tag_; }
  const std::vector<PlantedBall>& planted() const { return planted_; }

  bool in_box(const Site& s) const { return box_.contains(s); }
  bool is_closed(const Site& s) const { return closed_.test(s); }
  /// Inside the box and free of obstacles.
  bool is_open(const Site& s) const { return box_.contains(s) && !closed_.test(box_.linear(s)); }
  std::size_t closed_count() const { return closed_.count(); }
  std::size_t open_count() const { return box_.volume() - closed_count(); }
  std::vector<Site> obstacle_sites() const { return closed_.sites(); }

  /// Copies with modified obstacle sets; sites outside the box are ignored.
  EnvironmentField with_removed(const std::vector<Site>& sites) const;
  EnvironmentField with_added(const std::vector<Site>& sites) const;

  bool operator==(const EnvironmentField&) const = default;

 private:
  Box box_;
  BoxMask closed_;
  double p_open_ = 1.0;
  std::uint64_t seed_ = 0;
  GeneratorTag tag_ = GeneratorTag::kLoaded;
  std::vector<PlantedBall> planted_;
};

/// Counter-based site draw: a pure function of (seed, site) returning a
/// uniform double in [0, 1). A site is closed iff its draw is >= p_open.
double site_uniform(std::uint64_t seed, const Site& s, int d);
std::uint64_t splitmix64(std::uint64_t z);

EnvironmentField sample_environment(const Box& box, double p_open, std::uint64_t seed);

EnvironmentField all_open_environment(const Box& box);
EnvironmentField all_closed_environment(const Box& box);
EnvironmentField environment_from_obstacles(const Box& box, const std::vector<Site>& obstacles);

/// Removes all obstacles in B(center, radius) and records the planted ball.
/// Throws InvalidArgument when the ball is not contained in the box.
EnvironmentField plant_vacant_ball(const EnvironmentField& env, const Site& center, double radius);

struct ClusterLabeling {
  Box box;
  /// Cluster id per linear box index; -1 on closed sites.
  std::vector<std::int32_t> label;
  std::vector<std::size_t> sizes;
  std::vector<bool> spanning;
  std::optional<std::int32_t> origin_cluster;

  std::int32_t label_of(const Site& s) const {
    return box.contains(s) ? label[box.linear(s)] : -1;
  }
  std::size_t cluster_count() const { return sizes.size(); }
  /// Largest cluster, smallest id on ties; nullopt when every site is closed.
  std::optional<std::int32_t> largest() const;
  std::vector<Site> members(std::int32_t id) const;
};

/// Nearest-neighbour open clusters. Ids follow the row-major order of each
/// cluster's first site.
ClusterLabeling label_clusters(const EnvironmentField& env);

/// Finite-box surrogate for "origin in the infinite cluster": the cluster of
/// `site` exists and touches two opposite faces of the box.
bool spans_from(const ClusterLabeling& labels, const Site& site);

}  // namespace obstacle_walk
