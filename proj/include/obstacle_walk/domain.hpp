#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "obstacle_walk/environment.hpp"
#include "obstacle_walk/lattice.hpp"

namespace obstacle_walk {

/// Finite set of lattice sites with the killed transition operator
/// P|_A v(x) = (1/2d) * sum of v(y) over neighbours y of x inside A.
class LatticeDomain {
 public:
  LatticeDomain() = default;
  /// Sites are sorted and deduplicated.
  LatticeDomain(std::vector<Site> sites, int d);

  int dim() const { return d_; }
  std::size_t size() const { return sites_.size(); }
  bool empty() const { return sites_.empty(); }
  const std::vector<Site>& sites() const { return sites_; }
  const Site& site(std::size_t i) const { return sites_[i]; }
  /// Index of `s`, or -1 when s is not in the domain.
  std::int64_t index_of(const Site& s) const;
  bool contains(const Site& s) const { return index_of(s) >= 0; }
  /// Neighbour k of site i in the order of `neighbours()`; -1 when absent.
  std::int32_t neighbour(std::size_t i, int k) const {
    return table_[i * static_cast<std::size_t>(2 * d_) + static_cast<std::size_t>(k)];
  }
  int degree(std::size_t i) const;
  Parity parity(std::size_t i) const { return parity_of(sites_[i], d_); }
  std::size_t count(Parity p) const;
  /// Bounding box of the sites; empty domains have an empty box.
  const Box& bounds() const { return bounds_; }

  /// out = P|_A in.
  void apply(std::span<const double> in, std::span<double> out) const;

  /// Connected components as sorted index lists, ordered by smallest index.
  std::vector<std::vector<std::int32_t>> components() const;
  LatticeDomain subdomain(std::span<const std::int32_t> indices) const;
  LatticeDomain without(std::span<const Site> removed) const;

  std::vector<double> indicator(std::span<const Site> sites) const;

 private:
  int d_ = 0;
  std::vector<Site> sites_;
  Box bounds_;
  std::vector<std::int32_t> lookup_;  // dense over bounds_, -1 when absent
  std::vector<std::int32_t> table_;
};

/// Q^2 restricted to one parity class, stored as a sparse symmetric matrix.
/// Rows and columns are positions within `members` (domain indices of the
/// class, increasing).
class TwoStepOperator {
 public:
  TwoStepOperator(const LatticeDomain& domain, Parity cls);

  Parity parity() const { return cls_; }
  std::size_t size() const { return members_.size(); }
  const std::vector<std::int32_t>& members() const { return members_; }
  void apply(std::span<const double> in, std::span<double> out) const;
  /// Dense copy, for small-domain oracles.
  std::vector<double> dense() const;

 private:
  Parity cls_;
  std::vector<std::int32_t> members_;
  std::vector<std::size_t> row_start_;
  std::vector<std::int32_t> col_;
  std::vector<double> val_;
};

/// Open sites of the environment box.
LatticeDomain open_domain(const EnvironmentField& env);
/// Open cluster of `site` within the box (empty if `site` is closed).
LatticeDomain open_cluster_domain(const EnvironmentField& env, const Site& site);
/// Open sites of the Euclidean ball B(center, radius) within the box.
LatticeDomain open_ball_domain(const EnvironmentField& env, const Site& center, double radius);
/// Every site of B(center, radius): the vacant discrete ball.
LatticeDomain ball_domain(const Site& center, double radius, int d);
/// Every site of the box.
LatticeDomain box_domain(const Box& box);
/// Connected component of `site` within `domain` (empty if absent).
LatticeDomain component_of(const LatticeDomain& domain, const Site& site);

/// Dense P|_A, row-major, for oracles on small domains.
std::vector<double> dense_operator(const LatticeDomain& domain);

}  // namespace obstacle_walk
