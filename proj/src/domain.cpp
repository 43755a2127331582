#include "obstacle_walk/domain.hpp"

#include <algorithm>
#include <deque>

#include "obstacle_walk/error.hpp"
#include "obstacle_walk/parallel.hpp"

namespace obstacle_walk {

namespace {

constexpr std::size_t kMaxLookup = std::size_t{1} << 28;

}  // namespace

LatticeDomain::LatticeDomain(std::vector<Site> sites, int d) : d_(d), sites_(std::move(sites)) {
  require(d >= 1 && d <= kMaxDim, "dimension out of range");
  normalize_sites(sites_);
  require(sites_.size() < static_cast<std::size_t>(INT32_MAX), "domain too large");
  if (sites_.empty()) return;
  std::array<std::int32_t, kMaxDim> lo{};
  std::array<std::int32_t, kMaxDim> hi{};
  for (int i = 0; i < d; ++i) {
    lo[static_cast<std::size_t>(i)] = hi[static_cast<std::size_t>(i)] = sites_.front()[i];
  }
  for (const auto& s : sites_) {
    for (int i = 0; i < d; ++i) {
      auto k = static_cast<std::size_t>(i);
      lo[k] = std::min(lo[k], s[i]);
      hi[k] = std::max(hi[k], s[i]);
    }
  }
  bounds_ = Box(d, std::span(lo.data(), static_cast<std::size_t>(d)),
                std::span(hi.data(), static_cast<std::size_t>(d)));
  require(bounds_.volume() <= kMaxLookup, "domain bounding box too large for dense lookup");
  lookup_.assign(bounds_.volume(), -1);
  for (std::size_t i = 0; i < sites_.size(); ++i) {
    lookup_[bounds_.linear(sites_[i])] = static_cast<std::int32_t>(i);
  }
  const auto width = static_cast<std::size_t>(2 * d);
  table_.assign(sites_.size() * width, -1);
  for (std::size_t i = 0; i < sites_.size(); ++i) {
    const auto nb = neighbours(sites_[i], d);
    for (std::size_t k = 0; k < width; ++k) {
      table_[i * width + k] = static_cast<std::int32_t>(index_of(nb[k]));
    }
  }
}

std::int64_t LatticeDomain::index_of(const Site& s) const {
  if (sites_.empty() || !bounds_.contains(s)) return -1;
  return lookup_[bounds_.linear(s)];
}

int LatticeDomain::degree(std::size_t i) const {
  int n = 0;
  for (int k = 0; k < 2 * d_; ++k) n += neighbour(i, k) >= 0;
  return n;
}

std::size_t LatticeDomain::count(Parity p) const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < sites_.size(); ++i) n += parity(i) == p;
  return n;
}

void LatticeDomain::apply(std::span<const double> in, std::span<double> out) const {
  require(in.size() == size() && out.size() == size(), "vector length does not match the domain");
  const double w = 1.0 / (2.0 * d_);
  const auto width = static_cast<std::size_t>(2 * d_);
  parallel_for(size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const std::int32_t* row = &table_[i * width];
      double acc = 0.0;
      for (std::size_t k = 0; k < width; ++k) {
        if (row[k] >= 0) acc += in[static_cast<std::size_t>(row[k])];
      }
      out[i] = w * acc;
    }
  });
}

std::vector<std::vector<std::int32_t>> LatticeDomain::components() const {
  std::vector<std::vector<std::int32_t>> out;
  std::vector<bool> seen(size(), false);
  std::deque<std::int32_t> queue;
  for (std::size_t root = 0; root < size(); ++root) {
    if (seen[root]) continue;
    std::vector<std::int32_t> comp;
    seen[root] = true;
    queue.push_back(static_cast<std::int32_t>(root));
    while (!queue.empty()) {
      const auto v = queue.front();
      queue.pop_front();
      comp.push_back(v);
      for (int k = 0; k < 2 * d_; ++k) {
        const auto w = neighbour(static_cast<std::size_t>(v), k);
        if (w >= 0 && !seen[static_cast<std::size_t>(w)]) {
          seen[static_cast<std::size_t>(w)] = true;
          queue.push_back(w);
        }
      }
    }
    std::sort(comp.begin(), comp.end());
    out.push_back(std::move(comp));
  }
  return out;
}

LatticeDomain LatticeDomain::subdomain(std::span<const std::int32_t> indices) const {
  std::vector<Site> sites;
  sites.reserve(indices.size());
  for (const auto i : indices) sites.push_back(sites_[static_cast<std::size_t>(i)]);
  return LatticeDomain(std::move(sites), d_);
}

LatticeDomain LatticeDomain::without(std::span<const Site> removed) const {
  std::vector<bool> drop(size(), false);
  for (const auto& s : removed) {
    const auto i = index_of(s);
    if (i >= 0) drop[static_cast<std::size_t>(i)] = true;
  }
  std::vector<Site> sites;
  for (std::size_t i = 0; i < size(); ++i) {
    if (!drop[i]) sites.push_back(sites_[i]);
  }
  return LatticeDomain(std::move(sites), d_);
}

std::vector<double> LatticeDomain::indicator(std::span<const Site> sites) const {
  std::vector<double> v(size(), 0.0);
  for (const auto& s : sites) {
    const auto i = index_of(s);
    if (i >= 0) v[static_cast<std::size_t>(i)] = 1.0;
  }
  return v;
}

TwoStepOperator::TwoStepOperator(const LatticeDomain& domain, Parity cls) : cls_(cls) {
  const std::size_t n = domain.size();
  const int width = 2 * domain.dim();
  std::vector<std::int32_t> position(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    if (domain.parity(i) == cls) {
      position[i] = static_cast<std::int32_t>(members_.size());
      members_.push_back(static_cast<std::int32_t>(i));
    }
  }
  const double w = 1.0 / (2.0 * domain.dim());
  const double w2 = w * w;
  row_start_.reserve(members_.size() + 1);
  row_start_.push_back(0);
  std::vector<std::int32_t> cols;
  for (const auto x : members_) {
    cols.clear();
    for (int a = 0; a < width; ++a) {
      const auto y = domain.neighbour(static_cast<std::size_t>(x), a);
      if (y < 0) continue;
      for (int b = 0; b < width; ++b) {
        const auto z = domain.neighbour(static_cast<std::size_t>(y), b);
        if (z >= 0) cols.push_back(position[static_cast<std::size_t>(z)]);
      }
    }
    std::sort(cols.begin(), cols.end());
    for (std::size_t k = 0; k < cols.size();) {
      std::size_t e = k;
      while (e < cols.size() && cols[e] == cols[k]) ++e;
      col_.push_back(cols[k]);
      val_.push_back(w2 * static_cast<double>(e - k));
      k = e;
    }
    row_start_.push_back(col_.size());
  }
}

void TwoStepOperator::apply(std::span<const double> in, std::span<double> out) const {
  require(in.size() == size() && out.size() == size(), "vector length does not match the operator");
  parallel_for(size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t r = begin; r < end; ++r) {
      double acc = 0.0;
      for (std::size_t k = row_start_[r]; k < row_start_[r + 1]; ++k) {
        acc += val_[k] * in[static_cast<std::size_t>(col_[k])];
      }
      out[r] = acc;
    }
  });
}

std::vector<double> TwoStepOperator::dense() const {
  const std::size_t n = size();
  std::vector<double> m(n * n, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t k = row_start_[r]; k < row_start_[r + 1]; ++k) {
      m[r * n + static_cast<std::size_t>(col_[k])] = val_[k];
    }
  }
  return m;
}

LatticeDomain open_domain(const EnvironmentField& env) {
  std::vector<Site> sites;
  sites.reserve(env.open_count());
  const auto& closed = env.closed();
  for (std::size_t i = 0; i < env.box().volume(); ++i) {
    if (!closed.test(i)) sites.push_back(env.box().site(i));
  }
  return LatticeDomain(std::move(sites), env.dim());
}

LatticeDomain open_cluster_domain(const EnvironmentField& env, const Site& site) {
  const int d = env.dim();
  if (!env.is_open(site)) return LatticeDomain({}, d);
  std::vector<Site> sites;
  BoxMask seen(env.box());
  std::deque<Site> queue{site};
  seen.set(site);
  while (!queue.empty()) {
    const Site s = queue.front();
    queue.pop_front();
    sites.push_back(s);
    const auto nb = neighbours(s, d);
    for (int k = 0; k < 2 * d; ++k) {
      const Site& t = nb[static_cast<std::size_t>(k)];
      if (env.is_open(t) && !seen.test(t)) {
        seen.set(t);
        queue.push_back(t);
      }
    }
  }
  return LatticeDomain(std::move(sites), d);
}

LatticeDomain open_ball_domain(const EnvironmentField& env, const Site& center, double radius) {
  std::vector<Site> sites;
  for (const auto& s : euclidean_ball(center, radius, env.dim())) {
    if (env.is_open(s)) sites.push_back(s);
  }
  return LatticeDomain(std::move(sites), env.dim());
}

LatticeDomain ball_domain(const Site& center, double radius, int d) {
  return LatticeDomain(euclidean_ball(center, radius, d), d);
}

LatticeDomain box_domain(const Box& box) {
  std::vector<Site> sites;
  sites.reserve(box.volume());
  box.for_each([&](const Site& s) { sites.push_back(s); });
  return LatticeDomain(std::move(sites), box.dim());
}

LatticeDomain component_of(const LatticeDomain& domain, const Site& site) {
  const auto start = domain.index_of(site);
  if (start < 0) return LatticeDomain({}, domain.dim());
  std::vector<bool> seen(domain.size(), false);
  std::vector<std::int32_t> members;
  std::deque<std::int32_t> queue{static_cast<std::int32_t>(start)};
  seen[static_cast<std::size_t>(start)] = true;
  while (!queue.empty()) {
    const auto v = queue.front();
    queue.pop_front();
    members.push_back(v);
    for (int k = 0; k < 2 * domain.dim(); ++k) {
      const auto w = domain.neighbour(static_cast<std::size_t>(v), k);
      if (w >= 0 && !seen[static_cast<std::size_t>(w)]) {
        seen[static_cast<std::size_t>(w)] = true;
        queue.push_back(w);
      }
    }
  }
  std::sort(members.begin(), members.end());
  return domain.subdomain(members);
}

std::vector<double> dense_operator(const LatticeDomain& domain) {
  const std::size_t n = domain.size();
  const double w = 1.0 / (2.0 * domain.dim());
  std::vector<double> m(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (int k = 0; k < 2 * domain.dim(); ++k) {
      const auto j = domain.neighbour(i, k);
      if (j >= 0) m[i * n + static_cast<std::size_t>(j)] += w;
    }
  }
  return m;
}

}  // namespace obstacle_walk
