#include "obstacle_walk/lattice.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <sstream>
#include <unordered_set>

#include "obstacle_walk/error.hpp"

namespace obstacle_walk {

namespace {

void check_dim(int d) {
  require(d >= 1 && d <= kMaxDim,
          "lattice dimension must lie in [1, " + std::to_string(kMaxDim) + "], got " +
              std::to_string(d));
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : text) {
    if (c == sep) {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  parts.push_back(cur);
  return parts;
}

std::int32_t parse_int(const std::string& text) {
  std::int32_t value = 0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  while (first < last && *first == ' ') ++first;
  while (last > first && last[-1] == ' ') --last;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last || first == last) {
    throw InvalidArgument("not an integer: '" + text + "'");
  }
  return value;
}

}  // namespace

Site::Site(std::initializer_list<std::int32_t> coords) {
  require(coords.size() <= static_cast<std::size_t>(kMaxDim), "too many coordinates");
  std::copy(coords.begin(), coords.end(), x.begin());
}

Site Site::from_span(std::span<const std::int32_t> coords) {
  require(coords.size() <= static_cast<std::size_t>(kMaxDim), "too many coordinates");
  Site s;
  std::copy(coords.begin(), coords.end(), s.x.begin());
  return s;
}

std::size_t SiteHash::operator()(const Site& s) const noexcept {
  std::uint64_t h = 0x9e3779b97f4a7c15ull;
  for (auto c : s.x) {
    h ^= static_cast<std::uint64_t>(static_cast<std::uint32_t>(c)) + 0x9e3779b97f4a7c15ull + (h << 6) +
         (h >> 2);
  }
  return static_cast<std::size_t>(h);
}

Parity parity_of(const Site& s, int d) {
  std::int64_t sum = 0;
  for (int i = 0; i < d; ++i) sum += s[i];
  return (sum & 1) ? Parity::kOdd : Parity::kEven;
}

Parity flip(Parity p) { return p == Parity::kEven ? Parity::kOdd : Parity::kEven; }

Parity parity_after(Parity start, std::int64_t steps) { return (steps & 1) ? flip(start) : start; }

const char* parity_name(Parity p) { return p == Parity::kEven ? "even" : "odd"; }

std::int64_t l1_distance(const Site& a, const Site& b, int d) {
  std::int64_t sum = 0;
  for (int i = 0; i < d; ++i) sum += std::llabs(std::int64_t{a[i]} - b[i]);
  return sum;
}

std::int64_t linf_distance(const Site& a, const Site& b, int d) {
  std::int64_t m = 0;
  for (int i = 0; i < d; ++i) m = std::max<std::int64_t>(m, std::llabs(std::int64_t{a[i]} - b[i]));
  return m;
}

std::int64_t squared_distance(const Site& a, const Site& b, int d) {
  std::int64_t sum = 0;
  for (int i = 0; i < d; ++i) {
    const std::int64_t diff = std::int64_t{a[i]} - b[i];
    sum += diff * diff;
  }
  return sum;
}

double euclidean_distance(const Site& a, const Site& b, int d) {
  return std::sqrt(static_cast<double>(squared_distance(a, b, d)));
}

std::string format_site(const Site& s, int d) {
  std::string out;
  for (int i = 0; i < d; ++i) {
    if (i) out.push_back(',');
    out += std::to_string(s[i]);
  }
  return out;
}

Site parse_site(const std::string& text, int d) {
  const auto parts = split(text, ',');
  if (static_cast<int>(parts.size()) != d) {
    throw InvalidArgument("expected " + std::to_string(d) + " coordinates in '" + text + "'");
  }
  Site s;
  for (int i = 0; i < d; ++i) s[i] = parse_int(parts[static_cast<std::size_t>(i)]);
  return s;
}

Box::Box(int d, std::span<const std::int32_t> lo, std::span<const std::int32_t> hi) : d_(d) {
  check_dim(d);
  require(static_cast<int>(lo.size()) == d && static_cast<int>(hi.size()) == d,
          "box bounds must have one entry per coordinate");
  for (int i = 0; i < d; ++i) {
    if (hi[static_cast<std::size_t>(i)] < lo[static_cast<std::size_t>(i)]) {
      throw InvalidArgument("degenerate box: hi < lo on coordinate " + std::to_string(i));
    }
    lo_[static_cast<std::size_t>(i)] = lo[static_cast<std::size_t>(i)];
    hi_[static_cast<std::size_t>(i)] = hi[static_cast<std::size_t>(i)];
  }
  volume_ = 1;
  for (int i = d - 1; i >= 0; --i) {
    stride_[static_cast<std::size_t>(i)] = volume_;
    volume_ *= static_cast<std::size_t>(extent(i));
  }
}

Box Box::cube(int d, std::int32_t lo, std::int32_t hi) {
  check_dim(d);
  std::array<std::int32_t, kMaxDim> l{}, h{};
  for (int i = 0; i < d; ++i) {
    l[static_cast<std::size_t>(i)] = lo;
    h[static_cast<std::size_t>(i)] = hi;
  }
  return Box(d, std::span(l.data(), static_cast<std::size_t>(d)),
             std::span(h.data(), static_cast<std::size_t>(d)));
}

Box Box::around(const Site& center, std::int32_t r, int d) {
  check_dim(d);
  require(r >= 0, "box radius must be nonnegative");
  std::array<std::int32_t, kMaxDim> l{}, h{};
  for (int i = 0; i < d; ++i) {
    l[static_cast<std::size_t>(i)] = center[i] - r;
    h[static_cast<std::size_t>(i)] = center[i] + r;
  }
  return Box(d, std::span(l.data(), static_cast<std::size_t>(d)),
             std::span(h.data(), static_cast<std::size_t>(d)));
}

bool Box::contains(const Site& s) const {
  for (int i = 0; i < d_; ++i) {
    if (s[i] < lo(i) || s[i] > hi(i)) return false;
  }
  return true;
}

bool Box::contains(const Box& other) const {
  if (other.empty()) return true;
  for (int i = 0; i < d_; ++i) {
    if (other.lo(i) < lo(i) || other.hi(i) > hi(i)) return false;
  }
  return true;
}

std::size_t Box::linear(const Site& s) const {
  std::size_t idx = 0;
  for (int i = 0; i < d_; ++i) {
    idx += static_cast<std::size_t>(s[i] - lo(i)) * stride_[static_cast<std::size_t>(i)];
  }
  return idx;
}

Site Box::site(std::size_t linear) const {
  Site s;
  for (int i = 0; i < d_; ++i) {
    const auto stride = stride_[static_cast<std::size_t>(i)];
    s[i] = lo(i) + static_cast<std::int32_t>(linear / stride);
    linear %= stride;
  }
  return s;
}

Box Box::intersect(const Box& other) const {
  Box out;
  out.d_ = d_;
  out.volume_ = 1;
  for (int i = 0; i < d_; ++i) {
    out.lo_[static_cast<std::size_t>(i)] = std::max(lo(i), other.lo(i));
    out.hi_[static_cast<std::size_t>(i)] = std::min(hi(i), other.hi(i));
    if (out.hi(i) < out.lo(i)) {
      out.volume_ = 0;
    }
  }
  if (out.volume_ == 0) return out;
  for (int i = d_ - 1; i >= 0; --i) {
    out.stride_[static_cast<std::size_t>(i)] = out.volume_;
    out.volume_ *= static_cast<std::size_t>(out.extent(i));
  }
  return out;
}

bool Box::on_face(const Site& s) const {
  for (int i = 0; i < d_; ++i) {
    if (s[i] == lo(i) || s[i] == hi(i)) return true;
  }
  return false;
}

void Box::for_each(const std::function<void(const Site&)>& fn) const {
  if (volume_ == 0) return;
  Site s;
  for (int i = 0; i < d_; ++i) s[i] = lo(i);
  for (std::size_t n = 0; n < volume_; ++n) {
    fn(s);
    for (int i = d_ - 1; i >= 0; --i) {
      if (s[i] < hi(i)) {
        ++s[i];
        break;
      }
      s[i] = lo(i);
    }
  }
}

std::string Box::describe() const {
  std::string out;
  for (int i = 0; i < d_; ++i) {
    if (i) out.push_back(',');
    out += std::to_string(lo(i)) + ":" + std::to_string(hi(i));
  }
  return out;
}

Box parse_box(const std::string& text, int d) {
  auto parts = split(text, ',');
  if (parts.size() == 1 && d > 1) parts.assign(static_cast<std::size_t>(d), parts.front());
  if (static_cast<int>(parts.size()) != d) {
    throw InvalidArgument("box '" + text + "' needs " + std::to_string(d) + " lo:hi ranges");
  }
  std::array<std::int32_t, kMaxDim> lo{}, hi{};
  for (int i = 0; i < d; ++i) {
    const auto& part = parts[static_cast<std::size_t>(i)];
    // The separator is the first ':' after position 0 so that "-5:5" parses.
    const auto colon = part.find(':', 1);
    if (colon == std::string::npos) throw InvalidArgument("range '" + part + "' is not lo:hi");
    lo[static_cast<std::size_t>(i)] = parse_int(part.substr(0, colon));
    hi[static_cast<std::size_t>(i)] = parse_int(part.substr(colon + 1));
  }
  return Box(d, std::span(lo.data(), static_cast<std::size_t>(d)),
             std::span(hi.data(), static_cast<std::size_t>(d)));
}

BoxMask::BoxMask(const Box& box, bool value)
    : box_(box), words_((box.volume() + 63) / 64, value ? ~std::uint64_t{0} : 0) {
  if (value && box.volume() % 64 != 0) {
    words_.back() = (std::uint64_t{1} << (box.volume() % 64)) - 1;
  }
}

std::size_t BoxMask::count() const {
  std::size_t n = 0;
  for (auto w : words_) n += static_cast<std::size_t>(std::popcount(w));
  return n;
}

std::vector<Site> BoxMask::sites() const {
  std::vector<Site> out;
  out.reserve(count());
  for (std::size_t w = 0; w < words_.size(); ++w) {
    std::uint64_t bits = words_[w];
    while (bits) {
      const int b = std::countr_zero(bits);
      out.push_back(box_.site(w * 64 + static_cast<std::size_t>(b)));
      bits &= bits - 1;
    }
  }
  return out;
}

std::vector<Site> euclidean_ball(const Site& center, double radius, int d) {
  check_dim(d);
  require(radius >= 0.0, "ball radius must be nonnegative");
  const auto r = static_cast<std::int32_t>(std::floor(radius));
  // exact for integer radii; squared distances are integers
  const double r2 = radius * radius;
  std::vector<Site> out;
  Box::around(center, r, d).for_each([&](const Site& s) {
    if (static_cast<double>(squared_distance(s, center, d)) <= r2) out.push_back(s);
  });
  return out;
}

Neighbours neighbours(const Site& s, int d) {
  Neighbours out;
  out.count = static_cast<std::size_t>(2 * d);
  for (int i = 0; i < d; ++i) {
    out.sites[static_cast<std::size_t>(2 * i)] = s;
    out.sites[static_cast<std::size_t>(2 * i)][i] -= 1;
    out.sites[static_cast<std::size_t>(2 * i + 1)] = s;
    out.sites[static_cast<std::size_t>(2 * i + 1)][i] += 1;
  }
  return out;
}

std::vector<Site> outer_boundary(std::span<const Site> sorted_sites, int d) {
  std::vector<Site> out;
  for (const auto& s : sorted_sites) {
    const auto nb = neighbours(s, d);
    for (int k = 0; k < 2 * d; ++k) {
      const auto& y = nb[static_cast<std::size_t>(k)];
      if (!std::binary_search(sorted_sites.begin(), sorted_sites.end(), y)) out.push_back(y);
    }
  }
  normalize_sites(out);
  return out;
}

void normalize_sites(std::vector<Site>& sites) {
  std::sort(sites.begin(), sites.end());
  sites.erase(std::unique(sites.begin(), sites.end()), sites.end());
}

}  // namespace obstacle_walk
