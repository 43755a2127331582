#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace obstacle_walk {

/// Largest lattice dimension supported by the site-level code paths.
inline constexpr int kMaxDim = 4;

/// A point of Z^d. Coordinates beyond the working dimension are kept at zero,
/// so equality and ordering never depend on the dimension tag.
struct Site {
  std::array<std::int32_t, kMaxDim> x{};

  Site() = default;
  Site(std::initializer_list<std::int32_t> coords);
  static Site from_span(std::span<const std::int32_t> coords);

  std::int32_t& operator[](int i) { return x[static_cast<std::size_t>(i)]; }
  std::int32_t operator[](int i) const { return x[static_cast<std::size_t>(i)]; }

  auto operator<=>(const Site&) const = default;
  bool operator==(const Site&) const = default;
};

struct SiteHash {
  std::size_t operator()(const Site& s) const noexcept;
};

enum class Parity : std::uint8_t { kEven = 0, kOdd = 1 };

Parity parity_of(const Site& s, int d);
Parity flip(Parity p);
Parity parity_after(Parity start, std::int64_t steps);
const char* parity_name(Parity p);

std::int64_t l1_distance(const Site& a, const Site& b, int d);
std::int64_t linf_distance(const Site& a, const Site& b, int d);
std::int64_t squared_distance(const Site& a, const Site& b, int d);
double euclidean_distance(const Site& a, const Site& b, int d);

std::string format_site(const Site& s, int d);
Site parse_site(const std::string& text, int d);

/// Axis-aligned box with inclusive bounds on every coordinate.
/// Linear indices are row-major: the last coordinate varies fastest.
class Box {
 public:
  Box() = default;
  Box(int d, std::span<const std::int32_t> lo, std::span<const std::int32_t> hi);
  /// Same bounds [lo, hi] on every coordinate.
  static Box cube(int d, std::int32_t lo, std::int32_t hi);
  /// K(center, r) = {x : |x - center|_inf <= r}.
  static Box around(const Site& center, std::int32_t r, int d);

  int dim() const { return d_; }
  std::int32_t lo(int i) const { return lo_[static_cast<std::size_t>(i)]; }
  std::int32_t hi(int i) const { return hi_[static_cast<std::size_t>(i)]; }
  std::int64_t extent(int i) const { return std::int64_t{hi(i)} - lo(i) + 1; }
  std::size_t volume() const { return volume_; }

  bool contains(const Site& s) const;
  bool contains(const Box& other) const;
  std::size_t linear(const Site& s) const;
  Site site(std::size_t linear) const;
  Box intersect(const Box& other) const;
  bool empty() const { return volume_ == 0; }

  /// True when `s` lies on the face x_i = lo_i or x_i = hi_i for some i.
  bool on_face(const Site& s) const;

  /// Calls fn(site) for every site in row-major order.
  void for_each(const std::function<void(const Site&)>& fn) const;

  std::string describe() const;

  bool operator==(const Box&) const = default;

 private:
  int d_ = 0;
  std::array<std::int32_t, kMaxDim> lo_{};
  std::array<std::int32_t, kMaxDim> hi_{};
  std::array<std::size_t, kMaxDim> stride_{};
  std::size_t volume_ = 0;
};

Box parse_box(const std::string& text, int d);

/// Dense bitset indexed by the linear index of a box.
class BoxMask {
 public:
  BoxMask() = default;
  explicit BoxMask(const Box& box, bool value = false);

  const Box& box() const { return box_; }
  bool test(std::size_t i) const { return (words_[i >> 6] >> (i & 63)) & 1u; }
  void set(std::size_t i, bool v = true) {
    const std::uint64_t bit = std::uint64_t{1} << (i & 63);
    if (v) {
      words_[i >> 6] |= bit;
    } else {
      words_[i >> 6] &= ~bit;
    }
  }
  bool test(const Site& s) const { return box_.contains(s) && test(box_.linear(s)); }
  void set(const Site& s, bool v = true) { set(box_.linear(s), v); }

  std::size_t count() const;
  std::vector<Site> sites() const;
  std::span<const std::uint64_t> words() const { return words_; }
  std::span<std::uint64_t> words() { return words_; }

  bool operator==(const BoxMask&) const = default;

 private:
  Box box_;
  std::vector<std::uint64_t> words_;
};

/// {x in Z^d : |x - center|_2 <= radius}, lexicographically sorted.
std::vector<Site> euclidean_ball(const Site& center, double radius, int d);

/// The 2d lattice neighbours at l1-distance 1, ordered (-e_0, +e_0, -e_1, +e_1, ...).
struct Neighbours {
  std::array<Site, 2 * kMaxDim> sites{};
  std::size_t count = 0;

  const Site& operator[](std::size_t k) const { return sites[k]; }
  const Site* begin() const { return sites.data(); }
  const Site* end() const { return sites.data() + count; }
  std::size_t size() const { return count; }
};

Neighbours neighbours(const Site& s, int d);

/// Outer vertex boundary {x not in A : |x - y|_1 = 1 for some y in A}.
std::vector<Site> outer_boundary(std::span<const Site> sorted_sites, int d);

/// Sorts and removes duplicates.
void normalize_sites(std::vector<Site>& sites);

}  // namespace obstacle_walk
