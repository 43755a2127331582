#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "obstacle_walk/environment.hpp"
#include "obstacle_walk/lattice.hpp"

namespace obstacle_walk {

/// Tiles K(a, s) with anchors a in (2s+1)Z^d. Only tiles lying entirely
/// inside the environment box are considered.
struct CoarseGrid {
  std::int32_t tile_radius = 0;
  std::vector<Site> anchors;
  /// Obstacle fraction per anchor.
  std::vector<double> density;
};

CoarseGrid coarse_grid(const EnvironmentField& env, std::int32_t tile_radius);

/// Anchors in (2s+1)Z^d whose tile K(a, s) lies inside the box.
std::vector<Site> tile_anchors(const Box& box, std::int32_t tile_radius);

struct LowDensityRegion {
  double epsilon = 0.0;
  std::int32_t tile_radius = 0;
  /// Anchors of the selected tiles, sorted.
  std::vector<Site> anchors;
  /// Union of the selected tiles as a mask over the environment box.
  BoxMask mask;
  std::size_t volume() const { return mask.count(); }
};

/// Union of tiles K(a, floor(eps rho)) meeting `region` (open sites of the
/// box when empty) with at most eps |K| obstacles.
LowDensityRegion low_density_region(const EnvironmentField& env, double epsilon, std::int64_t rho,
                                    const BoxMask* region = nullptr);

struct TrulyOpenBox {
  Site anchor;
  double stay_probability = 0.0;
  bool truly_open = false;
  /// Stay probability within 0.01 of the 1/10 threshold.
  bool near_threshold = false;
};

inline constexpr double kTrulyOpenThreshold = 0.1;

/// max over u in K(x, ell) of P^u(S_[0, ell^2] stays in K(x, 4 ell) \ O),
/// with sites outside the environment box treated as closed.
double stay_probability(const EnvironmentField& env, const Site& anchor, std::int32_t ell);
/// Per-start stay probabilities over K(x, ell) in row-major order.
std::vector<double> stay_probabilities(const EnvironmentField& env, const Site& anchor,
                                       std::int32_t ell);

/// Classifies every ell-tile inside the box (or only `anchors` if given).
std::vector<TrulyOpenBox> detect_truly_open(const EnvironmentField& env, std::int32_t ell,
                                            const std::vector<Site>* anchors = nullptr);

/// |B(c, rho) symmetric-difference E|.
std::size_t symmetric_difference(const BoxMask& e_set, const Site& center, std::int64_t rho);

struct BallFit {
  Site center;
  std::size_t sym_diff = 0;
  /// Candidates examined in the coarse and the refinement stage.
  std::size_t coarse_candidates = 0;
  std::size_t refine_candidates = 0;
};

/// Minimizes |B(c, rho) symdiff E| over the tile anchors of `anchor_radius`
/// inside the box, then over K(best, 2 anchor_radius + 1). Ties go to the
/// lexicographically smallest center.
BallFit fit_ball_center(const BoxMask& e_set, std::int64_t rho, std::int32_t anchor_radius);

struct ShellIndex {
  double delta = 0.0;
  /// Radii (1 - delta + 2^-k delta) rho and obstacle counts, k = 0..J.
  std::vector<double> radii;
  std::vector<std::size_t> counts;
  std::int64_t J = 0;
  /// B(x, (1 - delta) rho) contains no obstacle.
  bool clear = false;
};

ShellIndex shell_index(const EnvironmentField& env, const Site& center, std::int64_t rho,
                       double delta, double c5);

struct LocalizationConfig {
  double c2 = 0.1;
  /// Overrides eps_n = rho^{-c2}.
  std::optional<double> epsilon;
  std::int32_t ell = 5;
  double kappa = 0.1;
  double c5 = 0.5;
  /// Overrides rho_n(n, d, p).
  std::optional<std::int64_t> rho;
  bool inventory = true;
};

enum class LocalizationOutcome { kLocated, kEmpty };

struct LocalizationReport {
  LocalizationOutcome outcome = LocalizationOutcome::kEmpty;
  std::int64_t rho = 0;
  double epsilon = 0.0;
  /// E at eps_n^{1/2}, eps_n, eps_n^2 against the cap |B(0, rho)| + eps^{1/2} rho^d.
  struct EVolume {
    double epsilon = 0.0;
    std::int32_t tile_radius = 0;
    /// Absent when floor(eps rho) = 0 (degenerate tiles).
    std::optional<std::size_t> volume;
    double cap = 0.0;
  };
  std::vector<EVolume> e_volumes;
  LowDensityRegion e_set;
  Site fit_center;
  std::size_t fit_sym_diff = 0;
  /// Center after the clearance refinement.
  Site center;
  std::size_t sym_diff = 0;
  std::size_t obstacle_count_in_ball = 0;
  /// sym_diff + eps |E|, which bounds obstacle_count_in_ball.
  double obstacle_bound = 0.0;
  std::vector<TrulyOpenBox> truly_open;
  std::optional<ShellIndex> shells;
};

/// Full pipeline with rho = rho_from_log(log_n, d, p) unless overridden.
LocalizationReport localize(const EnvironmentField& env, double log_n, double p,
                            const LocalizationConfig& config = {});

std::size_t obstacles_in_ball(const EnvironmentField& env, const Site& center, double radius);

}  // namespace obstacle_walk
