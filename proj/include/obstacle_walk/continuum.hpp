#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "obstacle_walk/lattice.hpp"

namespace obstacle_walk {

/// Bessel function of the first kind, order nu >= 0: power series for
/// x <= 12, Hankel asymptotic expansion beyond.
double bessel_j(double nu, double x);
/// k-th positive zero of J_nu, bracketed by a scan and refined by 60
/// bisection steps.
double bessel_j_zero(double nu, int k = 1);

struct ContinuumBallSpectrum {
  int d = 0;
  double bessel_order = 0.0;  // nu = d/2 - 1
  double j_nu_1 = 0.0;
  double mu1 = 0.0;
  double mu2 = 0.0;
};

/// Dirichlet eigenvalues of -(1/2d) Laplacian on the unit ball of R^d.
ContinuumBallSpectrum ball_spectrum(int d);
double mu_ball(int d);

double unit_ball_volume(int d);
/// floor((d log_{1/p} n / omega_d)^{1/d}) with log n supplied directly.
std::int64_t rho_from_log(double log_n, int d, double p);
std::int64_t rho_n(double n, int d, double p);

enum class ProfileKind { kPhi1L1, kPhi2L2, kPhi2Squared };
const char* profile_name(ProfileKind k);
ProfileKind parse_profile(const std::string& name);

/// Radial first eigenfunction of the unit ball, normalized per kind:
/// phi1 has unit integral, phi2 unit L2 norm, phi2_squared is phi2^2.
struct ProfileTarget {
  ProfileKind kind = ProfileKind::kPhi1L1;
  int d = 2;
  double j = 0.0;
  /// phi(r) = g(r) / norm with g(r) = J_nu(j r) / (j r / 2)^nu.
  double norm = 1.0;
  /// Same normalization recomputed with an independent quadrature rule.
  double norm_check = 1.0;
  std::vector<double> table_r;
  std::vector<double> table_value;

  /// Profile value at radius r (0 outside the unit ball).
  double value(double r) const;
  /// Linear interpolation in the table.
  double interpolate(double r) const;
};

ProfileTarget profile(ProfileKind kind, int d, std::size_t table_points = 201);

/// Integral of phi over the unit ball (kind phi1 / phi2_squared) or of
/// phi^2 (kind phi2), by radial quadrature.
double profile_integral(const ProfileTarget& target);

struct DiscreteProfile {
  int d = 2;
  std::vector<Site> sites;  // lattice points of B(center, radius)
  std::vector<double> values;
};

/// x -> 2 radius^{-d} phi(|x - center| / radius) on sites of parity `cls`,
/// 0 on the other class.
DiscreteProfile discretize_profile(const ProfileTarget& target, const Site& center, double radius,
                                   Parity cls);

struct ProfileDeviation {
  double radius = 0.0;
  std::int64_t m = 0;
  std::optional<std::int64_t> t;
  /// sup over the reachable parity class of |R^d law(x) - 2 phi(x / R)|.
  double sup_deviation = 0.0;
  /// max of 2 phi, the tolerance scale.
  double peak = 0.0;
  double total_variation = 0.0;
};

/// Conditioned law on the vacant discrete ball B(0, R) from its center,
/// computed exactly, against the continuum profile: endpoint law at m vs
/// 2 phi1, or with t the bridge law P(S_m = x | S_{m+t} = 0) vs 2 phi2^2.
ProfileDeviation compare_ball_profile(int d, double radius, std::int64_t m,
                                      std::optional<std::int64_t> t = std::nullopt);

}  // namespace obstacle_walk
