#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "obstacle_walk/domain.hpp"
#include "obstacle_walk/environment.hpp"
#include "obstacle_walk/localization.hpp"
#include "obstacle_walk/spectral.hpp"

namespace obstacle_walk {

enum class SurgeryKind { kRemoveObstaclesIn, kCloseBox };

const char* surgery_kind_name(SurgeryKind kind);
SurgeryKind parse_surgery_kind(const std::string& name);

/// An obstacle modification together with the environments on both sides.
/// remove: after.closed = before.closed minus region;
/// close:  after.closed = before.closed union region.
struct SurgeryOp {
  SurgeryKind kind = SurgeryKind::kRemoveObstaclesIn;
  /// Sorted site set; sites outside the box are dropped on construction.
  std::vector<Site> region;
  EnvironmentField before;
  EnvironmentField after;
};

SurgeryOp remove_obstacles_in(const EnvironmentField& env, std::vector<Site> region);
SurgeryOp close_region(const EnvironmentField& env, std::vector<Site> region);
/// Checks the before/after relation site by site.
bool well_formed(const SurgeryOp& op);

/// Which domain of an environment the eigenvalue is taken on.
struct DomainSpec {
  enum class Kind { kOpenSites, kCluster, kBall };
  Kind kind = Kind::kOpenSites;
  Site center;
  double radius = 0.0;

  static DomainSpec open_sites() { return {}; }
  static DomainSpec cluster(const Site& s) { return {Kind::kCluster, s, 0.0}; }
  static DomainSpec ball(const Site& c, double r) { return {Kind::kBall, c, r}; }
};

LatticeDomain resolve_domain(const EnvironmentField& env, const DomainSpec& spec);

/// Principal eigenvalue of P|_A; 0 for the empty domain.
double principal_eigenvalue(const LatticeDomain& domain, const SpectralOptions& options = {});

struct EigShift {
  double lambda_before = 0.0;
  double lambda_after = 0.0;
  double delta = 0.0;
  std::size_t sites_before = 0;
  std::size_t sites_after = 0;
};

/// Eigenvalue change of the specified domain under `op`. The sign required by
/// monotonicity (removal never lowers lambda, closing never raises it) is
/// checked with slack `monotonicity_tol` and violations throw InvariantViolation.
EigShift eig_shift(const SurgeryOp& op, const DomainSpec& spec, const SpectralOptions& options = {},
                   double monotonicity_tol = 1e-10);

struct DropBound {
  /// Share of |Phi_D1|_2^2 carried by D2 and its outer boundary.
  double q = 0.0;
  /// 2q/(1-q); +inf when q >= 1 (vacuous).
  double bound = 0.0;
  bool vacuous = false;
  double lambda_d1 = 0.0;
  double lambda_rest = 0.0;
  double actual_drop = 0.0;
  double margin = 0.0;
};

/// lambda_{D1} - lambda_{D1 \ D2} against 2q/(1-q). D2 must lie in D1.
/// A margin below -margin_tol throws InvariantViolation.
DropBound drop_upper_bound_check(const LatticeDomain& d1, const std::vector<Site>& d2,
                                 const SpectralOptions& options = {}, double margin_tol = 1e-9);

enum class LinearMethod { kAuto, kDirect, kConjugateGradient, kSeries };

const char* linear_method_name(LinearMethod m);
LinearMethod parse_linear_method(const std::string& name);

struct GreenOptions {
  LinearMethod method = LinearMethod::kAuto;
  /// Relative accuracy target of every Green value.
  double tol = 1e-8;
  /// Largest tolerated |G(u,v) - G(v,u)|; larger values throw InvariantViolation.
  double symmetry_tol = 1e-10;
  std::int64_t max_iterations = 1'000'000;
};

/// G_A(u, v) = sum_t P^u(S_t = v, tau_{A^c} > t), the entries of (I - P|_A)^{-1}.
struct GreenTable {
  std::vector<Site> sources;
  std::vector<Site> targets;
  /// values[i * targets.size() + j] = G(sources[i], targets[j]).
  std::vector<double> values;
  double max_asymmetry = 0.0;
  std::string method;
  std::int64_t iterations = 0;

  double at(std::size_t i, std::size_t j) const { return values[i * targets.size() + j]; }
};

GreenTable greens_function(const LatticeDomain& domain, const std::vector<Site>& sources,
                           const std::vector<Site>& targets, const GreenOptions& options = {});

/// max_x |Phi(x) - (1 - lambda) sum_v Phi(v) G(v, x)| / |Phi|_inf.
double resolvent_identity_residual(const LatticeDomain& domain, const SpectralOptions& spectral = {},
                                   const GreenOptions& options = {});

struct CapacityOptions {
  /// Margins L of the truncation boxes (bounding box of A grown by L).
  std::vector<std::int32_t> margins{8, 16, 32};
  LinearMethod method = LinearMethod::kAuto;
};

struct CapacityResult {
  /// Extrapolated sum over x in A of P^x(S_t not in A for all t >= 1).
  double capacity = 0.0;
  /// |extrapolation from all margins - extrapolation from the two largest|;
  /// with only two margins, |extrapolation - largest box value|.
  double truncation_error = 0.0;
  std::vector<std::int32_t> margins;
  /// Capacity computed with killing outside each truncation box.
  std::vector<double> box_values;
  /// Never-return probabilities per site of A at the largest box.
  std::vector<double> escape;
};

/// Capacity of a finite set in Z^d, d >= 3, by harmonic solves on nested
/// boxes and Richardson extrapolation in the margin.
CapacityResult capacity(const std::vector<Site>& a, int d, const CapacityOptions& options = {});

/// P^z(tau_z^+ > exit time of B(z, R)) in any dimension; the d = 2 surrogate
/// of capacity.
double escape_probability(const Site& z, double radius, int d,
                          LinearMethod method = LinearMethod::kAuto);

struct HarnackResult {
  double r1 = 0.0;
  double r2 = 0.0;
  /// max over y in B_{R2}, v in the annulus of G_B(y, v) / G_B(0, v).
  double ratio = 1.0;
  double one_minus_ratio = 1.0;  // 1 - R2/R1
  Site argmax_y;
  Site argmax_v;
  std::size_t annulus_size = 0;
};

/// Harnack-type Green ratio in the vacant ball B(0, R1) with sources in
/// {R1 - 2(R1-R2)/3 < |v| <= R1 - (R1-R2)/3} and reference point 0.
HarnackResult harnack_ratio(int d, double r1, double r2);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

/// Least squares of log(ratio) against -log(1 - R2/R1); the slope is the
/// empirical exponent of the (1 - R2/R1)^{-C} envelope.
LineFit fit_harnack_exponent(const std::vector<HarnackResult>& sweep);

struct RemovalGainOptions {
  /// Eigenvalues are taken on the open sites of B(x_V, work_factor * rho).
  double work_factor = 2.0;
  SpectralOptions spectral;
};

struct RemovalGain {
  ShellIndex shells;
  std::int64_t J = 0;
  /// Obstacles in B_{delta,J-1} (removed in both stages together).
  std::size_t m = 0;
  std::size_t annulus_obstacles = 0;
  std::size_t core_obstacles = 0;
  double lambda_base = 0.0;
  double lambda_annulus_removed = 0.0;
  double lambda_all_removed = 0.0;
  /// Stage-two gain: all removed minus annulus removed.
  double gain = 0.0;
  /// (m / rho^d)^{1 - 1/d} rho^{-2}.
  double floor_shape = 0.0;
  double ratio = 0.0;
};

/// Two-stage removal around x_V: first the obstacles of
/// B_{delta,J-1} \ B_{delta,J}, then those of B_{delta,J}. Throws
/// InvalidArgument when the inner ball is clear.
RemovalGain removal_gain_check(const EnvironmentField& env, const Site& x_v, std::int64_t rho,
                               double delta, double c5, const RemovalGainOptions& options = {});

/// Empirical constant of the removal floor: min gain / floor_shape.
double fit_floor_constant(const std::vector<RemovalGain>& fixtures);

struct BoxSelectionOptions {
  /// Scale for the predicted drop shape b1^2 b2^{-2(d-1)} ell^{2(d+2)} rho^{-d-2}.
  std::optional<std::int64_t> rho;
  SpectralOptions spectral;
  double bound_tol = 1e-10;
};

struct BoxSelection {
  Site anchor;
  /// sum of Phi_V^2 over K(x, 11 ell), and |Phi_V|_2^2.
  double window_mass = 0.0;
  double phi_l2_sq = 0.0;
  /// 4 window_mass / phi_l2_sq, or +inf when window_mass > phi_l2_sq / 2.
  double bound = std::numeric_limits<double>::infinity();
  double lambda_before = 0.0;
  double lambda_after = 0.0;
  double drop = 0.0;
  std::size_t eligible = 0;
  std::size_t truly_open = 0;
  std::optional<double> drop_shape;
  /// V \ K(x, 10 ell) and the environment with K(x, 10 ell) closed.
  LatticeDomain domain_after;
  EnvironmentField env_after;
};

/// Among ell-truly-open boxes within l_inf distance 100 ell of a site outside
/// the truly-open union, picks the anchor minimizing the Phi_V^2 mass of
/// K(x, 11 ell) and closes K(x, 10 ell). Throws InvalidArgument when no box
/// is eligible and InvariantViolation when the drop exceeds the bound.
BoxSelection low_impact_box_selection(const EnvironmentField& env, const LatticeDomain& v,
                                      std::int32_t ell, double b1, double b2,
                                      const BoxSelectionOptions& options = {});

/// Repeats the selection `rounds` times on the shrinking domain.
std::vector<BoxSelection> iterated_box_selection(const EnvironmentField& env,
                                                 const LatticeDomain& v, std::int32_t ell,
                                                 double b1, double b2, int rounds,
                                                 const BoxSelectionOptions& options = {});

struct IsoResult {
  std::size_t size1 = 0;
  std::size_t size2 = 0;
  /// |outer boundary of A1 inside A2| and |outer boundary of A2 inside A1|.
  std::size_t boundary1 = 0;
  std::size_t boundary2 = 0;
  std::size_t min_interface = 0;
  /// min(|A1|, |A2|)^{1 - 1/d}; 0 when one side is empty.
  double floor = 0.0;
  /// min_interface / floor, absent for trivial partitions.
  std::optional<double> ratio;
};

/// Partition of B(0, R) into A1 and its complement in the ball. Throws
/// InvalidArgument when A1 is not a subset of the ball.
IsoResult isoperimetric_check(int d, double radius, const std::vector<Site>& a1);

/// Same check with membership flags over euclidean_ball(0, R, d).
IsoResult isoperimetric_check(int d, double radius, const std::vector<bool>& in_a1);

struct IsoSuiteResult {
  std::string suite;
  int d = 2;
  double radius = 0.0;
  std::size_t cases = 0;
  double min_ratio = std::numeric_limits<double>::infinity();
  /// Sites of A1 for the minimizing partition.
  std::vector<Site> argmin;
};

inline constexpr std::size_t kExhaustiveIsoCap = 16;

/// Suites: "exhaustive" (all 2^|B| partitions, |B| <= 16), "halfspace",
/// "annulus", "singleton", "random" (`random_cases` fair-coin partitions).
IsoSuiteResult isoperimetric_suite(const std::string& suite, int d, double radius,
                                   std::size_t random_cases = 1000, std::uint64_t seed = 1);

}  // namespace obstacle_walk
