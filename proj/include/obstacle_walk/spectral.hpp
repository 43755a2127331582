#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "obstacle_walk/domain.hpp"

namespace obstacle_walk {

enum class SpectralMethod { kAuto, kLanczos, kDense };

const char* method_name(SpectralMethod m);
SpectralMethod parse_method(const std::string& name);

struct SpectralOptions {
  double tol = 1e-12;
  bool second = false;
  SpectralMethod method = SpectralMethod::kAuto;
  std::int64_t max_matvecs = 1'000'000;
  std::size_t krylov_basis = 100;
};

struct SolverStats {
  std::int64_t iterations = 0;
  /// |P|_A phi - lambda phi|_inf for the l1-normalized phi.
  double residual = 0.0;
  std::string method;
  bool converged = true;
  /// Negative entries of size above round-off are reported here, not hidden.
  double clamped_mass = 0.0;
};

struct ParitySplit {
  double l1_even = 0.0;
  double l1_odd = 0.0;
  double l2_even = 0.0;
  double l2_odd = 0.0;
};

struct SpectralPair {
  std::shared_ptr<const LatticeDomain> domain;
  double lambda1 = 0.0;
  /// l1-normalized, nonnegative, supported on the achieving component.
  std::vector<double> phi1;
  bool has_second = false;
  /// Second eigenvalue of Q reported via sqrt of the second eigenvalue of Q^2_e.
  double lambda2 = 0.0;
  /// lambda1^2 - lambda2^2, or lambda1^2 when there is no second eigenvalue.
  double gap = 0.0;
  double l2_norm_sq = 0.0;
  ParitySplit parity_split;
  SolverStats stats;
  /// Component (in LatticeDomain::components order) achieving lambda1.
  std::size_t component = 0;
};

SpectralPair principal_pair(const LatticeDomain& domain, const SpectralOptions& options = {});

struct GapResult {
  double lambda1 = 0.0;  // of Q
  double theta1 = 0.0;   // top two eigenvalues of Q^2_e
  double theta2 = 0.0;
  double gap = 0.0;
  bool has_second = false;
};

GapResult spectral_gap(const LatticeDomain& domain, const SpectralOptions& options = {});

/// Top `count` eigenpairs of Q^2 on one parity class (unit l2 vectors over
/// the class members, in TwoStepOperator order).
struct ClassSpectrum {
  std::vector<std::int32_t> members;
  std::vector<double> theta;
  std::vector<std::vector<double>> eta;
  SolverStats stats;
};

ClassSpectrum class_spectrum(const LatticeDomain& domain, Parity cls, int count,
                             const SpectralOptions& options = {});

/// Full dense spectrum of Q (descending) with unit eigenvectors; oracle use.
struct DenseSpectrum {
  std::vector<double> values;
  std::vector<std::vector<double>> vectors;
};
DenseSpectrum dense_spectrum(const LatticeDomain& domain);
DenseSpectrum dense_class_spectrum(const LatticeDomain& domain, Parity cls);

struct ParityCheck {
  /// max |theta_k(Q^2 on a class) - lambda_k(Q)^2| over both classes, with
  /// the eigenvalues of Q beyond the positive ones matched to 0.
  double spectrum_deviation = 0.0;
  /// max deviation between the principal eigenvector of Q restricted to a
  /// class (l2-renormalized) and the principal eigenvector of Q^2 there.
  double eigenvector_deviation = 0.0;
  std::size_t positive_eigenvalues = 0;
};

/// Dense check of the parity reduction on a connected domain; eigenvalues of
/// Q at most `zero_tol` count as nonpositive.
ParityCheck parity_structure_check(const LatticeDomain& domain, double zero_tol = 1e-8);

/// |sum_v phi(v) P^v(tau <= t) - (1 - lambda^t)| with exit probabilities
/// from the killed evolution.
double eigenfunction_value_identity_check(const LatticeDomain& domain, const SpectralPair& pair,
                                          std::int64_t t);
double eigenfunction_value_identity_check(const LatticeDomain& domain, std::int64_t t,
                                          double tol = 1e-12);

/// |phi|_inf / (1 - lambda)^{d/2}.
double sup_norm_bound_check(const LatticeDomain& domain, const SpectralOptions& options = {});

struct ExpansionLaw {
  std::shared_ptr<const LatticeDomain> domain;
  std::int64_t m = 0;
  std::optional<std::int64_t> t;
  std::vector<double> law;
  int terms = 1;
  /// (theta_{terms+1}/theta_1)^{floor(m/2)} N^2 when the next eigenvalue is known.
  std::optional<double> error_bound;
};

/// Endpoint law P(S_m = x | tau > m) or, with t, the bulk law
/// P(S_m = x | S_{m+t} = y, tau > m + t) from the eigen-expansion of Q^2 on
/// the parity classes, truncated after `terms` eigenpairs. The bridge
/// endpoint y defaults to the start.
ExpansionLaw expansion_law(const LatticeDomain& domain, const Site& start, std::int64_t m,
                           std::optional<std::int64_t> t = std::nullopt,
                           std::optional<Site> endpoint = std::nullopt, int terms = 1,
                           const SpectralOptions& options = {});

}  // namespace obstacle_walk
