#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "obstacle_walk/domain.hpp"

namespace obstacle_walk {

struct CaseResult {
  std::string name;
  /// The invariant being checked, named so that failures are self-describing.
  std::string invariant;
  double value = 0.0;
  double tolerance = 0.0;
  bool pass = true;
};

struct SuiteReport {
  std::string suite;
  std::vector<CaseResult> cases;
  /// Conjunction of the case statuses.
  bool pass() const;
  std::size_t failures() const;
};

const std::vector<std::string>& suite_names();

struct VerifyOptions {
  std::uint64_t seed = 1;
  /// Appends a deliberately corrupted eigenpair to the identities suite.
  bool inject_corruption = false;
};

/// Runs one named invariant suite; unknown names throw InvalidArgument.
SuiteReport run_suite(const std::string& name, const VerifyOptions& options = {});

/// Largest open cluster of a Bernoulli environment on [0, side)^d.
LatticeDomain random_cluster_domain(int d, std::int32_t side, double p_open, std::uint64_t seed);

/// |Q phi - lambda phi|_inf / |phi|_inf for a claimed eigenpair.
double eigen_equation_residual(const LatticeDomain& domain, double lambda,
                               const std::vector<double>& phi);

}  // namespace obstacle_walk
