#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace obstacle_walk::detail {

using LinearOperator = std::function<void(std::span<const double>, std::span<double>)>;

struct EigenResult {
  /// Descending eigenvalues and unit eigenvectors.
  std::vector<double> values;
  std::vector<std::vector<double>> vectors;
  std::int64_t matvecs = 0;
  /// Largest residual norm |A x - theta x|_2 over the returned pairs.
  double residual = 0.0;
  bool converged = false;
};

/// Largest `nev` eigenpairs of a symmetric operator by Krylov-Schur
/// (thick-restart Lanczos with full reorthogonalization).
EigenResult top_eigenpairs(const LinearOperator& op, std::size_t n, int nev, double tol,
                           std::int64_t max_matvecs, std::span<const double> start,
                           std::size_t basis = 100);

/// Dense symmetric eigendecomposition, descending, row-major input.
EigenResult dense_eigenpairs(std::span<const double> matrix, std::size_t n, int nev);

}  // namespace obstacle_walk::detail
