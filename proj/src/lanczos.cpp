#include "lanczos.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "obstacle_walk/error.hpp"

namespace obstacle_walk::detail {

namespace {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Two passes of classical Gram-Schmidt against the first k columns.
Vector orthogonalize(const Matrix& basis, Eigen::Index k, Vector& w) {
  Vector coeffs = Vector::Zero(k);
  for (int pass = 0; pass < 2; ++pass) {
    const Vector h = basis.leftCols(k).transpose() * w;
    w.noalias() -= basis.leftCols(k) * h;
    coeffs += h;
  }
  return coeffs;
}

}  // namespace

EigenResult top_eigenpairs(const LinearOperator& op, std::size_t n, int nev, double tol,
                           std::int64_t max_matvecs, std::span<const double> start,
                           std::size_t basis) {
  require(n > 0 && nev >= 1, "eigenproblem needs a nonempty operator");
  require(start.size() == n, "start vector length mismatch");
  const auto size = static_cast<Eigen::Index>(n);
  const auto want = static_cast<Eigen::Index>(std::min<std::size_t>(static_cast<std::size_t>(nev), n));
  const Eigen::Index m = std::min<Eigen::Index>(size, std::max<Eigen::Index>(
                                                          static_cast<Eigen::Index>(basis), 3 * want + 8));
  const Eigen::Index keep = std::min<Eigen::Index>(m - 1, std::max<Eigen::Index>(want + 8, m / 2));

  Matrix V(size, m + 1);
  Matrix T = Matrix::Zero(m, m);
  Vector w(size);
  Vector v = Eigen::Map<const Vector>(start.data(), size);
  require(v.norm() > 0.0, "start vector is zero");
  V.col(0) = v / v.norm();

  EigenResult out;
  Eigen::Index k = 0;  // columns already carrying a projected matrix
  std::vector<double> previous;
  auto apply = [&](Eigen::Index j) {
    op(std::span<const double>(V.col(j).data(), n), std::span<double>(w.data(), n));
    ++out.matvecs;
  };

  for (;;) {
    Eigen::Index filled = m;
    double beta = 0.0;
    for (Eigen::Index j = k; j < m; ++j) {
      apply(j);
      const Vector h = orthogonalize(V, j + 1, w);
      T.block(0, j, j + 1, 1) = h;
      T.block(j, 0, 1, j + 1) = h.transpose();
      beta = w.norm();
      const double scale = std::max(1.0, std::abs(T(j, j)));
      if (beta <= 1e-14 * scale) {
        // invariant subspace: the projection is exact
        filled = j + 1;
        beta = 0.0;
        break;
      }
      V.col(j + 1) = w / beta;
      if (j + 1 < m) {
        T(j + 1, j) = beta;
        T(j, j + 1) = beta;
      }
    }

    Eigen::SelfAdjointEigenSolver<Matrix> eig(T.topLeftCorner(filled, filled));
    const Vector& theta = eig.eigenvalues();    // ascending
    const Matrix& Y = eig.eigenvectors();
    const Eigen::Index got = std::min(want, filled);
    std::vector<double> current(static_cast<std::size_t>(got));
    double worst = 0.0;
    bool settled = !previous.empty() && previous.size() == current.size();
    for (Eigen::Index i = 0; i < got; ++i) {
      const Eigen::Index c = filled - 1 - i;
      current[static_cast<std::size_t>(i)] = theta(c);
      const double res = std::abs(beta * Y(filled - 1, c));
      worst = std::max(worst, res);
      const double ref = std::max(std::abs(theta(c)), 1e-300);
      if (res > tol * ref) settled = false;
      if (settled && std::abs(theta(c) - previous[static_cast<std::size_t>(i)]) > tol * ref) {
        settled = false;
      }
    }
    const bool exact = beta == 0.0 || filled == size;
    if (exact || settled || out.matvecs >= max_matvecs) {
      out.converged = exact || settled;
      for (Eigen::Index i = 0; i < got; ++i) {
        const Eigen::Index c = filled - 1 - i;
        Vector x = V.leftCols(filled) * Y.col(c);
        x /= x.norm();
        out.values.push_back(theta(c));
        out.vectors.emplace_back(x.data(), x.data() + size);
      }
      // true residuals
      Vector ax(size);
      for (std::size_t i = 0; i < out.vectors.size(); ++i) {
        op(out.vectors[i], std::span<double>(ax.data(), n));
        const Vector r = ax - out.values[i] * Eigen::Map<const Vector>(out.vectors[i].data(), size);
        out.residual = std::max(out.residual, r.norm());
      }
      return out;
    }
    previous = std::move(current);

    // thick restart: keep the leading Ritz vectors plus the residual direction
    const Eigen::Index kk = std::min(keep, filled - 1);
    Matrix ritz = V.leftCols(filled) * Y.rightCols(kk).rowwise().reverse();
    Vector coupling(kk);
    for (Eigen::Index i = 0; i < kk; ++i) coupling(i) = beta * Y(filled - 1, filled - 1 - i);
    const Vector residual_dir = V.col(filled);
    V.leftCols(kk) = ritz;
    V.col(kk) = residual_dir;
    T.setZero();
    for (Eigen::Index i = 0; i < kk; ++i) {
      T(i, i) = theta(filled - 1 - i);
      T(i, kk) = coupling(i);
      T(kk, i) = coupling(i);
    }
    k = kk;
    // column kk's diagonal and further couplings are filled by the next sweep;
    // the first orthogonalization recomputes T(0..kk, kk) exactly.
  }
}

EigenResult dense_eigenpairs(std::span<const double> matrix, std::size_t n, int nev) {
  const auto size = static_cast<Eigen::Index>(n);
  const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> a(
      matrix.data(), size, size);
  const Matrix sym = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
  EigenResult out;
  const auto got = std::min<Eigen::Index>(size, nev);
  for (Eigen::Index i = 0; i < got; ++i) {
    const Eigen::Index c = size - 1 - i;
    out.values.push_back(eig.eigenvalues()(c));
    const Vector x = eig.eigenvectors().col(c);
    out.vectors.emplace_back(x.data(), x.data() + size);
    out.residual = std::max(out.residual, (sym * x - eig.eigenvalues()(c) * x).norm());
  }
  out.converged = true;
  return out;
}

}  // namespace obstacle_walk::detail
