#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "obstacle_walk/continuum.hpp"
#include "obstacle_walk/error.hpp"
#include "obstacle_walk/killed_walk.hpp"
#include "obstacle_walk/spectral.hpp"
#include "obstacle_walk/verify.hpp"

using namespace obstacle_walk;

namespace {

// P|_A assembled from coordinates alone.
Eigen::MatrixXd reference_matrix(const std::vector<Site>& sites, int d) {
  const auto n = static_cast<Eigen::Index>(sites.size());
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (l1_distance(sites[static_cast<std::size_t>(i)], sites[static_cast<std::size_t>(j)], d) == 1) {
        p(i, j) = 1.0 / (2.0 * d);
      }
    }
  }
  return p;
}

double reference_lambda(const LatticeDomain& dom) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(reference_matrix(dom.sites(), dom.dim()));
  return es.eigenvalues().maxCoeff();
}

// Plain power iteration on P^2 from the all-ones vector, to 1e-13.
double power_lambda(const LatticeDomain& dom) {
  std::vector<double> v(dom.size(), 1.0), w(dom.size()), z(dom.size());
  double lam = 0.0;
  for (int it = 0; it < 2000000; ++it) {
    dom.apply(v, w);
    dom.apply(w, z);
    double norm = 0.0;
    for (const double x : z) norm = std::max(norm, x);
    for (std::size_t i = 0; i < z.size(); ++i) v[i] = z[i] / norm;
    if (std::fabs(norm - lam) < 1e-15 * norm && it > 10) return std::sqrt(norm);
    lam = norm;
  }
  return std::sqrt(lam);
}

}  // namespace

TEST_CASE("small closed-form eigenpairs") {
  const LatticeDomain one({Site{}}, 2);
  const SpectralPair p1 = principal_pair(one);
  CHECK(p1.lambda1 == 0.0);
  CHECK(p1.phi1[0] == 1.0);

  const LatticeDomain two({Site{0, 0}, Site{1, 0}}, 2);
  const SpectralPair p2 = principal_pair(two);
  CHECK(p2.lambda1 == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(p2.phi1[0] == doctest::Approx(0.5));
  CHECK(p2.phi1[1] == doctest::Approx(0.5));

  const LatticeDomain square(std::vector<Site>{Site{0, 0}, Site{1, 0}, Site{0, 1}, Site{1, 1}}, 2);
  const SpectralPair p4 = principal_pair(square);
  CHECK(p4.lambda1 == doctest::Approx(0.5).epsilon(1e-14));
  for (const double x : p4.phi1) CHECK(x == doctest::Approx(0.25));

  // a path of n sites in d=1 geometry embedded in d=2: lambda = cos(pi/(n+1)) / 2
  std::vector<Site> path;
  for (int i = 0; i < 30; ++i) path.push_back(Site{i, 0});
  CHECK(principal_pair(LatticeDomain(path, 2)).lambda1 ==
        doctest::Approx(std::cos(M_PI / 31.0) / 2.0).epsilon(1e-13));
  CHECK_THROWS_AS(principal_pair(LatticeDomain({}, 2)), InvalidArgument);
}

TEST_CASE("principal pair matches a dense reference on random clusters") {
  for (std::uint64_t seed = 1; seed <= 12; ++seed) {
    const int d = seed % 2 ? 2 : 3;
    const LatticeDomain dom = random_cluster_domain(d, d == 2 ? 18 : 6, 0.7, seed);
    if (dom.size() < 2) continue;
    const SpectralPair pair = principal_pair(dom);
    CHECK(pair.lambda1 == doctest::Approx(reference_lambda(dom)).epsilon(1e-12));
    double sum = 0.0;
    for (const double x : pair.phi1) {
      CHECK(x >= 0.0);
      sum += x;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(eigen_equation_residual(dom, pair.lambda1, pair.phi1) <= 1e-10);
  }
}

TEST_CASE("lanczos and dense agree, with power iteration as a third opinion") {
  const LatticeDomain dom = random_cluster_domain(2, 22, 0.75, 31);
  REQUIRE(dom.size() > 200);
  SpectralOptions lanczos, dense;
  lanczos.method = SpectralMethod::kLanczos;
  dense.method = SpectralMethod::kDense;
  const SpectralPair a = principal_pair(dom, lanczos);
  const SpectralPair b = principal_pair(dom, dense);
  CHECK(a.lambda1 == doctest::Approx(b.lambda1).epsilon(1e-12));
  double diff = 0.0;
  for (std::size_t i = 0; i < dom.size(); ++i) diff = std::max(diff, std::fabs(a.phi1[i] - b.phi1[i]));
  CHECK(diff < 1e-10);
  CHECK(a.lambda1 == doctest::Approx(power_lambda(dom)).epsilon(1e-10));
}

TEST_CASE("ball eigenvalue asymptotics at R = 40") {
  const double mu = mu_ball(2);
  const SpectralPair p = principal_pair(ball_domain(Site{}, 40.0, 2));
  CHECK(std::fabs(p.lambda1 - (1.0 - mu / 1600.0)) <= 2.0 / (40.0 * 40.0 * 40.0));
}

TEST_CASE("reducible domains take the best component") {
  std::vector<Site> sites{Site{0, 0}, Site{1, 0}};
  for (int x = 10; x < 12; ++x) {
    for (int y = 0; y < 2; ++y) sites.push_back(Site{x, y});
  }
  const LatticeDomain dom(sites, 2);
  const SpectralPair p = principal_pair(dom);
  CHECK(p.lambda1 == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(p.phi1[0] == 0.0);
  CHECK(p.phi1[1] == 0.0);
}

TEST_CASE("eigenvector inequalities between the parity classes") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const LatticeDomain dom = random_cluster_domain(2, 16, 0.7, seed + 40);
    if (dom.size() < 3) continue;
    const SpectralPair p = principal_pair(dom);
    const auto& s = p.parity_split;
    CHECK(s.l2_even == doctest::Approx(s.l2_odd).epsilon(1e-10));
    CHECK(p.lambda1 * s.l1_odd <= s.l1_even * (1 + 1e-12));
    CHECK(s.l1_even * p.lambda1 <= s.l1_odd * (1 + 1e-12));
  }
}

TEST_CASE("Rayleigh quotient lower bounds") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const LatticeDomain dom = random_cluster_domain(2, 20, 0.75, seed);
    const double lam = principal_pair(dom).lambda1;
    std::vector<double> v(dom.size()), pv(dom.size());
    for (int k = 0; k < 100; ++k) {
      for (auto& x : v) x = unif(rng);
      dom.apply(v, pv);
      double num = 0.0, den = 0.0;
      for (std::size_t i = 0; i < v.size(); ++i) {
        num += v[i] * pv[i];
        den += v[i] * v[i];
      }
      CHECK(num / den <= lam + 1e-12);
    }
  }
}

TEST_CASE("subset monotonicity") {
  std::mt19937_64 rng(9);
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const LatticeDomain dom = random_cluster_domain(seed % 2 ? 2 : 3, seed % 2 ? 20 : 7, 0.7, seed);
    std::vector<Site> removed;
    for (const auto& s : dom.sites()) {
      if (rng() % 7 == 0) removed.push_back(s);
    }
    const LatticeDomain sub = dom.without(removed);
    if (sub.empty()) continue;
    CHECK(principal_pair(sub).lambda1 <= principal_pair(dom).lambda1 + 1e-12);
  }
}

TEST_CASE("spectral gap examples") {
  const LatticeDomain two({Site{0, 0}, Site{1, 0}}, 2);
  const GapResult g2 = spectral_gap(two);
  CHECK_FALSE(g2.has_second);
  CHECK(g2.gap == doctest::Approx(1.0 / 16.0));

  const LatticeDomain square(std::vector<Site>{Site{0, 0}, Site{1, 0}, Site{0, 1}, Site{1, 1}}, 2);
  const GapResult g4 = spectral_gap(square);
  CHECK(g4.gap == doctest::Approx(0.25).epsilon(1e-13));

  // Q^2 gap scales as 2 (mu2 - mu1) / R^2 on the ball
  const ContinuumBallSpectrum c = ball_spectrum(2);
  for (const double r : {10.0, 20.0, 40.0}) {
    const GapResult g = spectral_gap(ball_domain(Site{}, r, 2));
    REQUIRE(g.has_second);
    const double scaled = g.gap * r * r / 2.0;
    CHECK(std::fabs(scaled / (c.mu2 - c.mu1) - 1.0) <= 0.2);
  }
}

TEST_CASE("second eigenvalue from principal_pair") {
  SpectralOptions o;
  o.second = true;
  const LatticeDomain dom = ball_domain(Site{}, 8.0, 2);
  const SpectralPair p = principal_pair(dom, o);
  REQUIRE(p.has_second);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(reference_matrix(dom.sites(), 2));
  const auto& ev = es.eigenvalues();
  CHECK(p.lambda2 == doctest::Approx(ev(ev.size() - 2)).epsilon(1e-10));
}

TEST_CASE("parity structure on small domains") {
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    const LatticeDomain dom = random_cluster_domain(seed % 2 ? 2 : 3, seed % 2 ? 14 : 5, 0.7, seed);
    if (dom.size() < 2) continue;
    const ParityCheck pc = parity_structure_check(dom);
    CHECK(pc.spectrum_deviation <= 1e-10);
    CHECK(pc.eigenvector_deviation <= 1e-10);
    // rank Q^2_e = rank Q / 2: positive eigenvalues of Q counted by the reference
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(reference_matrix(dom.sites(), dom.dim()));
    std::size_t positive = 0;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) positive += es.eigenvalues()(i) > 1e-8;
    CHECK(pc.positive_eigenvalues == positive);
  }
}

TEST_CASE("eigenfunction value identity") {
  const LatticeDomain two({Site{0, 0}, Site{1, 0}}, 2);
  CHECK(eigenfunction_value_identity_check(two, 1) <= 1e-15);
  const LatticeDomain one({Site{}}, 2);
  CHECK(eigenfunction_value_identity_check(one, 1) <= 1e-15);
  const LatticeDomain dom = random_cluster_domain(2, 22, 0.7, 3);
  REQUIRE(dom.size() > 150);
  CHECK(eigenfunction_value_identity_check(dom, 10) <= 1e-8);

  // LHS computed here directly from exit probabilities
  const SpectralPair p = principal_pair(dom);
  double lhs = 0.0;
  for (std::size_t v = 0; v < dom.size(); ++v) {
    std::vector<double> e(dom.size(), 0.0);
    e[v] = 1.0;
    double alive = 0.0;
    for (const double x : propagate(dom, e, 10)) alive += x;
    lhs += p.phi1[v] * (1.0 - alive);
  }
  CHECK(std::fabs(lhs - (1.0 - std::pow(p.lambda1, 10))) <= 1e-10);
}

TEST_CASE("sup norm ratio") {
  const LatticeDomain one({Site{}}, 2);
  CHECK(sup_norm_bound_check(one) == doctest::Approx(1.0));
  const double r20 = sup_norm_bound_check(ball_domain(Site{}, 20.0, 2));
  const double r40 = sup_norm_bound_check(ball_domain(Site{}, 40.0, 2));
  CHECK(std::isfinite(r20));
  CHECK(r20 / r40 < 3.0);
  CHECK(r40 / r20 < 3.0);
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const LatticeDomain dom = random_cluster_domain(2, 30, 0.7, seed);
    if (dom.size() < 2) continue;
    worst = std::max(worst, sup_norm_bound_check(dom));
  }
  CHECK(worst < 10.0);
}

TEST_CASE("expansion law against the direct conditional law") {
  const LatticeDomain two({Site{0, 0}, Site{1, 0}}, 2);
  const ExpansionLaw e2 = expansion_law(two, Site{}, 4);
  CHECK(e2.law[static_cast<std::size_t>(two.index_of(Site{}))] == doctest::Approx(1.0));

  const LatticeDomain ball = ball_domain(Site{}, 10.0, 2);
  const ExpansionLaw endpoint = expansion_law(ball, Site{}, 800);
  const MassProfile direct = conditional_law(ball, Site{}, 800, Condition::survive_to(800));
  double tv = 0.0;
  for (std::size_t i = 0; i < ball.size(); ++i) tv += std::fabs(endpoint.law[i] - direct.u[i]);
  CHECK(tv / 2.0 <= 1e-6);

  const ExpansionLaw bulk = expansion_law(ball, Site{}, 400, 400, Site{});
  const MassProfile bulk_direct = conditional_law(ball, Site{}, 400, Condition::bridge(800, Site{}));
  tv = 0.0;
  for (std::size_t i = 0; i < ball.size(); ++i) tv += std::fabs(bulk.law[i] - bulk_direct.u[i]);
  CHECK(tv / 2.0 <= 1e-6);
}

TEST_CASE("expansion law error bound at R = 25") {
  const LatticeDomain ball = ball_domain(Site{}, 25.0, 2);
  const std::int64_t m = 8 * 25 * 25;
  const ExpansionLaw e = expansion_law(ball, Site{}, m);
  const MassProfile direct = conditional_law(ball, Site{}, m, Condition::survive_to(m));
  REQUIRE(e.error_bound.has_value());
  double sup = 0.0;
  for (std::size_t i = 0; i < ball.size(); ++i) sup = std::max(sup, std::fabs(e.law[i] - direct.u[i]));
  CHECK(sup <= *e.error_bound);
}

TEST_CASE("solver options are validated") {
  const LatticeDomain dom = ball_domain(Site{}, 3.0, 2);
  SpectralOptions bad;
  bad.tol = -1.0;
  CHECK_THROWS_AS(principal_pair(dom, bad), InvalidArgument);
  bad.tol = 1e-12;
  bad.max_matvecs = 0;
  CHECK_THROWS_AS(principal_pair(dom, bad), InvalidArgument);
}
