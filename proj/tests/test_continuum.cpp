#include <doctest.h>

#include <boost/math/special_functions/bessel.hpp>
#include <cmath>
#include <random>

#include "obstacle_walk/continuum.hpp"
#include "obstacle_walk/error.hpp"

using namespace obstacle_walk;

TEST_CASE("Bessel functions against Boost") {
  for (const double nu : {0.0, 0.5, 1.0, 1.5, 2.0}) {
    for (const double x : {0.0, 0.3, 1.0, 2.4, 5.0, 11.0, 30.0}) {
      CHECK(bessel_j(nu, x) == doctest::Approx(boost::math::cyl_bessel_j(nu, x)).epsilon(1e-12).scale(1.0));
    }
    for (const int k : {1, 2, 3}) {
      CHECK(bessel_j_zero(nu, k) == doctest::Approx(boost::math::cyl_bessel_j_zero(nu, k)).epsilon(1e-12));
    }
  }
}

TEST_CASE("mu_B per dimension") {
  CHECK(mu_ball(3) == doctest::Approx(M_PI * M_PI / 6.0).epsilon(1e-13));
  const double j0 = boost::math::cyl_bessel_j_zero(0.0, 1);
  CHECK(mu_ball(2) == doctest::Approx(j0 * j0 / 4.0).epsilon(1e-12));
  CHECK(mu_ball(2) == doctest::Approx(1.44580).epsilon(1e-5));
  const double j1 = boost::math::cyl_bessel_j_zero(1.0, 1);
  CHECK(mu_ball(4) == doctest::Approx(j1 * j1 / 8.0).epsilon(1e-12));
  for (const int d : {2, 3, 4}) {
    const ContinuumBallSpectrum s = ball_spectrum(d);
    CHECK(s.bessel_order == doctest::Approx(0.5 * d - 1.0));
    CHECK(s.mu1 < s.mu2);
    // the second Dirichlet eigenvalue of the ball is the first zero of J_{nu+1}
    const double j = boost::math::cyl_bessel_j_zero(0.5 * d, 1);
    CHECK(s.mu2 == doctest::Approx(j * j / (2.0 * d)).epsilon(1e-12));
  }
}

TEST_CASE("unit ball volumes") {
  CHECK(unit_ball_volume(2) == doctest::Approx(M_PI));
  CHECK(unit_ball_volume(3) == doctest::Approx(4.0 * M_PI / 3.0));
  CHECK(unit_ball_volume(4) == doctest::Approx(M_PI * M_PI / 2.0));
}

TEST_CASE("localization radius closed form") {
  CHECK(rho_n(1.0, 2, 0.5) == 0);
  CHECK(rho_n(2.0, 2, 0.5) == 0);
  CHECK(rho_n(1e6, 2, 0.5) == 3);
  CHECK(rho_from_log(60.0 * std::log(10.0), 2, 0.5) == 11);
  // high-precision reference for the second value
  const long double arg = 2.0L * 60.0L * std::log2(10.0L) / static_cast<long double>(M_PI);
  CHECK(static_cast<std::int64_t>(std::floor(std::sqrt(arg))) == 11);
  CHECK_THROWS_AS(rho_n(10.0, 2, 1.0), InvalidArgument);
}

TEST_CASE("profile normalization by two quadratures and by Monte Carlo") {
  for (const int d : {2, 3}) {
    for (const auto kind : {ProfileKind::kPhi1L1, ProfileKind::kPhi2L2}) {
      const ProfileTarget p = profile(kind, d);
      CHECK(std::fabs(p.norm / p.norm_check - 1.0) <= 1e-8);
      CHECK(p.value(1.0) == doctest::Approx(0.0).scale(1.0));
      double prev = p.value(0.0);
      for (int i = 1; i <= 50; ++i) {
        const double v = p.value(i / 50.0);
        CHECK(v <= prev + 1e-15);
        prev = v;
      }
    }
    // independent Monte Carlo integral over the cube [-1,1]^d
    const ProfileTarget phi1 = profile(ProfileKind::kPhi1L1, d);
    const ProfileTarget phi2 = profile(ProfileKind::kPhi2L2, d);
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const int n = 2'000'000;
    double s1 = 0.0, s2 = 0.0, s1sq = 0.0;
    for (int k = 0; k < n; ++k) {
      double r2 = 0.0;
      for (int i = 0; i < d; ++i) {
        const double x = u(rng);
        r2 += x * x;
      }
      if (r2 > 1.0) continue;
      const double r = std::sqrt(r2);
      const double a = phi1.value(r);
      const double b = phi2.value(r);
      s1 += a;
      s1sq += a * a;
      s2 += b * b;
    }
    const double vol = std::pow(2.0, d);
    const double i1 = vol * s1 / n;
    const double i2 = vol * s2 / n;
    const double se = vol * std::sqrt((s1sq / n - (s1 / n) * (s1 / n)) / n);
    CHECK(std::fabs(i1 - 1.0) <= std::max(1e-3, 5 * se));
    CHECK(std::fabs(i2 - 1.0) <= 5e-3);
  }
}

TEST_CASE("phi2 peak value in d = 2") {
  // phi2(0) = 1 / sqrt(2 pi int_0^1 J0(j r)^2 r dr) = 1 / (sqrt(pi) |J1(j)|)
  const double j = boost::math::cyl_bessel_j_zero(0.0, 1);
  const double peak = 1.0 / (std::sqrt(M_PI) * std::fabs(boost::math::cyl_bessel_j(1.0, j)));
  CHECK(profile(ProfileKind::kPhi2L2, 2).value(0.0) == doctest::Approx(peak).epsilon(1e-6));
  const ProfileTarget sq = profile(ProfileKind::kPhi2Squared, 2);
  CHECK(sq.value(0.0) == doctest::Approx(peak * peak).epsilon(1e-6));
}

TEST_CASE("interpolated table agrees with exact evaluation") {
  const ProfileTarget p = profile(ProfileKind::kPhi1L1, 2, 401);
  for (int i = 0; i <= 100; ++i) {
    const double r = i / 100.0;
    CHECK(std::fabs(p.interpolate(r) - p.value(r)) <= 1e-4 * p.value(0.0));
  }
  CHECK(profile_integral(p) == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("discretized profile") {
  const ProfileTarget p = profile(ProfileKind::kPhi1L1, 2);
  const double radius = 40.0;
  const DiscreteProfile even = discretize_profile(p, Site{}, radius, Parity::kEven);
  double sum = 0.0;
  for (std::size_t i = 0; i < even.sites.size(); ++i) {
    const Site& s = even.sites[i];
    CHECK(s[0] * s[0] + s[1] * s[1] <= 1600);
    if (parity_of(s, 2) == Parity::kOdd) CHECK(even.values[i] == 0.0);
    sum += even.values[i];
    // reflection symmetry
    const Site r{-s[0], s[1]};
    const auto it = std::find(even.sites.begin(), even.sites.end(), r);
    REQUIRE(it != even.sites.end());
    CHECK(even.values[static_cast<std::size_t>(it - even.sites.begin())] == doctest::Approx(even.values[i]));
  }
  CHECK(std::fabs(sum - 1.0) <= 1.0 / radius);
  CHECK_THROWS_AS(discretize_profile(p, Site{}, 0.5, Parity::kEven), InvalidArgument);
}

TEST_CASE("profile names") {
  CHECK(parse_profile("phi1") == ProfileKind::kPhi1L1);
  CHECK(parse_profile("phi2sq") == ProfileKind::kPhi2Squared);
  CHECK(parse_profile(profile_name(ProfileKind::kPhi2L2)) == ProfileKind::kPhi2L2);
  CHECK(parse_profile("phi2_L2") == ProfileKind::kPhi2L2);
  CHECK_THROWS_AS(parse_profile("phi3"), InvalidArgument);
}

TEST_CASE("conditioned walk profile deviation shrinks with R") {
  const ProfileDeviation a = compare_ball_profile(2, 10.0, 800);
  const ProfileDeviation b = compare_ball_profile(2, 15.0, 1800);
  CHECK(b.sup_deviation <= a.sup_deviation);
  CHECK(b.sup_deviation / b.peak <= 0.25);
  CHECK(b.total_variation < a.total_variation);
}
