#include "obstacle_walk/continuum.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "obstacle_walk/domain.hpp"
#include "obstacle_walk/error.hpp"
#include "obstacle_walk/killed_walk.hpp"
#include "obstacle_walk/numerics.hpp"

namespace obstacle_walk {

namespace {

constexpr double kSeriesLimit = 12.0;

/// sum_k (-z^2/4)^k / (k! Gamma(k + nu + 1)), so that J_nu(z) = (z/2)^nu * this.
long double reduced_series(double nu, double z) {
  const long double q = -0.25L * static_cast<long double>(z) * z;
  long double term = 1.0L / std::tgamma(static_cast<long double>(nu) + 1.0L);
  long double sum = term;
  for (int k = 1; k < 400; ++k) {
    term *= q / (static_cast<long double>(k) * (k + static_cast<long double>(nu)));
    sum += term;
    if (std::fabs(term) <= 1e-21L * std::fabs(sum) && k > 2) break;
  }
  return sum;
}

double hankel(double nu, double x) {
  const double mu = 4.0 * nu * nu;
  double p = 0.0;
  double q = 0.0;
  double term = 1.0;
  double last = INFINITY;
  for (int k = 0; k < 200; ++k) {
    if (k > 0) {
      const double odd = 2.0 * k - 1.0;
      term *= (mu - odd * odd) / (k * 8.0 * x);
    }
    if (std::fabs(term) > last) break;  // asymptotic series started diverging
    last = std::fabs(term);
    switch (k % 4) {
      case 0: p += term; break;
      case 1: q += term; break;
      case 2: p -= term; break;
      default: q -= term; break;
    }
    if (last < 1e-17) break;
  }
  const double w = x - (0.5 * nu + 0.25) * std::numbers::pi;
  return std::sqrt(2.0 / (std::numbers::pi * x)) * (p * std::cos(w) - q * std::sin(w));
}

double surface_area(int d) {
  return 2.0 * std::pow(std::numbers::pi, 0.5 * d) / std::tgamma(0.5 * d);
}

/// Radial part without normalization: J_nu(j r) / (j r / 2)^nu.
double radial_shape(double nu, double j, double r) {
  const double z = j * r;
  if (z <= kSeriesLimit) return static_cast<double>(reduced_series(nu, z));
  return bessel_j(nu, z) / std::pow(0.5 * z, nu);
}

double radial_integral(const std::function<double(double)>& f, bool kronrod) {
  if (kronrod) {
    double err = 0.0;
    return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, 0.0, 1.0, 20, 1e-15,
                                                                         &err);
  }
  boost::math::quadrature::tanh_sinh<double> rule;
  return rule.integrate(f, 0.0, 1.0, 1e-14);
}

}  // namespace

double bessel_j(double nu, double x) {
  require(nu >= 0.0, "Bessel order must be nonnegative");
  if (x < 0.0) {
    // only integer orders extend to negative arguments with a sign
    const double rounded = std::round(nu);
    require(rounded == nu, "J_nu(x) for x < 0 needs an integer order");
    const double v = bessel_j(nu, -x);
    return (static_cast<long long>(rounded) % 2 == 0) ? v : -v;
  }
  if (x == 0.0) return nu == 0.0 ? 1.0 : 0.0;
  if (x <= kSeriesLimit) {
    return static_cast<double>(std::pow(0.5L * x, static_cast<long double>(nu)) *
                               reduced_series(nu, x));
  }
  return hankel(nu, x);
}

double bessel_j_zero(double nu, int k) {
  require(k >= 1, "zero index must be positive");
  require(nu >= 0.0, "Bessel order must be nonnegative");
  constexpr double step = 0.05;
  double a = std::max(nu, 0.0) + 1e-3;
  double fa = bessel_j(nu, a);
  int found = 0;
  for (;;) {
    const double b = a + step;
    const double fb = bessel_j(nu, b);
    if ((fa > 0.0) != (fb > 0.0) || fb == 0.0) {
      if (++found == k) {
        double lo = a;
        double hi = b;
        double flo = fa;
        for (int it = 0; it < 60; ++it) {
          const double mid = 0.5 * (lo + hi);
          const double fm = bessel_j(nu, mid);
          if ((fm > 0.0) == (flo > 0.0) && fm != 0.0) {
            lo = mid;
            flo = fm;
          } else {
            hi = mid;
          }
        }
        return 0.5 * (lo + hi);
      }
    }
    a = b;
    fa = fb;
  }
}

ContinuumBallSpectrum ball_spectrum(int d) {
  require(d >= 1, "dimension must be positive");
  ContinuumBallSpectrum s;
  s.d = d;
  s.bessel_order = 0.5 * d - 1.0;
  require(s.bessel_order >= 0.0, "ball spectrum needs d >= 2");
  s.j_nu_1 = bessel_j_zero(s.bessel_order, 1);
  s.mu1 = s.j_nu_1 * s.j_nu_1 / (2.0 * d);
  const double j2 = bessel_j_zero(0.5 * d, 1);
  s.mu2 = j2 * j2 / (2.0 * d);
  return s;
}

double mu_ball(int d) { return ball_spectrum(d).mu1; }

double unit_ball_volume(int d) {
  return std::pow(std::numbers::pi, 0.5 * d) / std::tgamma(0.5 * d + 1.0);
}

std::int64_t rho_from_log(double log_n, int d, double p) {
  require(d >= 2, "rho_n needs d >= 2");
  require(p > 0.0 && p < 1.0, "p must lie in (0, 1)");
  require(log_n >= 0.0, "log n must be nonnegative");
  const double arg = d * (log_n / std::log(1.0 / p)) / unit_ball_volume(d);
  // nudge by a few ulps so exact integer radii are not lost to rounding
  const double r = std::pow(arg, 1.0 / d) * (1.0 + 4e-16);
  return static_cast<std::int64_t>(std::floor(r));
}

std::int64_t rho_n(double n, int d, double p) {
  require(n >= 1.0, "rho_n needs n >= 1");
  return rho_from_log(std::log(n), d, p);
}

const char* profile_name(ProfileKind k) {
  switch (k) {
    case ProfileKind::kPhi1L1:
      return "phi1";
    case ProfileKind::kPhi2L2:
      return "phi2";
    case ProfileKind::kPhi2Squared:
      return "phi2sq";
  }
  return "phi1";
}

ProfileKind parse_profile(const std::string& name) {
  if (name == "phi1" || name == "phi1_L1") return ProfileKind::kPhi1L1;
  if (name == "phi2" || name == "phi2_L2") return ProfileKind::kPhi2L2;
  if (name == "phi2sq" || name == "phi2_squared") return ProfileKind::kPhi2Squared;
  throw InvalidArgument("unknown profile kind '" + name + "'");
}

double ProfileTarget::value(double r) const {
  if (r < 0.0 || r >= 1.0) return 0.0;
  const double g = radial_shape(0.5 * d - 1.0, j, r) / norm;
  return kind == ProfileKind::kPhi2Squared ? g * g : g;
}

double ProfileTarget::interpolate(double r) const {
  if (r < 0.0 || r >= 1.0 || table_r.size() < 2) return 0.0;
  const auto it = std::upper_bound(table_r.begin(), table_r.end(), r);
  const auto hi = static_cast<std::size_t>(std::min<std::ptrdiff_t>(
      it - table_r.begin(), static_cast<std::ptrdiff_t>(table_r.size()) - 1));
  const std::size_t lo = hi - 1;
  const double w = (r - table_r[lo]) / (table_r[hi] - table_r[lo]);
  return (1.0 - w) * table_value[lo] + w * table_value[hi];
}

ProfileTarget profile(ProfileKind kind, int d, std::size_t table_points) {
  require(d >= 2, "profiles need d >= 2");
  require(table_points >= 2, "profile table needs at least two points");
  ProfileTarget t;
  t.kind = kind;
  t.d = d;
  const double nu = 0.5 * d - 1.0;
  t.j = bessel_j_zero(nu, 1);
  const double area = surface_area(d);
  const double j = t.j;
  auto norm_with = [&](bool kronrod) {
    if (kind == ProfileKind::kPhi1L1) {
      return area * radial_integral(
                        [&](double r) { return radial_shape(nu, j, r) * std::pow(r, d - 1); }, kronrod);
    }
    const double l2 = area * radial_integral(
                                 [&](double r) {
                                   const double g = radial_shape(nu, j, r);
                                   return g * g * std::pow(r, d - 1);
                                 },
                                 kronrod);
    return std::sqrt(l2);
  };
  t.norm = norm_with(true);
  t.norm_check = norm_with(false);
  t.table_r.resize(table_points);
  t.table_value.resize(table_points);
  for (std::size_t i = 0; i < table_points; ++i) {
    const double r = static_cast<double>(i) / static_cast<double>(table_points - 1);
    t.table_r[i] = r;
    t.table_value[i] = t.value(r);
  }
  return t;
}

double profile_integral(const ProfileTarget& target) {
  const int d = target.d;
  const double area = surface_area(d);
  return area * radial_integral(
                    [&](double r) {
                      const double v = target.value(r);
                      const double f = target.kind == ProfileKind::kPhi2L2 ? v * v : v;
                      return f * std::pow(r, d - 1);
                    },
                    true);
}

DiscreteProfile discretize_profile(const ProfileTarget& target, const Site& center, double radius,
                                   Parity cls) {
  require(radius >= 1.0, "discretization radius must be at least 1");
  DiscreteProfile out;
  out.d = target.d;
  out.sites = euclidean_ball(center, radius, target.d);
  out.values.resize(out.sites.size(), 0.0);
  const double scale = 2.0 * std::pow(radius, -target.d);
  for (std::size_t i = 0; i < out.sites.size(); ++i) {
    if (parity_of(out.sites[i], target.d) != cls) continue;
    const double r = euclidean_distance(out.sites[i], center, target.d) / radius;
    out.values[i] = scale * target.value(r);
  }
  return out;
}

ProfileDeviation compare_ball_profile(int d, double radius, std::int64_t m,
                                      std::optional<std::int64_t> t) {
  require(m >= 0, "m must be nonnegative");
  const Site origin{};
  const LatticeDomain ball = ball_domain(origin, radius, d);
  const ProfileTarget target = profile(t ? ProfileKind::kPhi2Squared : ProfileKind::kPhi1L1, d);
  MassProfile law = t ? conditional_law(ball, origin, m, Condition::bridge(m + *t, origin))
                      : conditional_law(ball, origin, m, Condition::survive_to(m));
  const Parity cls = parity_after(Parity::kEven, m);
  const double scale = std::pow(radius, d);

  ProfileDeviation out;
  out.radius = radius;
  out.m = m;
  out.t = t;
  out.peak = 2.0 * target.value(0.0);
  std::vector<double> reference(ball.size(), 0.0);
  for (std::size_t i = 0; i < ball.size(); ++i) {
    if (ball.parity(i) != cls) continue;
    const double r = euclidean_distance(ball.site(i), origin, d) / radius;
    const double expected = 2.0 * target.value(r);
    reference[i] = expected;
    out.sup_deviation = std::max(out.sup_deviation, std::fabs(scale * law.u[i] - expected));
  }
  const double z = compensated_sum(reference);
  CompensatedSum tv;
  for (std::size_t i = 0; i < ball.size(); ++i) tv.add(std::fabs(law.u[i] - reference[i] / z));
  out.total_variation = 0.5 * tv.value();
  return out;
}

}  // namespace obstacle_walk
