#include "obstacle_walk/verify.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "obstacle_walk/continuum.hpp"
#include "obstacle_walk/environment.hpp"
#include "obstacle_walk/error.hpp"
#include "obstacle_walk/numerics.hpp"
#include "obstacle_walk/spectral.hpp"
#include "obstacle_walk/surgery.hpp"

namespace obstacle_walk {

bool SuiteReport::pass() const {
  return std::all_of(cases.begin(), cases.end(), [](const CaseResult& c) { return c.pass; });
}

std::size_t SuiteReport::failures() const {
  return static_cast<std::size_t>(
      std::count_if(cases.begin(), cases.end(), [](const CaseResult& c) { return !c.pass; }));
}

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"identities",     "parity", "monotonicity",
                                              "surgery-bounds", "iso",    "profiles"};
  return names;
}

LatticeDomain random_cluster_domain(int d, std::int32_t side, double p_open, std::uint64_t seed) {
  const EnvironmentField env = sample_environment(Box::cube(d, 0, side - 1), p_open, seed);
  const ClusterLabeling labels = label_clusters(env);
  const auto id = labels.largest();
  if (!id) return LatticeDomain({}, d);
  return LatticeDomain(labels.members(*id), d);
}

double eigen_equation_residual(const LatticeDomain& domain, double lambda,
                               const std::vector<double>& phi) {
  std::vector<double> q(domain.size());
  domain.apply(phi, q);
  double worst = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) worst = std::max(worst, std::fabs(q[i] - lambda * phi[i]));
  return worst / max_abs(phi);
}

namespace {

class Recorder {
 public:
  explicit Recorder(std::string suite) { report_.suite = std::move(suite); }

  /// Records `value <= tolerance`.
  void at_most(std::string name, std::string invariant, double value, double tolerance) {
    report_.cases.push_back({std::move(name), std::move(invariant), value, tolerance,
                             value <= tolerance});
  }
  /// Records `value >= tolerance`.
  void at_least(std::string name, std::string invariant, double value, double tolerance) {
    report_.cases.push_back({std::move(name), std::move(invariant), value, tolerance,
                             value >= tolerance});
  }
  void failed(std::string name, std::string invariant) {
    report_.cases.push_back({std::move(name), std::move(invariant), 0.0, 0.0, false});
  }
  SuiteReport take() { return std::move(report_); }

 private:
  SuiteReport report_;
};

struct Fixture {
  std::string name;
  LatticeDomain domain;
};

std::vector<Fixture> random_fixtures(std::size_t count, std::int32_t side2, std::int32_t side3,
                                     std::uint64_t seed) {
  static constexpr double kP[] = {0.6, 0.7, 0.8};
  std::vector<Fixture> out;
  for (std::uint64_t k = 0; out.size() < count; ++k) {
    const int d = k % 2 == 0 ? 2 : 3;
    const double p = kP[k % 3];
    const std::uint64_t s = splitmix64(seed + 1000 * k);
    LatticeDomain dom = random_cluster_domain(d, d == 2 ? side2 : side3, p, s);
    if (dom.size() < 2) continue;
    out.push_back({"d" + std::to_string(d) + "_p" + std::to_string(static_cast<int>(p * 10)) + "_" +
                       std::to_string(out.size()),
                   std::move(dom)});
  }
  return out;
}

SuiteReport identities_suite(const VerifyOptions& options) {
  Recorder rec("identities");
  for (const auto& f : random_fixtures(50, 40, 12, options.seed)) {
    const SpectralPair pair = principal_pair(f.domain);
    for (const std::int64_t t : {1, 5, 50}) {
      rec.at_most(f.name + "_t" + std::to_string(t), "eigenfunction-value-identity",
                  eigenfunction_value_identity_check(f.domain, pair, t), 1e-8);
    }
    rec.at_most(f.name, "eigen-equation", eigen_equation_residual(f.domain, pair.lambda1, pair.phi1),
                1e-9);
    rec.at_most(f.name, "l1-normalization", std::fabs(compensated_sum(pair.phi1) - 1.0), 1e-12);
  }
  if (options.inject_corruption) {
    const LatticeDomain dom = ball_domain(Site{}, 4.0, 2);
    SpectralPair pair = principal_pair(dom);
    pair.phi1[dom.size() / 2] *= 1.5;
    rec.at_most("corrupted_eigenpair", "eigen-equation",
                eigen_equation_residual(dom, pair.lambda1, pair.phi1), 1e-9);
  }
  return rec.take();
}

SuiteReport parity_suite(const VerifyOptions& options) {
  Recorder rec("parity");
  for (const auto& f : random_fixtures(30, 14, 5, options.seed)) {
    const ParityCheck pc = parity_structure_check(f.domain);
    rec.at_most(f.name, "parity-spectrum", pc.spectrum_deviation, 1e-10);
    rec.at_most(f.name, "parity-eigenvector", pc.eigenvector_deviation, 1e-10);
    const SpectralPair pair = principal_pair(f.domain);
    rec.at_most(f.name, "parity-l2-balance",
                std::fabs(pair.parity_split.l2_even - pair.parity_split.l2_odd), 1e-10);
  }
  return rec.take();
}

SuiteReport monotonicity_suite(const VerifyOptions& options) {
  Recorder rec("monotonicity");
  std::mt19937_64 rng(options.seed);
  for (const auto& f : random_fixtures(40, 20, 7, options.seed + 7)) {
    std::vector<Site> removed;
    for (const auto& s : f.domain.sites()) {
      if (rng() % 10 == 0) removed.push_back(s);
    }
    const double big = principal_eigenvalue(f.domain);
    const double small = principal_eigenvalue(f.domain.without(removed));
    rec.at_most(f.name + "_nested", "subset-monotonicity", small - big, 1e-10);
  }
  for (std::uint64_t k = 0; k < 10; ++k) {
    const int d = k % 2 == 0 ? 2 : 3;
    const std::int32_t side = d == 2 ? 24 : 8;
    const EnvironmentField env = sample_environment(Box::cube(d, 0, side - 1), 0.7, options.seed + k);
    Site c;
    for (int i = 0; i < d; ++i) c[i] = side / 2;
    const auto region = euclidean_ball(c, side / 4.0, d);
    const std::string name = "env" + std::to_string(k);
    for (const auto& op : {remove_obstacles_in(env, region), close_region(env, region)}) {
      const std::string label = name + "_" + surgery_kind_name(op.kind);
      try {
        const EigShift shift = eig_shift(op, DomainSpec::open_sites());
        const double signed_delta = op.kind == SurgeryKind::kRemoveObstaclesIn ? -shift.delta : shift.delta;
        rec.at_most(label, "surgery-monotonicity", signed_delta, 1e-10);
      } catch (const InvariantViolation&) {
        rec.failed(label, "surgery-monotonicity");
      }
    }
  }
  return rec.take();
}

SuiteReport surgery_bounds_suite(const VerifyOptions& options) {
  Recorder rec("surgery-bounds");
  std::mt19937_64 rng(options.seed + 11);
  for (const auto& f : random_fixtures(50, 20, 7, options.seed + 13)) {
    // a random l1-ball of D1 as the removed set
    const Site c = f.domain.site(rng() % f.domain.size());
    const auto radius = static_cast<std::int64_t>(rng() % 4);
    std::vector<Site> d2;
    for (const auto& s : f.domain.sites()) {
      if (l1_distance(s, c, f.domain.dim()) <= radius) d2.push_back(s);
    }
    try {
      const DropBound b = drop_upper_bound_check(f.domain, d2, {}, 1e-9);
      rec.at_least(f.name, "drop-upper-bound", b.margin, -1e-9);
    } catch (const InvariantViolation&) {
      rec.failed(f.name, "drop-upper-bound");
    }
  }
  for (const auto& f : random_fixtures(10, 20, 7, options.seed + 17)) {
    std::vector<Site> picks;
    for (int k = 0; k < 4; ++k) picks.push_back(f.domain.site(rng() % f.domain.size()));
    normalize_sites(picks);
    GreenOptions go;
    go.symmetry_tol = 1.0;
    const GreenTable g = greens_function(f.domain, picks, picks, go);
    rec.at_most(f.name, "green-symmetry", g.max_asymmetry, 1e-10);
    rec.at_most(f.name, "resolvent-identity", resolvent_identity_residual(f.domain), 1e-8);
  }
  return rec.take();
}

SuiteReport iso_suite(const VerifyOptions& options) {
  Recorder rec("iso");
  const IsoSuiteResult small = isoperimetric_suite("exhaustive", 2, 2.0);
  rec.at_least("exhaustive_R2", "isoperimetric-constant-positive", small.min_ratio, 1e-12);
  for (const double r : {5.0, 10.0}) {
    for (const char* suite : {"halfspace", "annulus", "singleton", "random"}) {
      const IsoSuiteResult res = isoperimetric_suite(suite, 2, r, 200, options.seed);
      rec.at_least(std::string(suite) + "_R" + std::to_string(static_cast<int>(r)),
                   "isoperimetric-ratio", res.min_ratio, 0.5 * small.min_ratio);
    }
  }
  return rec.take();
}

SuiteReport profiles_suite(const VerifyOptions&) {
  Recorder rec("profiles");
  for (const auto kind : {ProfileKind::kPhi1L1, ProfileKind::kPhi2L2}) {
    for (const int d : {2, 3}) {
      const ProfileTarget p = profile(kind, d);
      rec.at_most(std::string(profile_name(kind)) + "_d" + std::to_string(d),
                  "profile-normalization-quadrature", std::fabs(p.norm / p.norm_check - 1.0), 1e-10);
    }
  }
  double prev_end = std::numeric_limits<double>::infinity();
  double prev_bulk = std::numeric_limits<double>::infinity();
  for (const double r : {15.0, 25.0}) {
    const auto m = static_cast<std::int64_t>(8 * r * r);
    const ProfileDeviation end = compare_ball_profile(2, r, m);
    const ProfileDeviation bulk = compare_ball_profile(2, r, m, m / 2);
    const std::string tag = "R" + std::to_string(static_cast<int>(r));
    rec.at_most(tag + "_endpoint", "profile-closeness", end.sup_deviation / end.peak, 0.25);
    rec.at_most(tag + "_bulk", "profile-closeness", bulk.sup_deviation / bulk.peak, 0.25);
    rec.at_most(tag + "_endpoint_trend", "profile-deviation-nonincreasing", end.sup_deviation, prev_end);
    rec.at_most(tag + "_bulk_trend", "profile-deviation-nonincreasing", bulk.sup_deviation, prev_bulk);
    prev_end = end.sup_deviation;
    prev_bulk = bulk.sup_deviation;
  }
  return rec.take();
}

}  // namespace

SuiteReport run_suite(const std::string& name, const VerifyOptions& options) {
  if (name == "identities") return identities_suite(options);
  if (name == "parity") return parity_suite(options);
  if (name == "monotonicity") return monotonicity_suite(options);
  if (name == "surgery-bounds") return surgery_bounds_suite(options);
  if (name == "iso") return iso_suite(options);
  if (name == "profiles") return profiles_suite(options);
  throw InvalidArgument("unknown verify suite '" + name + "'");
}

}  // namespace obstacle_walk
