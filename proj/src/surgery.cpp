#include "obstacle_walk/surgery.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Dense>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>

#include "obstacle_walk/error.hpp"
#include "obstacle_walk/numerics.hpp"

namespace obstacle_walk {

const char* surgery_kind_name(SurgeryKind kind) {
  return kind == SurgeryKind::kRemoveObstaclesIn ? "remove_obstacles_in" : "close_box";
}

SurgeryKind parse_surgery_kind(const std::string& name) {
  if (name == "remove_obstacles_in" || name == "remove") return SurgeryKind::kRemoveObstaclesIn;
  if (name == "close_box" || name == "close") return SurgeryKind::kCloseBox;
  throw InvalidArgument("unknown surgery kind '" + name + "'");
}

namespace {

std::vector<Site> clip_region(const EnvironmentField& env, std::vector<Site> region) {
  normalize_sites(region);
  std::erase_if(region, [&](const Site& s) { return !env.in_box(s); });
  return region;
}

}  // namespace

SurgeryOp remove_obstacles_in(const EnvironmentField& env, std::vector<Site> region) {
  SurgeryOp op;
  op.kind = SurgeryKind::kRemoveObstaclesIn;
  op.region = clip_region(env, std::move(region));
  op.before = env;
  op.after = env.with_removed(op.region);
  return op;
}

SurgeryOp close_region(const EnvironmentField& env, std::vector<Site> region) {
  SurgeryOp op;
  op.kind = SurgeryKind::kCloseBox;
  op.region = clip_region(env, std::move(region));
  op.before = env;
  op.after = env.with_added(op.region);
  return op;
}

bool well_formed(const SurgeryOp& op) {
  if (!(op.before.box() == op.after.box())) return false;
  const Box& box = op.before.box();
  const bool closing = op.kind == SurgeryKind::kCloseBox;
  for (std::size_t i = 0; i < box.volume(); ++i) {
    const Site s = box.site(i);
    const bool in_region = std::binary_search(op.region.begin(), op.region.end(), s);
    const bool was = op.before.closed().test(i);
    const bool expected = in_region ? closing : was;
    if (op.after.closed().test(i) != expected) return false;
  }
  return true;
}

LatticeDomain resolve_domain(const EnvironmentField& env, const DomainSpec& spec) {
  switch (spec.kind) {
    case DomainSpec::Kind::kOpenSites:
      return open_domain(env);
    case DomainSpec::Kind::kCluster:
      return open_cluster_domain(env, spec.center);
    case DomainSpec::Kind::kBall:
      return open_ball_domain(env, spec.center, spec.radius);
  }
  return open_domain(env);
}

double principal_eigenvalue(const LatticeDomain& domain, const SpectralOptions& options) {
  if (domain.empty()) return 0.0;
  return principal_pair(domain, options).lambda1;
}

EigShift eig_shift(const SurgeryOp& op, const DomainSpec& spec, const SpectralOptions& options,
                   double monotonicity_tol) {
  require(well_formed(op), "surgery op is not well formed");
  const LatticeDomain before = resolve_domain(op.before, spec);
  const LatticeDomain after = resolve_domain(op.after, spec);
  EigShift out;
  out.sites_before = before.size();
  out.sites_after = after.size();
  out.lambda_before = principal_eigenvalue(before, options);
  out.lambda_after = principal_eigenvalue(after, options);
  out.delta = out.lambda_after - out.lambda_before;
  const bool removing = op.kind == SurgeryKind::kRemoveObstaclesIn;
  if ((removing && out.delta < -monotonicity_tol) || (!removing && out.delta > monotonicity_tol)) {
    throw InvariantViolation(std::string("eigenvalue monotonicity violated by ") +
                             surgery_kind_name(op.kind) + ": delta = " + std::to_string(out.delta));
  }
  return out;
}

DropBound drop_upper_bound_check(const LatticeDomain& d1, const std::vector<Site>& d2,
                                 const SpectralOptions& options, double margin_tol) {
  require(!d1.empty(), "D1 must be nonempty");
  std::vector<Site> removed = d2;
  normalize_sites(removed);
  for (const auto& s : removed) {
    require(d1.contains(s), "D2 must lie inside D1; " + format_site(s, d1.dim()) + " does not");
  }
  DropBound out;
  const SpectralPair pair = principal_pair(d1, options);
  out.lambda_d1 = pair.lambda1;
  const double norm_sq = dot(pair.phi1, pair.phi1);
  std::vector<Site> window = outer_boundary(removed, d1.dim());
  window.insert(window.end(), removed.begin(), removed.end());
  normalize_sites(window);
  CompensatedSum mass;
  for (const auto& s : window) {
    const auto i = d1.index_of(s);
    if (i >= 0) mass.add(pair.phi1[static_cast<std::size_t>(i)] * pair.phi1[static_cast<std::size_t>(i)]);
  }
  out.q = mass.value() / norm_sq;
  out.vacuous = out.q >= 1.0;
  out.bound = out.vacuous ? std::numeric_limits<double>::infinity() : 2.0 * out.q / (1.0 - out.q);
  out.lambda_rest = principal_eigenvalue(d1.without(removed), options);
  out.actual_drop = out.lambda_d1 - out.lambda_rest;
  out.margin = out.bound - out.actual_drop;
  if (out.margin < -margin_tol) {
    throw InvariantViolation("drop " + std::to_string(out.actual_drop) + " exceeds the bound " +
                             std::to_string(out.bound));
  }
  return out;
}

const char* linear_method_name(LinearMethod m) {
  switch (m) {
    case LinearMethod::kAuto:
      return "auto";
    case LinearMethod::kDirect:
      return "direct";
    case LinearMethod::kConjugateGradient:
      return "cg";
    case LinearMethod::kSeries:
      return "series";
  }
  return "auto";
}

LinearMethod parse_linear_method(const std::string& name) {
  if (name == "auto") return LinearMethod::kAuto;
  if (name == "direct") return LinearMethod::kDirect;
  if (name == "cg") return LinearMethod::kConjugateGradient;
  if (name == "series") return LinearMethod::kSeries;
  throw InvalidArgument("unknown linear method '" + name + "'");
}

namespace {

using SparseMatrix = Eigen::SparseMatrix<double>;

SparseMatrix resolvent_matrix(const LatticeDomain& domain) {
  const auto n = static_cast<Eigen::Index>(domain.size());
  const int deg = 2 * domain.dim();
  const double w = 1.0 / deg;
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(domain.size() * static_cast<std::size_t>(deg + 1));
  for (std::size_t i = 0; i < domain.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    entries.emplace_back(r, r, 1.0);
    for (int k = 0; k < deg; ++k) {
      const auto j = domain.neighbour(i, k);
      if (j >= 0) entries.emplace_back(r, j, -w);
    }
  }
  SparseMatrix m(n, n);
  m.setFromTriplets(entries.begin(), entries.end());
  return m;
}

LinearMethod choose_method(const LatticeDomain& domain, LinearMethod requested) {
  if (requested != LinearMethod::kAuto) return requested;
  const std::size_t limit = domain.dim() == 2 ? 4'000'000 : 40'000;
  return domain.size() <= limit ? LinearMethod::kDirect : LinearMethod::kConjugateGradient;
}

/// Solves (I - P|_A) x = b for several right-hand sides.
class ResolventSolver {
 public:
  ResolventSolver(const LatticeDomain& domain, LinearMethod method, double tol,
                  std::int64_t max_iterations)
      : domain_(domain), method_(choose_method(domain, method)), tol_(tol) {
    if (method_ == LinearMethod::kSeries) {
      lambda_ = principal_eigenvalue(domain);
      require(lambda_ < 1.0, "the series diverges when lambda = 1");
      max_iterations_ = max_iterations;
      return;
    }
    matrix_ = resolvent_matrix(domain);
    if (method_ == LinearMethod::kDirect) {
      ldlt_.compute(matrix_);
      if (ldlt_.info() != Eigen::Success) throw ConvergenceError("sparse LDLT factorization failed");
    } else {
      cg_.setTolerance(std::min(tol, 1e-13));
      cg_.setMaxIterations(static_cast<Eigen::Index>(max_iterations));
      cg_.compute(matrix_);
    }
  }

  LinearMethod method() const { return method_; }
  std::int64_t iterations() const { return iterations_; }

  std::vector<double> solve(const std::vector<double>& b) {
    const Eigen::Map<const Eigen::VectorXd> rhs(b.data(), static_cast<Eigen::Index>(b.size()));
    Eigen::VectorXd x;
    if (method_ == LinearMethod::kSeries) return series(b);
    if (method_ == LinearMethod::kDirect) {
      x = ldlt_.solve(rhs);
    } else {
      x = cg_.solve(rhs);
      iterations_ += cg_.iterations();
      if (cg_.info() != Eigen::Success) {
        throw ConvergenceError("conjugate gradient did not reach its tolerance");
      }
    }
    return {x.data(), x.data() + x.size()};
  }

 private:
  // sum_t P^t b, stopped once the l2 tail bound |term|_2 lambda/(1-lambda)
  // drops below tol |sum|_inf
  std::vector<double> series(const std::vector<double>& b) {
    std::vector<double> acc = b;
    std::vector<double> term = b;
    std::vector<double> next(b.size());
    for (std::int64_t it = 1; it <= max_iterations_; ++it) {
      domain_.apply(term, next);
      term.swap(next);
      for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += term[i];
      ++iterations_;
      const double tail = std::sqrt(dot(term, term)) * lambda_ / (1.0 - lambda_);
      if (tail <= tol_ * 1e-2 * max_abs(acc)) return acc;
    }
    throw ConvergenceError("Green series did not converge");
  }

  const LatticeDomain& domain_;
  LinearMethod method_;
  double tol_;
  double lambda_ = 0.0;
  std::int64_t max_iterations_ = 0;
  std::int64_t iterations_ = 0;
  SparseMatrix matrix_;
  Eigen::SimplicialLDLT<SparseMatrix> ldlt_;
  Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper> cg_;
};

std::vector<double> unit(std::size_t n, std::size_t i) {
  std::vector<double> e(n, 0.0);
  e[i] = 1.0;
  return e;
}

}  // namespace

GreenTable greens_function(const LatticeDomain& domain, const std::vector<Site>& sources,
                           const std::vector<Site>& targets, const GreenOptions& options) {
  require(!domain.empty(), "Green's function needs a nonempty domain");
  for (const auto* set : {&sources, &targets}) {
    for (const auto& s : *set) {
      require(domain.contains(s), "site " + format_site(s, domain.dim()) + " is outside the domain");
    }
  }
  ResolventSolver solver(domain, options.method, options.tol, options.max_iterations);
  GreenTable out;
  out.sources = sources;
  out.targets = targets;
  out.method = linear_method_name(solver.method());
  // column G(., v) = (I - P)^{-1} e_v; solving for both sides gives G(u,v) and G(v,u)
  std::vector<Site> all = sources;
  all.insert(all.end(), targets.begin(), targets.end());
  normalize_sites(all);
  std::vector<std::vector<double>> columns(all.size());
  for (std::size_t k = 0; k < all.size(); ++k) {
    columns[k] = solver.solve(unit(domain.size(), static_cast<std::size_t>(domain.index_of(all[k]))));
  }
  auto column = [&](const Site& s) -> const std::vector<double>& {
    return columns[static_cast<std::size_t>(std::lower_bound(all.begin(), all.end(), s) - all.begin())];
  };
  out.values.resize(sources.size() * targets.size());
  for (std::size_t i = 0; i < sources.size(); ++i) {
    const auto ui = static_cast<std::size_t>(domain.index_of(sources[i]));
    for (std::size_t j = 0; j < targets.size(); ++j) {
      const auto vj = static_cast<std::size_t>(domain.index_of(targets[j]));
      const double uv = column(targets[j])[ui];
      const double vu = column(sources[i])[vj];
      out.values[i * targets.size() + j] = uv;
      out.max_asymmetry = std::max(out.max_asymmetry, std::fabs(uv - vu));
      if (!(uv >= 0.0)) throw InvariantViolation("negative Green value");
    }
  }
  out.iterations = solver.iterations();
  if (out.max_asymmetry > options.symmetry_tol) {
    throw InvariantViolation("Green's function asymmetry " + std::to_string(out.max_asymmetry));
  }
  return out;
}

double resolvent_identity_residual(const LatticeDomain& domain, const SpectralOptions& spectral,
                                   const GreenOptions& options) {
  const SpectralPair pair = principal_pair(domain, spectral);
  ResolventSolver solver(domain, options.method, options.tol, options.max_iterations);
  // G is symmetric, so sum_v Phi(v) G(v, x) is the solve with right-hand side Phi
  const std::vector<double> g_phi = solver.solve(pair.phi1);
  double worst = 0.0;
  for (std::size_t x = 0; x < domain.size(); ++x) {
    worst = std::max(worst, std::fabs(pair.phi1[x] - (1.0 - pair.lambda1) * g_phi[x]));
  }
  return worst / max_abs(pair.phi1);
}

namespace {

/// Never-return probabilities from each site of `a` with killing outside `box`.
std::vector<double> escape_in_box(const std::vector<Site>& a, const Box& box, LinearMethod method) {
  const int d = box.dim();
  std::vector<Site> rest;
  rest.reserve(box.volume());
  box.for_each([&](const Site& s) {
    if (!std::binary_search(a.begin(), a.end(), s)) rest.push_back(s);
  });
  const LatticeDomain u(std::move(rest), d);
  const double w = 1.0 / (2 * d);
  // h(y) = P^y(hit A before leaving the box); (I - P|_U) h = P 1_A
  std::vector<double> b(u.size(), 0.0);
  for (const auto& s : a) {
    for (const auto& y : neighbours(s, d)) {
      const auto i = u.index_of(y);
      if (i >= 0) b[static_cast<std::size_t>(i)] += w;
    }
  }
  ResolventSolver solver(u, method, 1e-12, 100'000);
  const std::vector<double> h = solver.solve(b);
  std::vector<double> esc;
  esc.reserve(a.size());
  for (const auto& s : a) {
    CompensatedSum ret;
    for (const auto& y : neighbours(s, d)) {
      if (std::binary_search(a.begin(), a.end(), y)) {
        ret.add(w);
      } else {
        const auto i = u.index_of(y);
        if (i >= 0) ret.add(w * h[static_cast<std::size_t>(i)]);
      }
    }
    esc.push_back(1.0 - ret.value());
  }
  return esc;
}

/// Fits value(L) = E + sum_k c_k L^{-(d-2+k)} through the given points and
/// returns E.
double extrapolate(const std::vector<double>& margins, const std::vector<double>& values, int d) {
  const auto n = static_cast<Eigen::Index>(margins.size());
  Eigen::MatrixXd a(n, n);
  Eigen::VectorXd b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    a(i, 0) = 1.0;
    for (Eigen::Index k = 1; k < n; ++k) {
      a(i, k) = std::pow(margins[static_cast<std::size_t>(i)], -static_cast<double>(d - 3 + k));
    }
    b(i) = values[static_cast<std::size_t>(i)];
  }
  return a.colPivHouseholderQr().solve(b)(0);
}

}  // namespace

CapacityResult capacity(const std::vector<Site>& a_in, int d, const CapacityOptions& options) {
  require(d >= 3, "capacity is defined for d >= 3; use escape_probability in d = 2");
  require(!a_in.empty(), "capacity needs a nonempty set");
  require(options.margins.size() >= 2, "need at least two truncation boxes");
  std::vector<Site> a = a_in;
  normalize_sites(a);
  std::vector<std::int32_t> margins = options.margins;
  std::sort(margins.begin(), margins.end());
  require(margins.front() >= 1, "margins must be positive");
  const LatticeDomain hull(a, d);
  const Box& bounds = hull.bounds();
  CapacityResult out;
  out.margins = margins;
  std::vector<double> xs;
  for (const auto m : margins) {
    std::array<std::int32_t, kMaxDim> lo{}, hi{};
    for (int i = 0; i < d; ++i) {
      lo[static_cast<std::size_t>(i)] = bounds.lo(i) - m;
      hi[static_cast<std::size_t>(i)] = bounds.hi(i) + m;
    }
    const Box box(d, std::span(lo.data(), static_cast<std::size_t>(d)),
                  std::span(hi.data(), static_cast<std::size_t>(d)));
    out.escape = escape_in_box(a, box, options.method);
    out.box_values.push_back(compensated_sum(out.escape));
    xs.push_back(static_cast<double>(m));
  }
  out.capacity = extrapolate(xs, out.box_values, d);
  const std::size_t k = xs.size();
  if (k == 2) {
    // no independent second fit: fall back to the raw distance to the largest box
    out.truncation_error = std::fabs(out.capacity - out.box_values.back());
    if (out.capacity < 0.0) throw InvariantViolation("negative capacity");
    return out;
  }
  const double two_point = extrapolate({xs[k - 2], xs[k - 1]}, {out.box_values[k - 2], out.box_values[k - 1]}, d);
  out.truncation_error = std::fabs(out.capacity - two_point);
  if (out.capacity < 0.0) throw InvariantViolation("negative capacity");
  return out;
}

double escape_probability(const Site& z, double radius, int d, LinearMethod method) {
  require(radius >= 1.0, "escape radius must be at least 1");
  std::vector<Site> ball = euclidean_ball(z, radius, d);
  std::erase(ball, z);
  const LatticeDomain u(std::move(ball), d);
  const double w = 1.0 / (2 * d);
  std::vector<double> b(u.size(), 0.0);
  for (const auto& y : neighbours(z, d)) b[static_cast<std::size_t>(u.index_of(y))] = w;
  ResolventSolver solver(u, method, 1e-12, 1'000'000);
  const std::vector<double> h = solver.solve(b);
  CompensatedSum ret;
  for (const auto& y : neighbours(z, d)) ret.add(w * h[static_cast<std::size_t>(u.index_of(y))]);
  return 1.0 - ret.value();
}

HarnackResult harnack_ratio(int d, double r1, double r2) {
  require(r2 >= 0.0 && r2 < r1, "need 0 <= R2 < R1");
  const LatticeDomain ball = ball_domain(Site{}, r1, d);
  const double outer = r1 - (r1 - r2) / 3.0;
  const double inner = r1 - 2.0 * (r1 - r2) / 3.0;
  std::vector<std::size_t> annulus;
  std::vector<std::size_t> core;
  for (std::size_t i = 0; i < ball.size(); ++i) {
    const auto r_sq = static_cast<double>(squared_distance(ball.site(i), Site{}, d));
    if (r_sq <= outer * outer && r_sq > inner * inner) annulus.push_back(i);
    if (r_sq <= r2 * r2) core.push_back(i);
  }
  if (annulus.empty()) throw InvalidArgument("the source annulus contains no lattice site");
  HarnackResult out;
  out.r1 = r1;
  out.r2 = r2;
  out.one_minus_ratio = 1.0 - r2 / r1;
  out.annulus_size = annulus.size();
  const auto origin = static_cast<std::size_t>(ball.index_of(Site{}));
  ResolventSolver solver(ball, LinearMethod::kDirect, 1e-12, 0);
  out.ratio = 0.0;
  auto consider = [&](std::size_t y, std::size_t v, double gyv, double guv) {
    const double r = gyv / guv;
    if (r > out.ratio) {
      out.ratio = r;
      out.argmax_y = ball.site(y);
      out.argmax_v = ball.site(v);
    }
  };
  // by symmetry of G, solve from whichever side has fewer sites
  if (annulus.size() <= core.size() + 1) {
    for (const auto v : annulus) {
      const auto g = solver.solve(unit(ball.size(), v));
      for (const auto y : core) consider(y, v, g[y], g[origin]);
    }
  } else {
    const auto g0 = solver.solve(unit(ball.size(), origin));
    for (const auto y : core) {
      const auto g = solver.solve(unit(ball.size(), y));
      for (const auto v : annulus) consider(y, v, g[v], g0[v]);
    }
  }
  return out;
}

LineFit fit_harnack_exponent(const std::vector<HarnackResult>& sweep) {
  require(sweep.size() >= 2, "need at least two sweep points");
  Eigen::MatrixXd a(static_cast<Eigen::Index>(sweep.size()), 2);
  Eigen::VectorXd b(static_cast<Eigen::Index>(sweep.size()));
  for (std::size_t i = 0; i < sweep.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    a(r, 0) = -std::log(sweep[i].one_minus_ratio);
    a(r, 1) = 1.0;
    b(r) = std::log(sweep[i].ratio);
  }
  const Eigen::VectorXd coef = a.colPivHouseholderQr().solve(b);
  return {coef(0), coef(1)};
}

RemovalGain removal_gain_check(const EnvironmentField& env, const Site& x_v, std::int64_t rho,
                               double delta, double c5, const RemovalGainOptions& options) {
  const int d = env.dim();
  RemovalGain out;
  out.shells = shell_index(env, x_v, rho, delta, c5);
  if (out.shells.clear) {
    throw InvalidArgument("inner ball B(x_V, (1 - delta) rho) is clear: no removal experiment");
  }
  out.J = out.shells.J;
  const auto j = static_cast<std::size_t>(out.J);
  const double r_outer = out.shells.radii[j - 1];
  const double r_inner = out.shells.radii[j];
  std::vector<Site> annulus;
  std::vector<Site> core;
  for (const auto& s : euclidean_ball(x_v, r_outer, d)) {
    if (!env.in_box(s) || !env.is_closed(s)) continue;
    const double dist = euclidean_distance(s, x_v, d);
    (dist <= r_inner ? core : annulus).push_back(s);
  }
  out.annulus_obstacles = annulus.size();
  out.core_obstacles = core.size();
  out.m = annulus.size() + core.size();
  const double work = options.work_factor * static_cast<double>(rho);
  const EnvironmentField stage1 = env.with_removed(annulus);
  const EnvironmentField stage2 = stage1.with_removed(core);
  out.lambda_base = principal_eigenvalue(open_ball_domain(env, x_v, work), options.spectral);
  out.lambda_annulus_removed = principal_eigenvalue(open_ball_domain(stage1, x_v, work), options.spectral);
  out.lambda_all_removed = principal_eigenvalue(open_ball_domain(stage2, x_v, work), options.spectral);
  out.gain = out.lambda_all_removed - out.lambda_annulus_removed;
  const auto r = static_cast<double>(rho);
  out.floor_shape = std::pow(static_cast<double>(out.m) / std::pow(r, d), 1.0 - 1.0 / d) / (r * r);
  out.ratio = out.floor_shape > 0.0 ? out.gain / out.floor_shape : 0.0;
  return out;
}

double fit_floor_constant(const std::vector<RemovalGain>& fixtures) {
  require(!fixtures.empty(), "no fixtures to fit");
  double c = std::numeric_limits<double>::infinity();
  for (const auto& f : fixtures) {
    if (f.floor_shape > 0.0) c = std::min(c, f.ratio);
  }
  return c;
}

BoxSelection low_impact_box_selection(const EnvironmentField& env, const LatticeDomain& v,
                                      std::int32_t ell, double b1, double b2,
                                      const BoxSelectionOptions& options) {
  require(ell >= 1, "ell must be at least 1");
  require(!v.empty(), "V must be nonempty");
  const int d = env.dim();
  const auto boxes = detect_truly_open(env, ell);
  std::vector<Site> open_anchors;
  std::vector<Site> other_anchors;
  for (const auto& b : boxes) (b.truly_open ? open_anchors : other_anchors).push_back(b.anchor);

  BoxSelection out;
  out.truly_open = open_anchors.size();
  // sites of the box outside every full tile, and everything beyond the box,
  // are outside the truly-open union; per axis the tiled range is an interval
  std::array<std::int32_t, kMaxDim> tiled_lo{}, tiled_hi{};
  for (int i = 0; i < d; ++i) {
    tiled_lo[static_cast<std::size_t>(i)] = std::numeric_limits<std::int32_t>::max();
    tiled_hi[static_cast<std::size_t>(i)] = std::numeric_limits<std::int32_t>::min();
  }
  for (const auto& b : boxes) {
    for (int i = 0; i < d; ++i) {
      auto& lo = tiled_lo[static_cast<std::size_t>(i)];
      auto& hi = tiled_hi[static_cast<std::size_t>(i)];
      lo = std::min(lo, b.anchor[i] - ell);
      hi = std::max(hi, b.anchor[i] + ell);
    }
  }
  const std::int64_t reach = 100 * std::int64_t{ell};
  auto eligible = [&](const Site& x) {
    for (int i = 0; i < d; ++i) {
      if (x[i] - reach < tiled_lo[static_cast<std::size_t>(i)] ||
          x[i] + reach > tiled_hi[static_cast<std::size_t>(i)]) {
        return true;
      }
    }
    return std::any_of(other_anchors.begin(), other_anchors.end(),
                       [&](const Site& a) { return linf_distance(a, x, d) <= reach + ell; });
  };

  const SpectralPair pair = principal_pair(v, options.spectral);
  out.lambda_before = pair.lambda1;
  out.phi_l2_sq = dot(pair.phi1, pair.phi1);
  bool found = false;
  for (const auto& x : open_anchors) {
    if (!eligible(x)) continue;
    ++out.eligible;
    CompensatedSum mass;
    Box::around(x, 11 * ell, d).for_each([&](const Site& s) {
      const auto i = v.index_of(s);
      if (i >= 0) mass.add(pair.phi1[static_cast<std::size_t>(i)] * pair.phi1[static_cast<std::size_t>(i)]);
    });
    const double m = mass.value();
    if (!found || m < out.window_mass) {
      found = true;
      out.anchor = x;
      out.window_mass = m;
    }
  }
  if (!found) throw InvalidArgument("no truly-open box lies near the boundary of the truly-open union");
  if (out.window_mass <= out.phi_l2_sq / 2.0) out.bound = 4.0 * out.window_mass / out.phi_l2_sq;

  std::vector<Site> closing;
  Box::around(out.anchor, 10 * ell, d).for_each([&](const Site& s) { closing.push_back(s); });
  out.domain_after = v.without(closing);
  out.env_after = env.with_added(closing);
  out.lambda_after = principal_eigenvalue(out.domain_after, options.spectral);
  out.drop = out.lambda_before - out.lambda_after;
  if (options.rho) {
    const auto r = static_cast<double>(*options.rho);
    out.drop_shape = b1 * b1 * std::pow(b2, -2.0 * (d - 1)) * std::pow(ell, 2.0 * (d + 2)) *
                      std::pow(r, -static_cast<double>(d + 2));
  }
  if (out.drop > out.bound + options.bound_tol) {
    throw InvariantViolation("closing K(" + format_site(out.anchor, d) + ", 10 ell) dropped lambda by " +
                             std::to_string(out.drop) + ", above the bound " + std::to_string(out.bound));
  }
  return out;
}

std::vector<BoxSelection> iterated_box_selection(const EnvironmentField& env,
                                                 const LatticeDomain& v, std::int32_t ell,
                                                 double b1, double b2, int rounds,
                                                 const BoxSelectionOptions& options) {
  require(rounds >= 0, "rounds must be nonnegative");
  std::vector<BoxSelection> steps;
  EnvironmentField cur_env = env;
  LatticeDomain cur = v;
  for (int k = 0; k < rounds && !cur.empty(); ++k) {
    steps.push_back(low_impact_box_selection(cur_env, cur, ell, b1, b2, options));
    cur_env = steps.back().env_after;
    cur = steps.back().domain_after;
  }
  return steps;
}

IsoResult isoperimetric_check(int d, double radius, const std::vector<bool>& in_a1) {
  const std::vector<Site> ball = euclidean_ball(Site{}, radius, d);
  require(in_a1.size() == ball.size(), "membership flags must cover the ball");
  const LatticeDomain dom(ball, d);
  IsoResult out;
  for (std::size_t i = 0; i < ball.size(); ++i) (in_a1[i] ? out.size1 : out.size2)++;
  for (std::size_t i = 0; i < ball.size(); ++i) {
    // i counts toward the boundary of the other side when a neighbour is there
    bool touches_other = false;
    for (int k = 0; k < 2 * d; ++k) {
      const auto j = dom.neighbour(i, k);
      if (j >= 0 && in_a1[static_cast<std::size_t>(j)] != in_a1[i]) touches_other = true;
    }
    if (touches_other) (in_a1[i] ? out.boundary2 : out.boundary1)++;
  }
  out.min_interface = std::min(out.boundary1, out.boundary2);
  const auto small = static_cast<double>(std::min(out.size1, out.size2));
  out.floor = std::pow(small, 1.0 - 1.0 / d);
  if (small > 0.0) out.ratio = static_cast<double>(out.min_interface) / out.floor;
  return out;
}

IsoResult isoperimetric_check(int d, double radius, const std::vector<Site>& a1) {
  const std::vector<Site> ball = euclidean_ball(Site{}, radius, d);
  std::vector<bool> flags(ball.size(), false);
  for (const auto& s : a1) {
    const auto it = std::lower_bound(ball.begin(), ball.end(), s);
    require(it != ball.end() && *it == s, "A1 site " + format_site(s, d) + " lies outside the ball");
    flags[static_cast<std::size_t>(it - ball.begin())] = true;
  }
  return isoperimetric_check(d, radius, flags);
}

IsoSuiteResult isoperimetric_suite(const std::string& suite, int d, double radius,
                                   std::size_t random_cases, std::uint64_t seed) {
  const std::vector<Site> ball = euclidean_ball(Site{}, radius, d);
  IsoSuiteResult out;
  out.suite = suite;
  out.d = d;
  out.radius = radius;
  auto record = [&](const std::vector<bool>& flags) {
    const IsoResult r = isoperimetric_check(d, radius, flags);
    ++out.cases;
    if (r.ratio && *r.ratio < out.min_ratio) {
      out.min_ratio = *r.ratio;
      out.argmin.clear();
      for (std::size_t i = 0; i < ball.size(); ++i) {
        if (flags[i]) out.argmin.push_back(ball[i]);
      }
    }
  };
  std::vector<bool> flags(ball.size());
  const auto r_int = static_cast<std::int32_t>(std::floor(radius));
  if (suite == "exhaustive") {
    require(ball.size() <= kExhaustiveIsoCap, "exhaustive enumeration is capped at 16 sites");
    const std::uint64_t total = std::uint64_t{1} << ball.size();
    for (std::uint64_t mask = 1; mask + 1 < total; ++mask) {
      for (std::size_t i = 0; i < ball.size(); ++i) flags[i] = (mask >> i) & 1u;
      record(flags);
    }
  } else if (suite == "halfspace") {
    // cuts {x_axis < k} along every axis, and the diagonal cuts {sum x < k}
    for (int axis = 0; axis <= d; ++axis) {
      for (std::int32_t k = -r_int + 1; k <= r_int; ++k) {
        for (std::size_t i = 0; i < ball.size(); ++i) {
          std::int64_t coord = 0;
          if (axis < d) {
            coord = ball[i][axis];
          } else {
            for (int c = 0; c < d; ++c) coord += ball[i][c];
          }
          flags[i] = coord < k;
        }
        record(flags);
      }
    }
  } else if (suite == "annulus") {
    // inner balls B(0, r) and shells r1 < |x| <= r2
    for (std::int32_t r_in = -1; r_in < r_int; ++r_in) {
      for (std::int32_t r_out = r_in + 1; r_out <= r_int; ++r_out) {
        for (std::size_t i = 0; i < ball.size(); ++i) {
          const auto sq = squared_distance(ball[i], Site{}, d);
          const bool above = r_in < 0 || sq > std::int64_t{r_in} * r_in;
          flags[i] = above && sq <= std::int64_t{r_out} * r_out;
        }
        record(flags);
      }
    }
  } else if (suite == "singleton") {
    for (std::size_t k = 0; k < ball.size(); ++k) {
      std::fill(flags.begin(), flags.end(), false);
      flags[k] = true;
      record(flags);
    }
  } else if (suite == "random") {
    std::mt19937_64 rng(seed);
    for (std::size_t c = 0; c < random_cases; ++c) {
      for (std::size_t i = 0; i < ball.size(); ++i) flags[i] = (rng() >> 63) != 0;
      record(flags);
    }
  } else {
    throw InvalidArgument("unknown isoperimetric suite '" + suite + "'");
  }
  return out;
}

}  // namespace obstacle_walk
