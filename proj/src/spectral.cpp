#include "obstacle_walk/spectral.hpp"

#include <algorithm>
#include <cmath>

#include "lanczos.hpp"
#include "obstacle_walk/environment.hpp"
#include "obstacle_walk/error.hpp"
#include "obstacle_walk/killed_walk.hpp"
#include "obstacle_walk/numerics.hpp"

namespace obstacle_walk {

namespace {

constexpr std::size_t kAutoDenseLimit = 400;
constexpr std::size_t kDenseFallbackLimit = 512;

std::vector<double> start_vector(std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = static_cast<double>(splitmix64(i ^ 0x5bd1e995ull) >> 11) * 0x1.0p-53;
    v[i] = 1.0 + 0.5 * (u - 0.5);
  }
  return v;
}

void orient(std::vector<double>& v) {
  if (compensated_sum(v) < 0.0) {
    for (auto& x : v) x = -x;
  }
}

struct ComponentSolve {
  std::vector<std::int32_t> indices;
  double theta1 = 0.0;
  std::optional<double> theta2;
  ClassSpectrum spectrum;
};

}  // namespace

const char* method_name(SpectralMethod m) {
  switch (m) {
    case SpectralMethod::kAuto:
      return "auto";
    case SpectralMethod::kLanczos:
      return "lanczos";
    case SpectralMethod::kDense:
      return "dense";
  }
  return "auto";
}

SpectralMethod parse_method(const std::string& name) {
  if (name == "auto") return SpectralMethod::kAuto;
  if (name == "lanczos") return SpectralMethod::kLanczos;
  if (name == "dense") return SpectralMethod::kDense;
  throw InvalidArgument("unknown spectral method '" + name + "'");
}

namespace {

void validate(const SpectralOptions& options) {
  require(options.tol > 0.0 && options.tol < 1.0, "solver tolerance must lie in (0, 1)");
  require(options.max_matvecs >= 1, "max_matvecs must be positive");
  require(options.krylov_basis >= 4, "krylov_basis must be at least 4");
}

}  // namespace

ClassSpectrum class_spectrum(const LatticeDomain& domain, Parity cls, int count,
                             const SpectralOptions& options) {
  require(count >= 1, "need at least one eigenpair");
  validate(options);
  const TwoStepOperator op(domain, cls);
  ClassSpectrum out;
  out.members = op.members();
  const std::size_t n = op.size();
  if (n == 0) return out;

  bool dense = options.method == SpectralMethod::kDense ||
               (options.method == SpectralMethod::kAuto && domain.size() <= kAutoDenseLimit);
  detail::EigenResult res;
  if (!dense) {
    res = detail::top_eigenpairs(
        [&op](std::span<const double> in, std::span<double> o) { op.apply(in, o); }, n, count,
        options.tol, options.max_matvecs, start_vector(n), options.krylov_basis);
    out.stats.method = "lanczos";
    if (!res.converged) {
      if (domain.size() <= kDenseFallbackLimit && options.method == SpectralMethod::kAuto) {
        dense = true;
      } else {
        throw ConvergenceError("Lanczos did not converge within " +
                               std::to_string(options.max_matvecs) + " operator applications (residual " +
                               std::to_string(res.residual) + ")");
      }
    }
  }
  if (dense) {
    const std::int64_t earlier = res.matvecs;
    res = detail::dense_eigenpairs(op.dense(), n, count);
    res.matvecs = earlier;
    out.stats.method = "dense";
  }
  out.theta = res.values;
  out.eta = std::move(res.vectors);
  for (auto& v : out.eta) orient(v);
  out.stats.iterations = res.matvecs;
  out.stats.residual = res.residual;
  out.stats.converged = res.converged;
  return out;
}

SpectralPair principal_pair(const LatticeDomain& domain, const SpectralOptions& options) {
  require(!domain.empty(), "principal_pair needs a nonempty domain");
  validate(options);
  const int want = options.second ? 2 : 1;
  std::vector<ComponentSolve> solves;
  std::vector<double> thetas;
  std::int64_t iterations = 0;
  bool converged = true;
  std::string method;
  for (auto& comp : domain.components()) {
    ComponentSolve cs;
    cs.indices = std::move(comp);
    if (cs.indices.size() == 1) {
      cs.theta1 = 0.0;
      thetas.push_back(0.0);
    } else {
      const LatticeDomain sub = domain.subdomain(cs.indices);
      const Parity cls = sub.count(Parity::kEven) > 0 ? Parity::kEven : Parity::kOdd;
      cs.spectrum = class_spectrum(sub, cls, want, options);
      iterations += cs.spectrum.stats.iterations;
      converged = converged && cs.spectrum.stats.converged;
      if (method.empty() || cs.spectrum.stats.method == "lanczos") method = cs.spectrum.stats.method;
      cs.theta1 = std::max(cs.spectrum.theta.at(0), 0.0);
      for (std::size_t i = 0; i < cs.spectrum.theta.size(); ++i) {
        thetas.push_back(std::max(cs.spectrum.theta[i], 0.0));
      }
    }
    solves.push_back(std::move(cs));
  }
  std::size_t best = 0;
  for (std::size_t c = 1; c < solves.size(); ++c) {
    if (solves[c].theta1 > solves[best].theta1) best = c;
  }

  SpectralPair pair;
  pair.domain = std::make_shared<const LatticeDomain>(domain);
  pair.component = best;
  pair.stats.iterations = iterations;
  pair.stats.converged = converged;
  pair.stats.method = method.empty() ? "trivial" : method;
  const ComponentSolve& win = solves[best];
  pair.lambda1 = std::sqrt(win.theta1);
  pair.phi1.assign(domain.size(), 0.0);
  if (win.indices.size() == 1) {
    pair.phi1[static_cast<std::size_t>(win.indices[0])] = 1.0;
  } else {
    const LatticeDomain sub = domain.subdomain(win.indices);
    std::vector<double> phi(sub.size(), 0.0);
    const auto& eta = win.spectrum.eta[0];
    for (std::size_t r = 0; r < eta.size(); ++r) {
      phi[static_cast<std::size_t>(win.spectrum.members[r])] = eta[r];
    }
    std::vector<double> q(sub.size());
    sub.apply(phi, q);
    const Parity cls = sub.parity(static_cast<std::size_t>(win.spectrum.members[0]));
    for (std::size_t i = 0; i < sub.size(); ++i) {
      if (sub.parity(i) != cls) phi[i] = q[i] / pair.lambda1;
    }
    double total = compensated_sum(phi);
    for (auto& x : phi) x /= total;
    CompensatedSum clamped;
    for (auto& x : phi) {
      if (x < 0.0) {
        clamped.add(-x);
        x = 0.0;
      }
    }
    pair.stats.clamped_mass = clamped.value();
    total = compensated_sum(phi);
    for (std::size_t i = 0; i < sub.size(); ++i) {
      pair.phi1[static_cast<std::size_t>(win.indices[i])] = phi[i] / total;
    }
  }

  std::sort(thetas.begin(), thetas.end(), std::greater<>());
  if (options.second && thetas.size() >= 2) {
    pair.has_second = true;
    pair.lambda2 = std::sqrt(thetas[1]);
    pair.gap = thetas[0] - thetas[1];
  } else {
    pair.gap = thetas[0];
  }

  std::vector<double> q(domain.size());
  domain.apply(pair.phi1, q);
  double residual = 0.0;
  CompensatedSum l2;
  for (std::size_t i = 0; i < domain.size(); ++i) {
    residual = std::max(residual, std::fabs(q[i] - pair.lambda1 * pair.phi1[i]));
    const double x = pair.phi1[i];
    l2.add(x * x);
    if (domain.parity(i) == Parity::kEven) {
      pair.parity_split.l1_even += x;
      pair.parity_split.l2_even += x * x;
    } else {
      pair.parity_split.l1_odd += x;
      pair.parity_split.l2_odd += x * x;
    }
  }
  pair.parity_split.l2_even = std::sqrt(pair.parity_split.l2_even);
  pair.parity_split.l2_odd = std::sqrt(pair.parity_split.l2_odd);
  pair.l2_norm_sq = l2.value();
  pair.stats.residual = residual;
  return pair;
}

GapResult spectral_gap(const LatticeDomain& domain, const SpectralOptions& options) {
  SpectralOptions opts = options;
  opts.second = true;
  const SpectralPair pair = principal_pair(domain, opts);
  GapResult g;
  g.lambda1 = pair.lambda1;
  g.theta1 = pair.lambda1 * pair.lambda1;
  g.has_second = pair.has_second;
  g.theta2 = pair.has_second ? pair.lambda2 * pair.lambda2 : 0.0;
  g.gap = pair.gap;
  return g;
}

DenseSpectrum dense_spectrum(const LatticeDomain& domain) {
  const auto res = detail::dense_eigenpairs(dense_operator(domain), domain.size(),
                                            static_cast<int>(domain.size()));
  return {res.values, res.vectors};
}

DenseSpectrum dense_class_spectrum(const LatticeDomain& domain, Parity cls) {
  const TwoStepOperator op(domain, cls);
  if (op.size() == 0) return {};
  const auto res = detail::dense_eigenpairs(op.dense(), op.size(), static_cast<int>(op.size()));
  return {res.values, res.vectors};
}

ParityCheck parity_structure_check(const LatticeDomain& domain, double zero_tol) {
  require(domain.size() >= 2, "parity check needs at least two sites");
  require(domain.components().size() == 1, "parity check needs a connected domain");
  ParityCheck out;
  const DenseSpectrum full = dense_spectrum(domain);
  for (const auto cls : {Parity::kEven, Parity::kOdd}) {
    const DenseSpectrum half = dense_class_spectrum(domain, cls);
    std::size_t positive = 0;
    for (const double v : full.values) positive += v > zero_tol;
    if (cls == Parity::kEven) out.positive_eigenvalues = positive;
    // the top `positive` eigenvalues of Q^2 on the class are the squares, the rest vanish
    for (std::size_t k = 0; k < half.values.size(); ++k) {
      const double target = k < positive ? full.values[k] * full.values[k] : 0.0;
      out.spectrum_deviation = std::max(out.spectrum_deviation, std::fabs(half.values[k] - target));
    }
    // principal eigenvector of Q restricted to the class, renormalized in l2
    std::vector<double> restricted;
    for (std::size_t i = 0; i < domain.size(); ++i) {
      if (domain.parity(i) == cls) restricted.push_back(full.vectors[0][i]);
    }
    const double norm = std::sqrt(dot(restricted, restricted));
    const double sign = compensated_sum(restricted) < 0.0 ? -1.0 : 1.0;
    const double sign_half = compensated_sum(half.vectors[0]) < 0.0 ? -1.0 : 1.0;
    for (std::size_t r = 0; r < restricted.size(); ++r) {
      const double dev = std::fabs(sign * restricted[r] / norm - sign_half * half.vectors[0][r]);
      out.eigenvector_deviation = std::max(out.eigenvector_deviation, dev);
    }
  }
  return out;
}

double eigenfunction_value_identity_check(const LatticeDomain& domain, const SpectralPair& pair,
                                          std::int64_t t) {
  require(t >= 1, "identity check needs t >= 1");
  const auto survive = propagate(domain, std::vector<double>(domain.size(), 1.0), t);
  CompensatedSum lhs;
  for (std::size_t i = 0; i < domain.size(); ++i) lhs.add(pair.phi1[i] * (1.0 - survive[i]));
  const double rhs = 1.0 - std::pow(pair.lambda1, static_cast<double>(t));
  return std::fabs(lhs.value() - rhs);
}

double eigenfunction_value_identity_check(const LatticeDomain& domain, std::int64_t t, double tol) {
  SpectralOptions options;
  options.tol = tol;
  return eigenfunction_value_identity_check(domain, principal_pair(domain, options), t);
}

double sup_norm_bound_check(const LatticeDomain& domain, const SpectralOptions& options) {
  const SpectralPair pair = principal_pair(domain, options);
  if (!(pair.lambda1 < 1.0)) throw InvariantViolation("principal eigenvalue reached 1");
  const double sup = max_abs(pair.phi1);
  return sup / std::pow(1.0 - pair.lambda1, 0.5 * domain.dim());
}

namespace {

struct KernelSource {
  const LatticeDomain* domain;
  ClassSpectrum spectrum;
  std::vector<std::int32_t> position;  // domain index -> class position, -1 otherwise
};

KernelSource make_source(const LatticeDomain& domain, Parity cls, int count,
                         const SpectralOptions& options) {
  KernelSource src{&domain, class_spectrum(domain, cls, count, options), {}};
  src.position.assign(domain.size(), -1);
  for (std::size_t r = 0; r < src.spectrum.members.size(); ++r) {
    src.position[static_cast<std::size_t>(src.spectrum.members[r])] = static_cast<std::int32_t>(r);
  }
  return src;
}

/// Truncated expansion of P^s(a, .) up to a positive constant factor.
std::vector<double> kernel(const KernelSource& src, std::size_t a, std::int64_t s, int terms) {
  const auto& sp = src.spectrum;
  const auto ra = static_cast<std::size_t>(src.position[a]);
  const std::int64_t h = s / 2;
  const double top = sp.theta.at(0);
  std::vector<double> full(src.domain->size(), 0.0);
  const auto used = std::min<std::size_t>(static_cast<std::size_t>(terms), sp.theta.size());
  for (std::size_t i = 0; i < used; ++i) {
    const double ratio = top > 0.0 ? std::max(sp.theta[i], 0.0) / top : (i == 0 ? 1.0 : 0.0);
    const double w = std::pow(ratio, static_cast<double>(h)) * sp.eta[i][ra];
    if (w == 0.0) continue;
    for (std::size_t r = 0; r < sp.members.size(); ++r) {
      full[static_cast<std::size_t>(sp.members[r])] += w * sp.eta[i][r];
    }
  }
  if (s % 2 == 1) {
    std::vector<double> next(full.size());
    src.domain->apply(full, next);
    return next;
  }
  return full;
}

}  // namespace

ExpansionLaw expansion_law(const LatticeDomain& domain, const Site& start, std::int64_t m,
                           std::optional<std::int64_t> t, std::optional<Site> endpoint, int terms,
                           const SpectralOptions& options) {
  require(m >= 0, "m must be nonnegative");
  require(terms >= 1, "need at least one expansion term");
  require(domain.contains(start), "start " + format_site(start, domain.dim()) + " is outside the domain");
  const int d = domain.dim();
  const Site y = endpoint.value_or(start);
  if (t) {
    require(*t >= 0, "t must be nonnegative");
    require(domain.contains(y), "bridge endpoint is outside the domain");
    if ((l1_distance(y, start, d) + m + *t) % 2 != 0) {
      throw InvalidArgument("bridge conditioning is impossible by parity");
    }
  }
  const LatticeDomain comp = component_of(domain, start);
  require(!t || comp.contains(y), "bridge endpoint is not connected to the start");

  ExpansionLaw out;
  out.domain = std::make_shared<const LatticeDomain>(domain);
  out.m = m;
  out.t = t;
  out.terms = terms;
  out.law.assign(domain.size(), 0.0);

  const auto v = static_cast<std::size_t>(comp.index_of(start));
  const Parity cv = comp.parity(v);
  const KernelSource src_v = make_source(comp, cv, terms + 1, options);
  if (src_v.spectrum.theta.empty() || src_v.spectrum.theta[0] <= 0.0) {
    // isolated site: the walk cannot survive a single step
    require(m == 0 && (!t || *t == 0), "conditioning event has probability zero");
    out.law[static_cast<std::size_t>(domain.index_of(start))] = 1.0;
    return out;
  }
  std::vector<double> f = kernel(src_v, v, m, terms);
  std::int64_t decay_steps = m / 2;
  if (t) {
    const auto yi = static_cast<std::size_t>(comp.index_of(y));
    const Parity cy = comp.parity(yi);
    std::vector<double> g;
    if (cy == cv) {
      g = kernel(src_v, yi, *t, terms);
    } else {
      g = kernel(make_source(comp, cy, terms + 1, options), yi, *t, terms);
    }
    for (std::size_t i = 0; i < f.size(); ++i) f[i] *= g[i];
    decay_steps = std::min(m, *t) / 2;
  }
  const double z = compensated_sum(f);
  if (!(z > 0.0)) throw InvalidArgument("conditioning event has probability zero");
  for (std::size_t i = 0; i < comp.size(); ++i) {
    out.law[static_cast<std::size_t>(domain.index_of(comp.site(i)))] = f[i] / z;
  }
  const auto& theta = src_v.spectrum.theta;
  if (theta.size() > static_cast<std::size_t>(terms)) {
    const double ratio = std::max(theta[static_cast<std::size_t>(terms)], 0.0) / theta[0];
    const double n = static_cast<double>(comp.size());
    out.error_bound = std::pow(ratio, static_cast<double>(decay_steps)) * n * n;
  } else {
    out.error_bound = 0.0;  // every eigenpair of the class is included
  }
  return out;
}

}  // namespace obstacle_walk
