#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "obstacle_walk/continuum.hpp"
#include "obstacle_walk/env_io.hpp"
#include "obstacle_walk/error.hpp"
#include "obstacle_walk/killed_walk.hpp"
#include "obstacle_walk/localization.hpp"
#include "obstacle_walk/parallel.hpp"
#include "obstacle_walk/spectral.hpp"
#include "obstacle_walk/surgery.hpp"
#include "obstacle_walk/verify.hpp"

namespace py = pybind11;
using namespace obstacle_walk;

namespace {

using Coords = std::vector<std::int32_t>;

Site to_site(const Coords& c) {
  require(!c.empty() && c.size() <= static_cast<std::size_t>(kMaxDim), "site must have 1 to 4 coordinates");
  return Site::from_span(c);
}

py::tuple to_tuple(const Site& s, int d) {
  py::tuple t(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) t[static_cast<std::size_t>(i)] = s[i];
  return t;
}

std::vector<Site> to_sites(const std::vector<Coords>& list) {
  std::vector<Site> out;
  out.reserve(list.size());
  for (const auto& c : list) out.push_back(to_site(c));
  return out;
}

py::array_t<std::int32_t> sites_array(const std::vector<Site>& sites, int d) {
  py::array_t<std::int32_t> out({static_cast<py::ssize_t>(sites.size()), static_cast<py::ssize_t>(d)});
  auto m = out.mutable_unchecked<2>();
  for (std::size_t i = 0; i < sites.size(); ++i) {
    for (int k = 0; k < d; ++k) m(static_cast<py::ssize_t>(i), k) = sites[i][k];
  }
  return out;
}

py::array_t<double> vec_array(const std::vector<double>& v) { return py::array_t<double>(v.size(), v.data()); }

Box make_box(const Coords& lo, const Coords& hi) {
  require(lo.size() == hi.size(), "lo and hi must have the same length");
  return Box(static_cast<int>(lo.size()), lo, hi);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Killed random walks among Bernoulli obstacles";
  m.attr("__version__") = "0.1.0";

  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
  py::register_exception<ConvergenceError>(m, "ConvergenceError", PyExc_RuntimeError);
  py::register_exception<InvariantViolation>(m, "InvariantViolation", PyExc_AssertionError);

  m.def("set_threads", &set_thread_count, py::arg("n"));
  m.def("threads", &thread_count);

  py::class_<EnvironmentField>(m, "Environment")
      .def_property_readonly("d", &EnvironmentField::dim)
      .def_property_readonly("p_open", &EnvironmentField::p_open)
      .def_property_readonly("seed", &EnvironmentField::seed)
      .def_property_readonly("generator", [](const EnvironmentField& e) { return generator_name(e.tag()); })
      .def_property_readonly("lo", [](const EnvironmentField& e) {
        Coords c;
        for (int i = 0; i < e.dim(); ++i) c.push_back(e.box().lo(i));
        return c;
      })
      .def_property_readonly("hi", [](const EnvironmentField& e) {
        Coords c;
        for (int i = 0; i < e.dim(); ++i) c.push_back(e.box().hi(i));
        return c;
      })
      .def_property_readonly("obstacle_count", &EnvironmentField::closed_count)
      .def("is_open", [](const EnvironmentField& e, const Coords& s) { return e.is_open(to_site(s)); })
      .def("obstacles", [](const EnvironmentField& e) { return sites_array(e.obstacle_sites(), e.dim()); })
      .def("closed_mask",
           [](const EnvironmentField& e) {
             const Box& b = e.box();
             std::vector<py::ssize_t> shape;
             for (int i = 0; i < e.dim(); ++i) shape.push_back(b.extent(i));
             py::array_t<bool> out(shape);
             bool* p = out.mutable_data();
             for (std::size_t i = 0; i < b.volume(); ++i) p[i] = e.closed().test(i);
             return out;
           },
           "Boolean array over the box, first axis slowest")
      .def("with_removed", [](const EnvironmentField& e, const std::vector<Coords>& s) { return e.with_removed(to_sites(s)); })
      .def("with_added", [](const EnvironmentField& e, const std::vector<Coords>& s) { return e.with_added(to_sites(s)); })
      .def("__eq__", [](const EnvironmentField& a, const EnvironmentField& b) { return a == b; });

  m.def("sample_environment",
        [](const Coords& lo, const Coords& hi, double p, std::uint64_t seed) {
          return sample_environment(make_box(lo, hi), p, seed);
        },
        py::arg("lo"), py::arg("hi"), py::arg("p"), py::arg("seed") = 0);
  m.def("environment_from_obstacles",
        [](const Coords& lo, const Coords& hi, const std::vector<Coords>& obstacles) {
          return environment_from_obstacles(make_box(lo, hi), to_sites(obstacles));
        },
        py::arg("lo"), py::arg("hi"), py::arg("obstacles"));
  m.def("plant_vacant_ball",
        [](const EnvironmentField& e, const Coords& c, double r) { return plant_vacant_ball(e, to_site(c), r); },
        py::arg("env"), py::arg("center"), py::arg("radius"));
  m.def("save_environment", &save_environment, py::arg("env"), py::arg("path"));
  m.def("load_environment", &load_environment, py::arg("path"));
  m.def("serialize_environment",
        [](const EnvironmentField& e) { return py::bytes(serialize_environment(e)); }, py::arg("env"));
  m.def("deserialize_environment",
        [](const py::bytes& b) { return deserialize_environment(std::string(b)); }, py::arg("data"));
  m.def("euclidean_ball",
        [](const Coords& c, double r) { return sites_array(euclidean_ball(to_site(c), r, static_cast<int>(c.size())), static_cast<int>(c.size())); },
        py::arg("center"), py::arg("radius"));

  py::class_<LatticeDomain>(m, "Domain")
      .def(py::init([](const std::vector<Coords>& sites) {
             require(!sites.empty(), "use a site list with at least one site");
             return LatticeDomain(to_sites(sites), static_cast<int>(sites.front().size()));
           }),
           py::arg("sites"))
      .def_property_readonly("d", &LatticeDomain::dim)
      .def("__len__", &LatticeDomain::size)
      .def("sites", [](const LatticeDomain& dom) { return sites_array(dom.sites(), dom.dim()); })
      .def("contains", [](const LatticeDomain& dom, const Coords& s) { return dom.contains(to_site(s)); })
      .def("index_of", [](const LatticeDomain& dom, const Coords& s) { return dom.index_of(to_site(s)); })
      .def("apply", [](const LatticeDomain& dom, const std::vector<double>& v) {
        require(v.size() == dom.size(), "vector length must equal the domain size");
        std::vector<double> out(v.size());
        dom.apply(v, out);
        return vec_array(out);
      });
  m.def("open_domain", &open_domain, py::arg("env"));
  m.def("open_cluster_domain",
        [](const EnvironmentField& e, const Coords& s) { return open_cluster_domain(e, to_site(s)); },
        py::arg("env"), py::arg("site"));
  m.def("open_ball_domain",
        [](const EnvironmentField& e, const Coords& c, double r) { return open_ball_domain(e, to_site(c), r); },
        py::arg("env"), py::arg("center"), py::arg("radius"));
  m.def("ball_domain",
        [](const Coords& c, double r) { return ball_domain(to_site(c), r, static_cast<int>(c.size())); },
        py::arg("center"), py::arg("radius"));
  m.def("box_domain", [](const Coords& lo, const Coords& hi) { return box_domain(make_box(lo, hi)); },
        py::arg("lo"), py::arg("hi"));

  m.def("survival_probability",
        [](const EnvironmentField& e, const Coords& s, std::int64_t n) { return survival_probability(e, to_site(s), n); },
        py::arg("env"), py::arg("start"), py::arg("n"));
  m.def("evolve_mass",
        [](const EnvironmentField& e, const Coords& s, std::int64_t t, const std::vector<Coords>& absorbing,
           bool two_step) {
          EvolveOptions o;
          o.two_step = two_step;
          o.snapshots = {t};
          const auto abs = to_sites(absorbing);
          const Evolution ev = evolve_mass(e, to_site(s), t, abs, o);
          const MassProfile& p = ev.profiles.back();
          py::dict out;
          out["sites"] = sites_array(p.domain->sites(), e.dim());
          out["u"] = vec_array(p.u);
          out["times"] = ev.times;
          out["total_mass"] = vec_array(ev.total_mass);
          out["killed"] = vec_array(ev.killed);
          out["exited"] = vec_array(ev.exited);
          return out;
        },
        py::arg("env"), py::arg("start"), py::arg("t"), py::arg("absorbing") = std::vector<Coords>{},
        py::arg("two_step") = false);
  m.def("sample_paths",
        [](const EnvironmentField& e, const Coords& s, std::int64_t n, std::size_t samples, std::uint64_t seed) {
          const PathSampling ps = sample_paths(e, to_site(s), n, samples, seed);
          py::dict out;
          out["samples"] = ps.samples;
          out["survived"] = ps.survived;
          out["killed"] = ps.killed;
          out["exited"] = ps.exited;
          out["estimate"] = ps.estimate;
          out["standard_error"] = ps.standard_error;
          return out;
        },
        py::arg("env"), py::arg("start"), py::arg("n"), py::arg("samples"), py::arg("seed") = 0);

  m.def("principal_pair",
        [](const LatticeDomain& dom, double tol, bool second, const std::string& method) {
          SpectralOptions o;
          o.tol = tol;
          o.second = second;
          o.method = parse_method(method);
          const SpectralPair p = principal_pair(dom, o);
          py::dict out;
          out["lambda1"] = p.lambda1;
          out["phi1"] = vec_array(p.phi1);
          if (p.has_second) {
            out["lambda2"] = p.lambda2;
            out["gap"] = p.gap;
          }
          out["l2_norm_sq"] = p.l2_norm_sq;
          out["residual"] = p.stats.residual;
          out["method"] = p.stats.method;
          out["parity_split"] = py::dict(py::arg("l1_even") = p.parity_split.l1_even,
                                         py::arg("l1_odd") = p.parity_split.l1_odd,
                                         py::arg("l2_even") = p.parity_split.l2_even,
                                         py::arg("l2_odd") = p.parity_split.l2_odd);
          return out;
        },
        py::arg("domain"), py::arg("tol") = 1e-12, py::arg("second") = false, py::arg("method") = "auto");
  m.def("eigenfunction_value_identity_check",
        [](const LatticeDomain& dom, std::int64_t t) { return eigenfunction_value_identity_check(dom, t); },
        py::arg("domain"), py::arg("t"));
  m.def("eigen_equation_residual", &eigen_equation_residual, py::arg("domain"), py::arg("lam"), py::arg("phi"));

  m.def("mu_ball", &mu_ball, py::arg("d"));
  m.def("rho_n", &rho_n, py::arg("n"), py::arg("d"), py::arg("p"));
  m.def("rho_from_log", &rho_from_log, py::arg("log_n"), py::arg("d"), py::arg("p"));
  m.def("profile_value",
        [](const std::string& kind, int d, const std::vector<double>& r) {
          const ProfileTarget t = profile(parse_profile(kind), d);
          std::vector<double> out;
          for (const double x : r) out.push_back(t.value(x));
          return vec_array(out);
        },
        py::arg("kind"), py::arg("d"), py::arg("r"));
  m.def("compare_ball_profile",
        [](int d, double radius, std::int64_t m_steps, std::optional<std::int64_t> t) {
          const ProfileDeviation dev = compare_ball_profile(d, radius, m_steps, t);
          return py::dict(py::arg("sup_deviation") = dev.sup_deviation, py::arg("peak") = dev.peak,
                          py::arg("total_variation") = dev.total_variation);
        },
        py::arg("d"), py::arg("radius"), py::arg("m"), py::arg("t") = py::none());

  m.def("localize",
        [](const EnvironmentField& e, double log_n, double p, double c2, std::int32_t ell, double kappa, double c5,
           std::optional<std::int64_t> rho) {
          LocalizationConfig c;
          c.c2 = c2;
          c.ell = ell;
          c.kappa = kappa;
          c.c5 = c5;
          c.rho = rho;
          const LocalizationReport r = localize(e, log_n, p, c);
          py::dict out;
          out["located"] = r.outcome == LocalizationOutcome::kLocated;
          out["rho"] = r.rho;
          out["epsilon"] = r.epsilon;
          out["e_set_volume"] = r.e_set.volume();
          if (r.outcome == LocalizationOutcome::kLocated) {
            out["center"] = to_tuple(r.center, e.dim());
            out["sym_diff"] = r.sym_diff;
            out["obstacle_count_in_ball"] = r.obstacle_count_in_ball;
            out["obstacle_bound"] = r.obstacle_bound;
          }
          return out;
        },
        py::arg("env"), py::arg("log_n"), py::arg("p"), py::arg("c2") = 0.1, py::arg("ell") = 5,
        py::arg("kappa") = 0.1, py::arg("c5") = 0.5, py::arg("rho") = py::none());

  m.def("principal_eigenvalue", [](const LatticeDomain& dom) { return principal_eigenvalue(dom); },
        py::arg("domain"));
  m.def("drop_upper_bound_check",
        [](const LatticeDomain& d1, const std::vector<Coords>& d2) {
          const DropBound b = drop_upper_bound_check(d1, to_sites(d2));
          py::dict out;
          out["q"] = b.q;
          out["vacuous"] = b.vacuous;
          out["bound"] = b.bound;
          out["actual_drop"] = b.actual_drop;
          return out;
        },
        py::arg("d1"), py::arg("d2"));
  m.def("greens_function",
        [](const LatticeDomain& dom, const std::vector<Coords>& sources, const std::vector<Coords>& targets,
           const std::string& method) {
          GreenOptions o;
          o.method = parse_linear_method(method);
          const GreenTable g = greens_function(dom, to_sites(sources), to_sites(targets), o);
          py::array_t<double> out({static_cast<py::ssize_t>(g.sources.size()), static_cast<py::ssize_t>(g.targets.size())});
          std::copy(g.values.begin(), g.values.end(), out.mutable_data());
          return out;
        },
        py::arg("domain"), py::arg("sources"), py::arg("targets"), py::arg("method") = "auto");
  m.def("capacity",
        [](const std::vector<Coords>& set, std::vector<std::int32_t> margins) {
          require(!set.empty(), "capacity needs a nonempty set");
          CapacityOptions o;
          o.margins = std::move(margins);
          const CapacityResult c = capacity(to_sites(set), static_cast<int>(set.front().size()), o);
          return py::dict(py::arg("capacity") = c.capacity, py::arg("truncation_error") = c.truncation_error,
                          py::arg("box_values") = c.box_values);
        },
        py::arg("sites"), py::arg("margins") = std::vector<std::int32_t>{8, 16, 32});
  m.def("escape_probability",
        [](const Coords& z, double radius) { return escape_probability(to_site(z), radius, static_cast<int>(z.size())); },
        py::arg("z"), py::arg("radius"));
  m.def("harnack_ratio", [](int d, double r1, double r2) { return harnack_ratio(d, r1, r2).ratio; },
        py::arg("d"), py::arg("r1"), py::arg("r2"));
  m.def("isoperimetric_suite",
        [](const std::string& suite, int d, double radius, std::size_t cases, std::uint64_t seed) {
          const IsoSuiteResult r = isoperimetric_suite(suite, d, radius, cases, seed);
          return py::dict(py::arg("cases") = r.cases, py::arg("min_ratio") = r.min_ratio,
                          py::arg("argmin") = sites_array(r.argmin, d));
        },
        py::arg("suite"), py::arg("d"), py::arg("radius"), py::arg("cases") = 1000, py::arg("seed") = 1);

  m.def("verify_suite_names", &suite_names);
  m.def("verify",
        [](const std::string& suite, std::uint64_t seed, bool inject_corruption) {
          const SuiteReport rep = run_suite(suite, {seed, inject_corruption});
          py::list cases;
          for (const auto& c : rep.cases) {
            cases.append(py::dict(py::arg("name") = c.name, py::arg("invariant") = c.invariant,
                                  py::arg("value") = c.value, py::arg("tolerance") = c.tolerance,
                                  py::arg("pass") = c.pass));
          }
          return py::dict(py::arg("suite") = rep.suite, py::arg("pass") = rep.pass(), py::arg("cases") = cases);
        },
        py::arg("suite"), py::arg("seed") = 1, py::arg("inject_corruption") = false);
}
