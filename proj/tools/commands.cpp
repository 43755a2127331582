#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "cli_support.hpp"
#include "obstacle_walk/continuum.hpp"
#include "obstacle_walk/env_io.hpp"
#include "obstacle_walk/error.hpp"
#include "obstacle_walk/killed_walk.hpp"
#include "obstacle_walk/localization.hpp"
#include "obstacle_walk/spectral.hpp"
#include "obstacle_walk/surgery.hpp"
#include "obstacle_walk/verify.hpp"

namespace obstacle_walk::cli {

namespace {

json site_json(const Site& s, int d) {
  json out = json::array();
  for (int i = 0; i < d; ++i) out.push_back(s[i]);
  return out;
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, sep)) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<std::string> coordinate_columns(int d) {
  std::vector<std::string> out;
  for (int i = 0; i < d; ++i) out.push_back("x" + std::to_string(i));
  return out;
}

void append_site(std::vector<json>& row, const Site& s, int d) {
  for (int i = 0; i < d; ++i) row.emplace_back(s[i]);
}

struct Ball {
  Site center;
  double radius = 0.0;
  int d = 0;
};

/// "c_0,...,c_{d-1},r"; when d is given the coordinate count must match.
Ball parse_ball(const std::string& text, int d = 0) {
  const auto parts = split(text, ',');
  if (parts.size() < 3) throw InvalidArgument("ball '" + text + "' must read c_0,...,c_{d-1},r");
  Ball b;
  b.d = static_cast<int>(parts.size()) - 1;
  if (d != 0 && b.d != d) {
    throw InvalidArgument("ball '" + text + "' has " + std::to_string(b.d) + " coordinates, expected " +
                          std::to_string(d));
  }
  std::string coords;
  for (int i = 0; i < b.d; ++i) coords += (i ? "," : "") + parts[static_cast<std::size_t>(i)];
  b.center = parse_site(coords, b.d);
  try {
    b.radius = std::stod(parts.back());
  } catch (const std::exception&) {
    throw InvalidArgument("bad radius in '" + text + "'");
  }
  require(b.radius >= 0.0, "ball radius must be nonnegative");
  return b;
}

std::vector<std::int64_t> parse_int_list(const std::string& text) {
  std::vector<std::int64_t> out;
  for (const auto& p : split(text, ',')) {
    try {
      out.push_back(std::stoll(p));
    } catch (const std::exception&) {
      throw InvalidArgument("bad integer '" + p + "' in '" + text + "'");
    }
  }
  return out;
}

std::vector<double> parse_number_list(const std::string& text) {
  std::vector<double> out;
  for (const auto& p : split(text, ',')) {
    try {
      out.push_back(std::stod(p));
    } catch (const std::exception&) {
      throw InvalidArgument("bad number '" + p + "' in '" + text + "'");
    }
  }
  return out;
}

std::vector<Site> read_site_file(const std::string& path, int d) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open site file '" + path + "'");
  std::vector<Site> out;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line.erase(std::remove_if(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); }),
               line.end());
    if (!line.empty()) out.push_back(parse_site(line, d));
  }
  return out;
}

LatticeDomain select_domain(const EnvironmentField& env, const Args& a) {
  require(!(a.has("domain-ball") && a.has("domain-open-cluster")),
          "give at most one of --domain-ball and --domain-open-cluster");
  if (a.has("domain-ball")) {
    const Ball b = parse_ball(a.str("domain-ball"), env.dim());
    return open_ball_domain(env, b.center, b.radius);
  }
  if (a.has("domain-open-cluster")) {
    return open_cluster_domain(env, parse_site(a.str("domain-open-cluster"), env.dim()));
  }
  return open_domain(env);
}

json shells_json(const ShellIndex& s) {
  return {{"delta", s.delta}, {"radii", s.radii}, {"counts", s.counts}, {"J", s.J}, {"clear", s.clear}};
}

Param req(std::string name, ParamKind kind, std::string help) {
  return {std::move(name), kind, std::move(help), true, nullptr};
}
Param opt(std::string name, ParamKind kind, std::string help, json fallback = nullptr) {
  return {std::move(name), kind, std::move(help), false, std::move(fallback)};
}

constexpr auto S = ParamKind::kString;
constexpr auto N = ParamKind::kNumber;
constexpr auto I = ParamKind::kInteger;
constexpr auto F = ParamKind::kFlag;
constexpr auto L = ParamKind::kList;

StepResult gen_env(const Args& a) {
  const int d = static_cast<int>(a.integer("d"));
  const Box box = parse_box(a.str("box"), d);
  EnvironmentField env = sample_environment(box, a.num("p"), static_cast<std::uint64_t>(a.integer("seed")));
  if (a.has("plant-ball")) {
    const Ball b = parse_ball(a.str("plant-ball"), d);
    env = plant_vacant_ball(env, b.center, b.radius);
  }
  const std::string bytes = serialize_environment(env);
  save_environment(env, a.str("out"));
  const ClusterLabeling labels = label_clusters(env);
  StepResult r;
  json planted = json::array();
  for (const auto& p : env.planted()) planted.push_back({{"center", site_json(p.center, d)}, {"radius", p.radius}});
  const auto largest = labels.largest();
  r.outputs = {{"d", d},
               {"box", box.describe()},
               {"p_open", env.p_open()},
               {"seed", env.seed()},
               {"generator", generator_name(env.tag())},
               {"planted", planted},
               {"sites", box.volume()},
               {"obstacles", env.closed_count()},
               {"clusters", labels.cluster_count()},
               {"largest_cluster", largest ? labels.sizes[static_cast<std::size_t>(*largest)] : 0},
               {"file_checksum",
                hex64(fnv1a64({reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()}))}};
  return r;
}

StepResult solve_pam(const Args& a) {
  const EnvironmentField env = load_environment(a.str("env"));
  const int d = env.dim();
  const Site start = parse_site(a.str("start"), d);
  const std::int64_t t = a.integer("t");
  std::vector<Site> absorbing;
  if (a.has("absorbing-ball")) {
    const Ball b = parse_ball(a.str("absorbing-ball"), d);
    absorbing = euclidean_ball(b.center, b.radius, d);
  }
  EvolveOptions options;
  options.two_step = a.flag("two-step");
  if (a.has("snap")) options.snapshots = parse_int_list(a.str("snap"));
  const Evolution ev = evolve_mass(env, start, t, absorbing, options);

  StepResult r;
  Table profile{"profile", {"t"}, {"step"}, "exact", {}};
  for (const auto& c : coordinate_columns(d)) {
    profile.columns.push_back(c);
    profile.units.push_back("site");
  }
  profile.columns.push_back("u");
  profile.units.push_back("probability");
  json snaps = json::array();
  for (const auto& p : ev.profiles) {
    snaps.push_back({{"t", p.t}, {"total_mass", p.total_mass}, {"parity", parity_name(p.parity_class)}});
    for (std::size_t i = 0; i < p.u.size(); ++i) {
      if (p.u[i] == 0.0) continue;
      std::vector<json> row{p.t};
      append_site(row, p.domain->site(i), d);
      row.emplace_back(p.u[i]);
      profile.rows.push_back(std::move(row));
    }
  }
  Table mass{"mass", {"t", "total_mass", "killed", "exited"}, {"step", "probability", "probability", "probability"}, "exact", {}};
  double killed = 0.0, exited = 0.0;
  for (std::size_t k = 0; k < ev.times.size(); ++k) {
    mass.rows.push_back({ev.times[k], ev.total_mass[k], ev.killed[k], ev.exited[k]});
    killed += ev.killed[k];
    exited += ev.exited[k];
  }
  r.outputs = {{"domain_sites", ev.domain->size()},
               {"t", t},
               {"survival", ev.total_mass.back()},
               {"killed_total", killed},
               {"exited_total", exited},
               {"snapshots", snaps}};
  r.tables = {std::move(profile), std::move(mass)};
  r.primary_table = "profile";
  return r;
}

StepResult sample(const Args& a) {
  const EnvironmentField env = load_environment(a.str("env"));
  const int d = env.dim();
  const Site start = parse_site(a.str("start"), d);
  const std::int64_t n = a.integer("n");
  const auto samples = static_cast<std::size_t>(a.integer("samples"));
  const auto seed = static_cast<std::uint64_t>(a.integer("seed"));
  const PathSampling s = sample_paths(env, start, n, samples, seed, static_cast<std::size_t>(a.integer("keep")));
  StepResult r;
  r.outputs = {{"n", n},
               {"samples", s.samples},
               {"survived", s.survived},
               {"killed", s.killed},
               {"exited", s.exited},
               {"estimate", s.estimate},
               {"standard_error", s.standard_error},
               {"provenance", "monte_carlo(" + std::to_string(samples) + ", " + std::to_string(seed) + ")"}};
  if (a.flag("compare-exact")) {
    const double exact = survival_probability(env, start, n);
    // a zero standard error only happens when every sample agrees
    const double z = s.standard_error > 0.0 ? std::fabs(s.estimate - exact) / s.standard_error
                                            : (s.estimate == exact ? 0.0 : INFINITY);
    r.outputs["exact"] = exact;
    r.outputs["z_score"] = z;
    if (z > 5.0) r.failures.push_back("monte-carlo-agreement");
  }
  Table paths{"paths", {"sample", "step"}, {"index", "step"},
              "monte_carlo(" + std::to_string(samples) + ", " + std::to_string(seed) + ")", {}};
  for (const auto& c : coordinate_columns(d)) {
    paths.columns.push_back(c);
    paths.units.push_back("site");
  }
  for (std::size_t k = 0; k < s.kept.size(); ++k) {
    for (std::size_t step = 0; step < s.kept[k].path.size(); ++step) {
      std::vector<json> row{k, step};
      append_site(row, s.kept[k].path[step], d);
      paths.rows.push_back(std::move(row));
    }
  }
  r.tables.push_back(std::move(paths));
  r.primary_table = "paths";
  return r;
}

StepResult eig(const Args& a) {
  const EnvironmentField env = load_environment(a.str("env"));
  const int d = env.dim();
  const LatticeDomain domain = select_domain(env, a);
  require(!domain.empty(), "the selected domain is empty");
  SpectralOptions options;
  options.tol = a.num("tol");
  options.second = a.flag("second");
  options.method = parse_method(a.str("method"));
  const SpectralPair pair = principal_pair(domain, options);
  StepResult r;
  r.outputs = {{"sites", domain.size()},
               {"lambda1", pair.lambda1},
               {"has_second", pair.has_second},
               {"gap", pair.gap},
               {"l2_norm_sq", pair.l2_norm_sq},
               {"parity_split",
                {{"l1_even", pair.parity_split.l1_even},
                 {"l1_odd", pair.parity_split.l1_odd},
                 {"l2_even", pair.parity_split.l2_even},
                 {"l2_odd", pair.parity_split.l2_odd}}},
               {"residual", pair.stats.residual},
               {"iterations", pair.stats.iterations},
               {"method", pair.stats.method},
               {"converged", pair.stats.converged},
               {"clamped_mass", pair.stats.clamped_mass},
               {"component", pair.component}};
  if (pair.has_second) r.outputs["lambda2"] = pair.lambda2;
  if (a.has("phi-out")) {
    Table phi{"phi", coordinate_columns(d), {}, "exact", {}};
    phi.units.assign(static_cast<std::size_t>(d), "site");
    phi.columns.push_back("phi");
    phi.units.push_back("l1-normalized");
    for (std::size_t i = 0; i < domain.size(); ++i) {
      std::vector<json> row;
      append_site(row, domain.site(i), d);
      row.emplace_back(pair.phi1[i]);
      phi.rows.push_back(std::move(row));
    }
    std::ofstream(a.str("phi-out")) << phi.to_csv();
    r.outputs["phi_file"] = a.str("phi-out");
  }
  return r;
}

StepResult localize_cmd(const Args& a) {
  const EnvironmentField env = load_environment(a.str("env"));
  const int d = env.dim();
  require(!(a.has("n") && a.has("log-n")), "give at most one of --n and --log-n");
  require(a.has("n") || a.has("log-n") || a.has("rho"), "give --n, --log-n or --rho");
  const double log_n = a.has("n") ? std::log(a.num("n")) : a.has("log-n") ? a.num("log-n") : 0.0;
  const double p = a.has("p") ? a.num("p") : env.p_open();
  LocalizationConfig config;
  config.c2 = a.num("eps-exp");
  if (a.has("eps")) config.epsilon = a.num("eps");
  config.ell = static_cast<std::int32_t>(a.integer("ell"));
  config.kappa = a.num("delta-exp");
  config.c5 = a.num("c5");
  if (a.has("rho")) config.rho = a.integer("rho");
  config.inventory = !a.flag("no-inventory");
  const LocalizationReport rep = localize(env, log_n, p, config);

  StepResult r;
  json volumes = json::array();
  for (const auto& v : rep.e_volumes) {
    volumes.push_back({{"epsilon", v.epsilon},
                       {"tile_radius", v.tile_radius},
                       {"volume", v.volume ? json(*v.volume) : json(nullptr)},
                       {"cap", v.cap}});
  }
  std::size_t open_boxes = 0, near = 0;
  Table boxes{"truly_open", coordinate_columns(d), {}, "exact", {}};
  boxes.units.assign(static_cast<std::size_t>(d), "site");
  for (const auto& c : {"stay_probability", "truly_open", "near_threshold"}) boxes.columns.push_back(c);
  for (const auto& u : {"probability", "bool", "bool"}) boxes.units.push_back(u);
  for (const auto& b : rep.truly_open) {
    open_boxes += b.truly_open;
    near += b.near_threshold;
    std::vector<json> row;
    append_site(row, b.anchor, d);
    row.emplace_back(b.stay_probability);
    row.emplace_back(b.truly_open ? 1 : 0);
    row.emplace_back(b.near_threshold ? 1 : 0);
    boxes.rows.push_back(std::move(row));
  }
  r.outputs = {{"outcome", rep.outcome == LocalizationOutcome::kLocated ? "located" : "empty"},
               {"log_n", log_n},
               {"rho", rep.rho},
               {"epsilon", rep.epsilon},
               {"e_volumes", volumes},
               {"e_set_volume", rep.e_set.volume()},
               {"e_set_tiles", rep.e_set.anchors.size()},
               {"truly_open_inventory",
                {{"boxes", rep.truly_open.size()}, {"truly_open", open_boxes}, {"near_threshold", near}}}};
  if (rep.outcome == LocalizationOutcome::kLocated) {
    r.outputs["fit_center"] = site_json(rep.fit_center, d);
    r.outputs["fit_sym_diff"] = rep.fit_sym_diff;
    r.outputs["center"] = site_json(rep.center, d);
    r.outputs["sym_diff"] = rep.sym_diff;
    r.outputs["obstacle_count_in_ball"] = rep.obstacle_count_in_ball;
    r.outputs["obstacle_bound"] = rep.obstacle_bound;
    if (rep.shells) r.outputs["shells"] = shells_json(*rep.shells);
    if (static_cast<double>(rep.obstacle_count_in_ball) > rep.obstacle_bound) {
      r.failures.push_back("obstacle-count-bound");
    }
  }
  r.tables.push_back(std::move(boxes));
  r.primary_table = "truly_open";
  return r;
}

StepResult surgery(const Args& a) {
  const EnvironmentField env = load_environment(a.str("env"));
  const int d = env.dim();
  const std::string kind = a.str("op");
  const Ball b = parse_ball(a.str("region"), d);
  SurgeryOp op;
  if (kind == "remove-ball") {
    op = remove_obstacles_in(env, euclidean_ball(b.center, b.radius, d));
  } else if (kind == "close-box") {
    std::vector<Site> sites;
    Box::around(b.center, static_cast<std::int32_t>(std::floor(b.radius)), d)
        .for_each([&](const Site& s) { sites.push_back(s); });
    op = close_region(env, std::move(sites));
  } else {
    throw InvalidArgument("--op must be remove-ball or close-box");
  }
  DomainSpec spec;
  require(!(a.has("domain-ball") && a.has("domain-open-cluster")),
          "give at most one of --domain-ball and --domain-open-cluster");
  if (a.has("domain-ball")) {
    const Ball db = parse_ball(a.str("domain-ball"), d);
    spec = DomainSpec::ball(db.center, db.radius);
  } else if (a.has("domain-open-cluster")) {
    spec = DomainSpec::cluster(parse_site(a.str("domain-open-cluster"), d));
  }
  SpectralOptions options;
  options.tol = a.num("tol");
  StepResult r;
  std::size_t changed = 0;
  for (const auto& s : op.region) changed += op.before.is_closed(s) != op.after.is_closed(s);
  r.outputs = {{"op", surgery_kind_name(op.kind)}, {"region_sites", op.region.size()}, {"sites_changed", changed}};
  try {
    const EigShift shift = eig_shift(op, spec, options);
    r.outputs["lambda_before"] = shift.lambda_before;
    r.outputs["lambda_after"] = shift.lambda_after;
    r.outputs["delta"] = shift.delta;
    r.outputs["sites_before"] = shift.sites_before;
    r.outputs["sites_after"] = shift.sites_after;
  } catch (const InvariantViolation& e) {
    r.outputs["violation"] = e.what();
    r.failures.push_back("surgery-monotonicity");
  }
  if (a.flag("drop-bound")) {
    require(op.kind == SurgeryKind::kCloseBox, "--drop-bound applies to close-box");
    const LatticeDomain d1 = resolve_domain(op.before, spec);
    std::vector<Site> d2;
    for (const auto& s : op.region) {
      if (d1.contains(s)) d2.push_back(s);
    }
    try {
      const DropBound db = drop_upper_bound_check(d1, d2, options);
      r.outputs["drop_bound"] = {{"q", db.q},
                                 {"bound", db.vacuous ? json("vacuous") : json(db.bound)},
                                 {"actual_drop", db.actual_drop},
                                 {"margin", db.vacuous ? json("vacuous") : json(db.margin)}};
    } catch (const InvariantViolation& e) {
      r.outputs["drop_bound"] = {{"violation", e.what()}};
      r.failures.push_back("drop-upper-bound");
    }
  }
  if (a.has("env-out")) save_environment(op.after, a.str("env-out"));
  return r;
}

StepResult potential(const Args& a) {
  const Ball ball = parse_ball(a.str("domain-ball"));
  const int d = ball.d;
  const LinearMethod method = parse_linear_method(a.str("method"));
  LatticeDomain domain;
  if (a.has("env")) {
    const EnvironmentField env = load_environment(a.str("env"));
    require(env.dim() == d, "--domain-ball dimension differs from the environment");
    domain = open_ball_domain(env, ball.center, ball.radius);
  } else {
    domain = ball_domain(ball.center, ball.radius, d);
  }
  StepResult r;
  r.outputs = {{"d", d}, {"domain_sites", domain.size()}};
  const auto green_sites = a.list("green");
  if (!green_sites.empty()) {
    std::vector<Site> sites;
    for (const auto& g : green_sites) sites.push_back(parse_site(g, d));
    GreenOptions go;
    go.method = method;
    go.symmetry_tol = 1.0;
    const GreenTable g = greens_function(domain, sites, sites, go);
    Table t{"green", {"u", "v", "G"}, {"site", "site", "expected visits"}, "exact", {}};
    for (std::size_t i = 0; i < sites.size(); ++i) {
      for (std::size_t j = 0; j < sites.size(); ++j) {
        t.rows.push_back({format_site(sites[i], d), format_site(sites[j], d), g.at(i, j)});
      }
    }
    r.outputs["green_method"] = g.method;
    r.outputs["green_max_asymmetry"] = g.max_asymmetry;
    if (g.max_asymmetry > 1e-10) r.failures.push_back("green-symmetry");
    r.tables.push_back(std::move(t));
    r.primary_table = "green";
  }
  if (a.has("capacity")) {
    const auto set = read_site_file(a.str("capacity"), d);
    CapacityOptions co;
    co.method = method;
    std::vector<std::int32_t> margins;
    for (const auto m : parse_int_list(a.str("margins"))) margins.push_back(static_cast<std::int32_t>(m));
    co.margins = margins;
    const CapacityResult c = capacity(set, d, co);
    r.outputs["capacity"] = {{"value", c.capacity},
                             {"truncation_error", c.truncation_error},
                             {"margins", c.margins},
                             {"box_values", c.box_values},
                             {"set_size", set.size()}};
  }
  if (a.has("escape-radius")) {
    r.outputs["escape_probability"] = {{"radius", a.num("escape-radius")},
                                       {"value", escape_probability(ball.center, a.num("escape-radius"), d, method)}};
  }
  if (a.has("harnack")) {
    const HarnackResult h = harnack_ratio(d, ball.radius, a.num("harnack"));
    r.outputs["harnack"] = {{"r1", h.r1},
                            {"r2", h.r2},
                            {"ratio", h.ratio},
                            {"one_minus_r2_over_r1", h.one_minus_ratio},
                            {"annulus_sites", h.annulus_size},
                            {"argmax_y", site_json(h.argmax_y, d)},
                            {"argmax_v", site_json(h.argmax_v, d)}};
  }
  return r;
}

StepResult iso_check(const Args& a) {
  const int d = static_cast<int>(a.integer("d"));
  const double radius = a.num("R");
  std::optional<double> small;
  if (d == 2) small = isoperimetric_suite("exhaustive", 2, 2.0).min_ratio;
  StepResult r;
  Table t{"suites", {"suite", "d", "R", "cases", "min_ratio", "argmin_size"},
          {"name", "dimension", "radius", "count", "interface per volume^(1-1/d)", "sites"}, "exact", {}};
  json suites = json::array();
  for (const auto& name : split(a.str("suite"), ',')) {
    const IsoSuiteResult res = isoperimetric_suite(name, d, radius, static_cast<std::size_t>(a.integer("cases")),
                                                   static_cast<std::uint64_t>(a.integer("seed")));
    json argmin = json::array();
    for (const auto& s : res.argmin) argmin.push_back(site_json(s, d));
    json entry = {{"suite", name}, {"cases", res.cases}, {"min_ratio", res.min_ratio}, {"argmin", argmin}};
    if (small) entry["below_small_instance_constant"] = res.min_ratio < *small;
    suites.push_back(entry);
    t.rows.push_back({name, d, radius, res.cases, res.min_ratio, res.argmin.size()});
    if (!(res.min_ratio > 0.0)) r.failures.push_back("isoperimetric-ratio-positive:" + name);
  }
  r.outputs = {{"d", d}, {"R", radius}, {"suites", suites}};
  if (small) r.outputs["small_instance_constant"] = *small;
  r.tables.push_back(std::move(t));
  r.primary_table = "suites";
  return r;
}

StepResult profile_cmd(const Args& a) {
  const int d = static_cast<int>(a.integer("d"));
  const ProfileKind kind = parse_profile(a.str("kind"));
  const double radius = a.num("radius");
  const Site center = a.has("center") ? parse_site(a.str("center"), d) : Site{};
  const Parity cls = a.str("parity") == "odd" ? Parity::kOdd : Parity::kEven;
  require(a.str("parity") == "odd" || a.str("parity") == "even", "--parity must be even or odd");
  const ProfileTarget target = profile(kind, d, static_cast<std::size_t>(a.integer("points")));
  const DiscreteProfile disc = discretize_profile(target, center, radius, cls);
  const ContinuumBallSpectrum spec = ball_spectrum(d);
  StepResult r;
  Table t{"profile", coordinate_columns(d), {}, "exact", {}};
  t.units.assign(static_cast<std::size_t>(d), "site");
  t.columns.push_back("value");
  t.units.push_back("2 radius^-d phi");
  for (std::size_t i = 0; i < disc.sites.size(); ++i) {
    std::vector<json> row;
    append_site(row, disc.sites[i], d);
    row.emplace_back(disc.values[i]);
    t.rows.push_back(std::move(row));
  }
  double total = 0.0;
  for (const double v : disc.values) total += v;
  r.outputs = {{"kind", profile_name(kind)},
               {"d", d},
               {"radius", radius},
               {"j", target.j},
               {"mu1", spec.mu1},
               {"mu2", spec.mu2},
               {"norm", target.norm},
               {"norm_check", target.norm_check},
               {"parity_sum", total},
               {"sites", disc.sites.size()}};
  r.tables.push_back(std::move(t));
  r.primary_table = "profile";
  return r;
}

StepResult profile_compare(const Args& a) {
  const int d = static_cast<int>(a.integer("d"));
  const double factor = a.num("m-factor");
  const double tol = a.num("tolerance");
  const bool bulk = a.flag("bulk");
  StepResult r;
  Table t{"deviation", {"R", "m", "t", "sup_deviation", "peak", "relative", "total_variation"},
          {"sites", "steps", "steps", "density", "density", "ratio", "probability"}, "exact", {}};
  double prev = INFINITY;
  double last_relative = 0.0;
  for (const double radius : parse_number_list(a.str("radii"))) {
    auto m = static_cast<std::int64_t>(std::llround(factor * radius * radius));
    std::optional<std::int64_t> horizon;
    if (bulk) horizon = m / 2;
    const ProfileDeviation dev = compare_ball_profile(d, radius, m, horizon);
    last_relative = dev.sup_deviation / dev.peak;
    t.rows.push_back({radius, m, horizon ? json(*horizon) : json(nullptr), dev.sup_deviation, dev.peak,
                      last_relative, dev.total_variation});
    if (dev.sup_deviation > prev) r.failures.push_back("profile-deviation-nonincreasing");
    prev = dev.sup_deviation;
  }
  if (last_relative > tol) r.failures.push_back("profile-closeness");
  r.outputs = {{"d", d}, {"mode", bulk ? "bulk" : "endpoint"}, {"tolerance", tol}, {"final_relative", last_relative}};
  r.tables.push_back(std::move(t));
  r.primary_table = "deviation";
  return r;
}

StepResult verify(const Args& a) {
  std::vector<std::string> names;
  if (a.str("suite") == "all") {
    names = suite_names();
  } else {
    names = split(a.str("suite"), ',');
  }
  VerifyOptions options;
  options.seed = static_cast<std::uint64_t>(a.integer("seed"));
  options.inject_corruption = a.flag("inject-corruption");
  StepResult r;
  Table t{"cases", {"suite", "case", "invariant", "value", "tolerance", "pass"},
          {"name", "name", "name", "measured", "threshold", "bool"}, "exact", {}};
  json summary = json::array();
  for (const auto& name : names) {
    const SuiteReport rep = run_suite(name, options);
    summary.push_back({{"suite", name}, {"cases", rep.cases.size()}, {"failures", rep.failures()}, {"pass", rep.pass()}});
    for (const auto& c : rep.cases) {
      t.rows.push_back({name, c.name, c.invariant, c.value, c.tolerance, c.pass ? 1 : 0});
      if (!c.pass) r.failures.push_back(name + "/" + c.name + ":" + c.invariant);
    }
  }
  r.outputs = {{"suites", summary}};
  r.tables.push_back(std::move(t));
  r.primary_table = "cases";
  return r;
}

}  // namespace

const std::vector<CommandSpec>& commands() {
  static const std::vector<CommandSpec> list{
      {"gen-env",
       "Sample a Bernoulli obstacle field and write it to an environment file",
       {req("d", I, "lattice dimension"), req("box", S, "lo:hi per axis, comma separated"),
        req("p", N, "probability that a site is open"), opt("seed", I, "generator seed", 0),
        opt("plant-ball", S, "vacant ball c_0,...,c_{d-1},r"), req("out", S, "environment file to write")},
       gen_env,
       true},
      {"solve-pam",
       "Exact killed-walk mass evolution",
       {req("env", S, "environment file"), req("start", S, "start site"), req("t", I, "number of steps"),
        opt("absorbing-ball", S, "extra absorbing ball c_0,...,r"), opt("snap", S, "snapshot times t1,t2,..."),
        opt("two-step", F, "advance by two steps on the start's parity class"),
        opt("out", S, "CSV (profile table) or JSON bundle")},
       solve_pam},
      {"sample",
       "Monte Carlo killed walks",
       {req("env", S, "environment file"), req("start", S, "start site"), req("n", I, "path length"),
        req("samples", I, "number of walks"), opt("seed", I, "sampling seed", 0),
        opt("keep", I, "number of trajectories to report", 0),
        opt("compare-exact", F, "compare with the exact survival probability"),
        opt("out", S, "CSV (paths table) or JSON bundle")},
       sample},
      {"eig",
       "Principal Dirichlet eigenpair of the walk on a domain",
       {req("env", S, "environment file"), opt("domain-ball", S, "open sites of the ball c_0,...,r"),
        opt("domain-open-cluster", S, "open cluster of this site"), opt("tol", N, "solver tolerance", 1e-12),
        opt("second", F, "also compute the second eigenvalue"), opt("method", S, "auto, lanczos or dense", "auto"),
        opt("phi-out", S, "CSV file for the eigenfunction"), opt("out", S, "JSON bundle")},
       eig},
      {"localize",
       "Coarse-grained localization of the vacant island",
       {req("env", S, "environment file"), opt("n", N, "time horizon n"), opt("log-n", N, "log n, for huge n"),
        opt("p", N, "open probability (defaults to the file's)"), opt("eps-exp", N, "c2 in eps = rho^-c2", 0.1),
        opt("eps", N, "explicit epsilon"), opt("ell", I, "truly-open box radius", 5),
        opt("delta-exp", N, "kappa in delta = rho^-kappa", 0.1), opt("c5", N, "shell contraction factor", 0.5),
        opt("rho", I, "override rho_n"), opt("no-inventory", F, "skip the truly-open inventory"),
        opt("out", S, "CSV (truly-open table) or JSON bundle")},
       localize_cmd},
      {"surgery",
       "Eigenvalue shift under obstacle removal or box closing",
       {req("env", S, "environment file"), req("op", S, "remove-ball or close-box"),
        req("region", S, "c_0,...,r: Euclidean ball (remove) or l_inf box (close)"),
        opt("domain-ball", S, "open sites of the ball c_0,...,r"), opt("domain-open-cluster", S, "open cluster of this site"),
        opt("tol", N, "solver tolerance", 1e-12), opt("drop-bound", F, "check the drop against 2q/(1-q)"),
        opt("env-out", S, "write the modified environment"), opt("out", S, "JSON bundle")},
       surgery},
      {"potential",
       "Green's function, capacity, escape probability and Harnack ratio",
       {req("domain-ball", S, "ball c_0,...,R"), opt("env", S, "restrict the ball to open sites of this environment"),
        opt("green", L, "sites whose pairwise Green values are reported"),
        opt("capacity", S, "file with one site per line"), opt("margins", S, "truncation margins", "8,16,32"),
        opt("escape-radius", N, "escape-before-return radius from the ball center"),
        opt("harnack", N, "inner radius R2 of the Harnack ratio"), opt("method", S, "auto, direct, cg or series", "auto"),
        opt("out", S, "CSV (green table) or JSON bundle")},
       potential},
      {"iso-check",
       "Isoperimetric ratio suites on a lattice ball",
       {opt("d", I, "dimension", 2), req("R", N, "ball radius"),
        opt("suite", S, "comma list of exhaustive, halfspace, annulus, singleton, random",
            "halfspace,annulus,singleton,random"),
        opt("cases", I, "random partitions", 1000), opt("seed", I, "seed for random partitions", 1),
        opt("out", S, "CSV (suite table) or JSON bundle")},
       iso_check},
      {"profile",
       "Discretized continuum eigenfunction profile",
       {req("kind", S, "phi1, phi2 or phi2sq"), opt("d", I, "dimension", 2), req("radius", N, "ball radius"),
        opt("center", S, "ball center"), opt("parity", S, "even or odd", "even"),
        opt("points", I, "radial table size", 201), opt("out", S, "CSV (profile table) or JSON bundle")},
       profile_cmd},
      {"profile-compare",
       "Conditioned walk law on a vacant ball against the continuum profile",
       {opt("d", I, "dimension", 2), opt("radii", S, "comma list of radii", "15,25,40"),
        opt("m-factor", N, "m = factor R^2", 8.0), opt("bulk", F, "bridge law with t = m/2 against phi2^2"),
        opt("tolerance", N, "allowed sup deviation relative to the peak at the largest R", 0.25),
        opt("out", S, "CSV (deviation table) or JSON bundle")},
       profile_compare},
      {"verify",
       "Invariant suites",
       {opt("suite", S, "all or a comma list of suite names", "all"), opt("seed", I, "fixture seed", 1),
        opt("inject-corruption", F, "add a corrupted eigenpair (negative control)"),
        opt("out", S, "CSV (cases table) or JSON bundle")},
       verify},
  };
  return list;
}

}  // namespace obstacle_walk::cli
