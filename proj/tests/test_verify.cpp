#include <doctest.h>

#include <algorithm>
#include <set>

#include "obstacle_walk/error.hpp"
#include "obstacle_walk/spectral.hpp"
#include "obstacle_walk/verify.hpp"

using namespace obstacle_walk;

TEST_CASE("every invariant suite passes") {
  for (const auto& name : suite_names()) {
    const SuiteReport r = run_suite(name);
    CHECK(r.suite == name);
    CHECK(!r.cases.empty());
    for (const auto& c : r.cases) {
      INFO(name << "/" << c.name << " " << c.invariant << " value " << c.value << " tol " << c.tolerance);
      CHECK(c.pass);
    }
    CHECK(r.pass());
  }
  CHECK_THROWS_AS(run_suite("nonsense"), InvalidArgument);
}

TEST_CASE("injected corruption is caught and named") {
  VerifyOptions o;
  o.inject_corruption = true;
  const SuiteReport r = run_suite("identities", o);
  CHECK_FALSE(r.pass());
  CHECK(r.failures() == 1);
  const auto bad = std::find_if(r.cases.begin(), r.cases.end(), [](const CaseResult& c) { return !c.pass; });
  REQUIRE(bad != r.cases.end());
  CHECK(bad->invariant == "eigen-equation");
}

TEST_CASE("random cluster domain is the largest open cluster") {
  const LatticeDomain dom = random_cluster_domain(2, 20, 0.65, 3);
  const auto comps = dom.components();
  CHECK(comps.size() == 1);
  const EnvironmentField env = sample_environment(Box::cube(2, 0, 19), 0.65, 3);
  // flood fill every open site and keep the largest component size
  std::set<Site> seen;
  std::size_t largest = 0;
  env.box().for_each([&](const Site& s) {
    if (!env.is_open(s) || seen.count(s)) return;
    std::size_t size = 0;
    std::vector<Site> stack{s};
    seen.insert(s);
    while (!stack.empty()) {
      const Site x = stack.back();
      stack.pop_back();
      ++size;
      for (const auto& y : neighbours(x, 2)) {
        if (env.in_box(y) && env.is_open(y) && seen.insert(y).second) stack.push_back(y);
      }
    }
    largest = std::max(largest, size);
  });
  CHECK(dom.size() == largest);
}

TEST_CASE("eigen equation residual") {
  const LatticeDomain two({Site{0, 0}, Site{1, 0}}, 2);
  CHECK(eigen_equation_residual(two, 0.25, {1.0, 1.0}) == doctest::Approx(0.0).scale(1.0));
  CHECK(eigen_equation_residual(two, 0.25, {1.0, -1.0}) == doctest::Approx(0.5));
}
