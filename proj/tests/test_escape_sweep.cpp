#include <doctest.h>

#include <cmath>
#include <vector>

#include "obstacle_walk/surgery.hpp"

using namespace obstacle_walk;

TEST_CASE("d = 2 escape probability decays like 1 / log R") {
  // 1 / G_R(0, 0) with G_R(0, 0) = (2 / pi)(log R + gamma + 1.5 log 2) + O(1 / R)
  const double euler_gamma = 0.5772156649015329;
  std::vector<double> scaled;
  for (int k = 5; k <= 10; ++k) {
    const double r = std::ldexp(1.0, k);
    const double e = escape_probability(Site{}, r, 2);
    const double asymptotic = M_PI / (2.0 * (std::log(r) + euler_gamma + 1.5 * std::log(2.0)));
    INFO("R = " << r << " escape " << e << " asymptotic " << asymptotic);
    CHECK(e == doctest::Approx(asymptotic).epsilon(0.01));
    scaled.push_back(e * std::log(r));
  }
  for (std::size_t i = 1; i < scaled.size(); ++i) {
    CHECK(scaled[i] > scaled[i - 1]);
    CHECK(scaled[i] / scaled[i - 1] < 1.1);
    CHECK(scaled[i] < M_PI / 2.0);
  }
}
