#include "oslab/parallel.hpp"
#include "oslab/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <numeric>
#include <stdexcept>

using namespace oslab;

TEST_CASE("parallel map is independent of the worker count") {
  auto fn = [](std::size_t i) { return to_unit(mix(7, i)); };
  const auto one = parallel_map<double>(101, 1, fn);
  const auto four = parallel_map<double>(101, 4, fn);
  CHECK(one == four);
  CHECK(pairwise_sum(one.data(), one.size()) == pairwise_sum(four.data(), four.size()));
}

TEST_CASE("parallel map rethrows worker exceptions") {
  CHECK_THROWS_AS(parallel_map<int>(10, 3, [](std::size_t i) -> int {
                    if (i == 7) throw std::runtime_error("boom");
                    return 0;
                  }),
                  std::runtime_error);
}

TEST_CASE("thread resolution falls back to the environment") {
  CHECK(resolve_threads(3) == 3);
  setenv("OSL_LAB_THREADS", "5", 1);
  CHECK(resolve_threads(0) == 5);
  setenv("OSL_LAB_THREADS", "junk", 1);
  CHECK(resolve_threads(0) == 1);
  unsetenv("OSL_LAB_THREADS");
  CHECK(resolve_threads(0) == 1);
}

TEST_CASE("pairwise sum and moments") {
  std::vector<double> v(1000);
  std::iota(v.begin(), v.end(), 1.0);
  CHECK(pairwise_sum(v.data(), v.size()) == 500500.0);
  const MeanAndError me = mean_and_error({1.0, 2.0, 3.0, 4.0});
  CHECK(me.mean == 2.5);
  CHECK(me.std_error == doctest::Approx(std::sqrt(5.0 / 3.0) / 2.0));
}

TEST_CASE("wilson interval matches the closed form") {
  const double z = 1.959964;
  for (auto [k, n] : {std::pair<std::size_t, std::size_t>{0, 10}, {3, 10}, {50, 200}, {200, 200}}) {
    const double p = static_cast<double>(k) / static_cast<double>(n);
    const double nn = static_cast<double>(n);
    const double denom = 1.0 + z * z / nn;
    const double center = (p + z * z / (2 * nn)) / denom;
    const double half = z / denom * std::sqrt(p * (1 - p) / nn + z * z / (4 * nn * nn));
    const WilsonInterval w = wilson_interval(k, n);
    CHECK(w.estimate == doctest::Approx(p));
    CHECK(w.lower == doctest::Approx(std::max(0.0, center - half)));
    CHECK(w.upper == doctest::Approx(std::min(1.0, center + half)));
  }
}

TEST_CASE("least squares and quantiles") {
  const LinearFit f = least_squares({0.0, 1.0, 2.0, 3.0}, {1.0, 3.0, 5.0, 7.0});
  CHECK(f.slope == doctest::Approx(2.0));
  CHECK(f.intercept == doctest::Approx(1.0));
  CHECK(quantile({4.0, 1.0, 3.0, 2.0}, 0.5) == doctest::Approx(2.5));
  CHECK(quantile({4.0, 1.0, 3.0, 2.0}, 1.0) == 4.0);
}
