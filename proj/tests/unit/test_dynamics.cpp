#include "oslab/dynamics.hpp"
#include "oslab/errors.hpp"

#include <doctest.h>

#include <cmath>

using namespace oslab;

TEST_CASE("rotation steps compose and invert exactly") {
  const BaseSystem s = BaseSystem::rotation({0.3, std::sqrt(2.0) - 1.0});
  const Phase x = s.sample_phases(1, 5)[0];
  const Phase y = s.step(s.step(x, 17), -5);
  const auto a = s.coordinates(y);
  const auto b = s.coordinates(s.step(x, 12));
  CHECK(a == b);
  const auto c = s.coordinates(s.step(s.step(x, 1000), -1000));
  CHECK(c == s.coordinates(x));
  const BaseSystem inv = s.inverse();
  CHECK(inv.coordinates(inv.step(s.step(x, 9), 9)) == s.coordinates(x));
}

TEST_CASE("golden rotation keeps far orbit points accurate") {
  const BaseSystem s = BaseSystem::golden_rotation();
  const Phase x = s.sample_phases(1, 3)[0];
  const double x0 = s.coordinate(x);
  const std::int64_t n = 1'000'000'007;
  // (x0 + n * phi) mod 1 with phi in long double as the reference
  const long double phi = (std::sqrt(5.0L) - 1.0L) / 2.0L;
  long double ref = std::fmod(static_cast<long double>(x0) + static_cast<long double>(n) * phi, 1.0L);
  if (ref < 0) ref += 1.0L;
  CHECK(std::abs(s.coordinate(s.step(x, n)) - static_cast<double>(ref)) <= 1e-9);
}

TEST_CASE("grid sampling gives equally spaced midpoints") {
  const BaseSystem s = BaseSystem::golden_rotation();
  const auto p = s.sample_phases(4, 0, Sampling::grid);
  REQUIRE(p.size() == 4);
  CHECK(s.coordinate(p[0]) == doctest::Approx(0.125));
  CHECK(s.coordinate(p[3]) == doctest::Approx(0.875));
}

TEST_CASE("sampling is deterministic in the seed") {
  const BaseSystem s = BaseSystem::rotation({0.1});
  const auto a = s.sample_phases(8, 42);
  const auto b = s.sample_phases(8, 42);
  const auto c = s.sample_phases(8, 43);
  for (std::size_t i = 0; i < 8; ++i) {
    CHECK(s.coordinate(a[i]) == s.coordinate(b[i]));
  }
  CHECK(s.coordinate(a[0]) != s.coordinate(c[0]));
}

TEST_CASE("bernoulli symbols follow the weights and shift consistently") {
  const BaseSystem s = BaseSystem::bernoulli({0.25, 0.75});
  const Phase x = s.sample_phases(1, 9)[0];
  int ones = 0;
  const int n = 40000;
  for (int j = -n / 2; j < n / 2; ++j) ones += s.symbol(x, j);
  CHECK(ones / static_cast<double>(n) == doctest::Approx(0.75).epsilon(0.03));
  CHECK(s.symbol(s.step(x, 5), 0) == s.symbol(x, 5));
  CHECK(s.symbol(s.step(x, -3), 2) == s.symbol(x, -1));
  CHECK_THROWS(BaseSystem::bernoulli({0.5, 0.6}));
}

TEST_CASE("markov stationary vector of a two-state chain") {
  Eigen::MatrixXd p(2, 2);
  p << 0.9, 0.1, 0.3, 0.7;
  // pi = (q, p) / (p + q) with p = P(0->1), q = P(1->0)
  const Eigen::VectorXd pi = stationary_vector(p);
  CHECK(pi(0) == doctest::Approx(0.75));
  CHECK(pi(1) == doctest::Approx(0.25));
  const BaseSystem s = BaseSystem::markov(p, 512);
  const Phase x = s.sample_phases(1, 4)[0];
  int zeros = 0, zero_to_one = 0;
  const int n = 20000;
  for (int j = 0; j < n; ++j) {
    const int a = s.symbol(x, j);
    zeros += a == 0;
    zero_to_one += a == 0 && s.symbol(x, j + 1) == 1;
  }
  CHECK(zeros / static_cast<double>(n) == doctest::Approx(0.75).epsilon(0.05));
  CHECK(zero_to_one / static_cast<double>(zeros) == doctest::Approx(0.1).epsilon(0.15));
  // revisiting evicted states regenerates the same path
  const int early = s.symbol(x, 3);
  CHECK(s.symbol(x, 3) == early);
  CHECK(s.symbol(s.step(x, -7), 10) == early);
}

TEST_CASE("birkhoff averages of a rotation converge to the integral") {
  const BaseSystem s = BaseSystem::golden_rotation();
  const Phase x = s.sample_phases(1, 1)[0];
  const double avg = s.birkhoff_average([&](const Phase& y) { return std::cos(2 * M_PI * s.coordinate(y)); }, x, 5000);
  CHECK(std::abs(avg) < 1e-3);
}
