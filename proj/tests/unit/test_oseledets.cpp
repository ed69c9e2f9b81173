#include "oracles.hpp"

#include "oslab/errors.hpp"
#include "oslab/oseledets.hpp"

#include <doctest.h>

#include <cmath>

using namespace oslab;

namespace {

// g = [[2, 1], [0, 1/2]]: eigenvalue 2 on e_1, eigenvalue 1/2 on (1, -3/2).
Matrix triangular() {
  Matrix g(2, 2);
  g << 2.0, 1.0, 0.0, 0.5;
  return g;
}

Matrix line(double a, double b) {
  Matrix v(2, 1);
  v << a, b;
  return v / v.norm();
}

Matrix rotation(double t) {
  Matrix r(2, 2);
  r << std::cos(t), -std::sin(t), std::sin(t), std::cos(t);
  return r;
}

}  // namespace

TEST_CASE("finite directions of a constant non-normal matrix") {
  const BaseSystem s = BaseSystem::rotation({0.2});
  const Cocycle a = constant_cocycle(triangular());
  const Phase x = s.sample_phases(1, 1)[0];
  const Signature tau(2, {1});
  // the forward direction converges to the orthogonal complement of E_2
  const PartialDirection v = finite_direction(a, s, x, 60, tau);
  REQUIRE(v.defined);
  CHECK(oracle::principal_sine(v.value[0].basis(), line(1.5, 1.0)) <= 1e-12);
  CHECK(v.log_gap / 60 == doctest::Approx(std::log(4.0)).epsilon(0.01));
  // the adjoint direction converges to E_1
  const PartialDirection w = adjoint_direction(a, s, x, 60, tau);
  REQUIRE(w.defined);
  CHECK(oracle::principal_sine(w.value[0].basis(), line(1.0, 0.0)) <= 1e-12);
  const auto many = finite_directions(a, s, x, {5, 60}, tau);
  CHECK(flag_distance(many[1].value, v.value) <= 1e-14);
}

TEST_CASE("directions are undefined without a gap") {
  const BaseSystem s = BaseSystem::rotation({0.2});
  const Cocycle a = constant_cocycle(rotation(0.3));
  const PartialDirection v = finite_direction(a, s, s.sample_phases(1, 0)[0], 20, Signature(2, {1}));
  CHECK_FALSE(v.defined);
  CHECK(v.failed_dim == 1);
}

TEST_CASE("decomposition matches the eigen-decomposition") {
  const BaseSystem s = BaseSystem::rotation({0.2});
  const Cocycle a = constant_cocycle(triangular());
  const Phase x = s.sample_phases(1, 1)[0];
  const PartialDecomposition d = oseledets_decomposition(a, s, x, 60, Signature(2, {1}));
  REQUIRE(d.defined);
  CHECK(oracle::principal_sine(d.value[0].basis(), line(1.0, 0.0)) <= 1e-10);
  CHECK(oracle::principal_sine(d.value[1].basis(), line(1.0, -1.5)) <= 1e-10);
  CHECK(d.theta > 0.1);
  const PartialFlag f = oseledets_filtration(a, s, x, 60, Signature(2, {1}));
  REQUIRE(f.defined);
  CHECK(oracle::principal_sine(f.value[0].basis(), line(1.0, -1.5)) <= 1e-10);
}

TEST_CASE("invariance is exact for constant diagonal cocycles") {
  const BaseSystem s = BaseSystem::golden_rotation();
  const Cocycle a = constant_cocycle(Eigen::Vector3d(3.0, 1.0, 0.25).asDiagonal().toDenseMatrix());
  const Signature tau(3, {1, 2});
  for (const Phase& x : s.sample_phases(4, 3)) {
    for (auto object : {InvariantObject::filtration, InvariantObject::decomposition}) {
      const InvarianceReport r = invariance_residual(a, s, x, 64, tau, object);
      REQUIRE(r.defined);
      for (double d : r.residuals) CHECK(d <= 1e-10);
    }
  }
}

TEST_CASE("invariance residual flags collapsed components") {
  const BaseSystem s = BaseSystem::rotation({0.1});
  Matrix g = Matrix::Zero(2, 2);
  g(0, 0) = 2.0;
  const Cocycle a = constant_cocycle(g);
  const InvarianceReport r =
      invariance_residual(a, s, s.sample_phases(1, 0)[0], 10, Signature(2, {1}), InvariantObject::filtration);
  REQUIRE(r.defined);
  CHECK(r.collapsed[0]);
  CHECK(std::isnan(r.residuals[0]));
}

TEST_CASE("doubling sequences") {
  CHECK(doubling_ratio(0.5) >= 2);
  for (double eps : {0.3, 0.1}) {
    const auto m = doubling_sequence(16, 4096, eps);
    CHECK(m.front() == 16);
    CHECK(m.back() == 4096);
    for (std::size_t i = 1; i < m.size(); ++i) {
      CHECK(m[i] > m[i - 1]);
      CHECK(std::abs(static_cast<double>(m[i] - 2 * m[i - 1])) < eps * static_cast<double>(m[i]));
    }
  }
  CHECK_THROWS_AS(doubling_sequence(16, 20, 0.1), InfeasibleRange);
}

TEST_CASE("avalanche times of a gapped constant cocycle") {
  const BaseSystem s = BaseSystem::rotation({0.2});
  const Cocycle a = constant_cocycle(Eigen::Vector2d(2.0, 0.5).asDiagonal().toDenseMatrix());
  const double kappa = std::log(4.0);
  const AvalancheSchedule av = avalanche_times(a, s, s.sample_phases(1, 0)[0], kappa / 20, kappa, 16, 1024);
  CHECK(av.times.front() == 16);
  CHECK(av.times.back() == 1024);
  REQUIRE(av.log_gaps.size() == av.times.size());
  for (std::size_t i = 0; i < av.times.size(); ++i)
    CHECK(av.log_gaps[i] == doctest::Approx(kappa * static_cast<double>(av.times[i])));
  for (double r : av.log_rifts) CHECK(std::abs(r) <= 1e-9);
}

TEST_CASE("no schedule for a cocycle without a gap") {
  const BaseSystem s = BaseSystem::rotation({0.2});
  const Cocycle a = constant_cocycle(rotation(1.0));
  CHECK_THROWS_AS(avalanche_times(a, s, s.sample_phases(1, 0)[0], 0.05, 1.0, 16, 256), NoSchedule);
}

TEST_CASE("avalanche principle on a constant-axis chain") {
  const Matrix g = Eigen::Vector2d(1e5, 1.0).asDiagonal();
  const std::vector<Matrix> chain(10, g);
  const ApReport r = ap_check(chain, 1e-4, 0.5);
  CHECK(r.holds);
  CHECK(r.distance_forward <= 1e-10);
  CHECK(r.distance_adjoint <= 1e-10);
  CHECK(r.bound == doctest::Approx(kApBound * 1e-4 / 0.5));
}

TEST_CASE("avalanche principle hypotheses name the failing block") {
  const Matrix g = Eigen::Vector2d(1e5, 1.0).asDiagonal();
  std::vector<Matrix> chain(5, g);
  chain[3] = Eigen::Vector2d(10.0, 1.0).asDiagonal();
  try {
    ap_check(chain, 1e-4, 0.5);
    FAIL("expected HypothesisFailure");
  } catch (const HypothesisFailure& e) {
    CHECK(e.index() == 3);
    CHECK(e.condition() == "gap");
  }
  chain[3] = rotation(M_PI / 2) * g * rotation(M_PI / 2).transpose();
  try {
    ap_check(chain, 1e-4, 0.5);
    FAIL("expected HypothesisFailure");
  } catch (const HypothesisFailure& e) {
    CHECK(e.index() == 3);
    CHECK(e.condition() == "angle");
  }
  try {
    ap_check(std::vector<Matrix>(3, g), 1e-2, 0.5);
    FAIL("expected HypothesisFailure");
  } catch (const HypothesisFailure& e) {
    CHECK(e.condition() == "parameters");
  }
}

TEST_CASE("growth rates along vectors") {
  const BaseSystem s = BaseSystem::rotation({0.2});
  const Cocycle a = constant_cocycle(triangular());
  const Phase x = s.sample_phases(1, 0)[0];
  Vector slow(2);
  slow << 1.0, -1.5;
  const GrowthReport r = growth_rate_along(a, s, x, slow, {10, 20, 40, 80});
  CHECK(r.slope == doctest::Approx(std::log(0.5)).epsilon(1e-9));
  Vector fast(2);
  fast << 0.0, 1.0;
  CHECK(growth_rate_along(a, s, x, fast, {10, 20, 40, 80}).slope == doctest::Approx(std::log(2.0)).epsilon(1e-6));
}

TEST_CASE("first-order distances agree with direct differencing") {
  const BaseSystem s = BaseSystem::golden_rotation();
  for (const Cocycle& a : {constant_cocycle(triangular()), schrodinger_cocycle(0.0, 3.0)}) {
    for (const Phase& x : s.sample_phases(3, 5)) {
      const Signature tau(2, {1});
      std::vector<std::int64_t> scales;
      for (std::int64_t n = 2; n <= 14; ++n) scales.push_back(n);
      const std::int64_t big = 64;
      const auto logs = log_scale_distances(a, s, x, tau, scales, big);
      const PartialDirection ref = finite_direction(a, s, x, big, tau);
      REQUIRE(ref.defined);
      int compared = 0;
      for (std::size_t i = 0; i < scales.size(); ++i) {
        const PartialDirection v = finite_direction(a, s, x, scales[i], tau);
        if (!v.defined) continue;
        const double direct = subspace_distance(v.value[0], ref.value[0]);
        if (direct < 1e-10) continue;  // direct differencing has lost its digits
        CHECK(std::log(direct) == doctest::Approx(logs[0][i]).epsilon(1e-4));
        ++compared;
      }
      CHECK(compared >= 3);
    }
  }
}

TEST_CASE("convergence rate of the constant non-normal matrix") {
  const BaseSystem s = BaseSystem::rotation({0.2});
  const Cocycle a = constant_cocycle(triangular());
  std::vector<std::int64_t> scales;
  for (std::int64_t n = 16; n <= 256; n += 16) scales.push_back(n);
  scales.push_back(512);
  const ConvergenceReport r = convergence_rate(a, s, s.sample_phases(1, 0)[0], Signature(2, {1}), scales);
  REQUIRE(r.defined);
  // the exact rate is log |lambda_2 / lambda_1| = -2 log 2
  CHECK(r.slopes[0] == doctest::Approx(-2.0 * std::log(2.0)).epsilon(1e-3));
  CHECK(r.points_used[0] == scales.size() - 1);
}

TEST_CASE("alignment rate vanishes for constant diagonal cocycles") {
  const BaseSystem s = BaseSystem::rotation({0.2});
  const Cocycle a = constant_cocycle(Eigen::Vector2d(2.0, 0.5).asDiagonal().toDenseMatrix());
  const AlphaSeries al = alpha_alignment_series(a, s, s.sample_phases(1, 0)[0], {8, 64});
  REQUIRE(al.defined[1]);
  CHECK(std::abs(al.values[1]) <= 1e-14);
}
