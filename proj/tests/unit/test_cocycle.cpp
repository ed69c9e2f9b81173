#include "oracles.hpp"

#include "oslab/cocycle.hpp"
#include "oslab/errors.hpp"

#include <doctest.h>

#include <cmath>

using namespace oslab;
using json = nlohmann::json;

namespace {

Matrix naive_product(const Cocycle& a, const BaseSystem& s, const Phase& x, std::int64_t n) {
  Matrix p = Matrix::Identity(a.dim(), a.dim());
  for (std::int64_t j = 0; j < n; ++j) p = a(s, s.step(x, j)) * p;
  return p;
}

}  // namespace

TEST_CASE("schrodinger matrices are unimodular") {
  const BaseSystem s = BaseSystem::golden_rotation();
  const Cocycle a = schrodinger_cocycle(0.4, 3.0);
  for (const Phase& x : s.sample_phases(5, 2)) {
    const Matrix g = a(s, x);
    CHECK(g.determinant() == doctest::Approx(1.0));
    CHECK(g(0, 0) == doctest::Approx(0.4 - 6.0 * std::cos(2 * M_PI * s.coordinate(x))));
    CHECK(g.norm() <= a.sup_norm_bound() + 1e-12);
  }
}

TEST_CASE("iterates agree with the naive ordered product") {
  const BaseSystem s = BaseSystem::golden_rotation();
  const Cocycle a = schrodinger_cocycle(0.0, 1.5);
  const Phase x = s.sample_phases(1, 7)[0];
  const Matrix ref = naive_product(a, s, x, 25);
  CHECK((iterate(a, s, x, 25).value.to_matrix() - ref).norm() <= 1e-10 * ref.norm());
  const auto many = iterate_scales(a, s, x, {3, 10, 25});
  CHECK((many[2].to_matrix() - ref).norm() <= 1e-10 * ref.norm());
  CHECK((many[0].to_matrix() - naive_product(a, s, x, 3)).norm() <= 1e-12);
}

TEST_CASE("adjoint and backward iterates") {
  const BaseSystem s = BaseSystem::golden_rotation();
  const Cocycle a = schrodinger_cocycle(0.2, 2.0);
  const Phase x = s.sample_phases(1, 8)[0];
  const Matrix back = naive_product(a, s, s.step(x, -6), 6);
  CHECK((adjoint_iterate(a, s, x, 6).value.to_matrix() - back.transpose()).norm() <= 1e-10 * back.norm());
  const IterateResult inv = backward_iterate(a, s, x, 6);
  CHECK(inv.rank == 2);
  CHECK((inv.value.to_matrix() * back - Matrix::Identity(2, 2)).norm() <= 1e-8);
  const Cocycle adj = adjoint_cocycle(a, s);
  const BaseSystem si = s.inverse();
  CHECK((iterate(adj, si, x, 6).value.to_matrix() - back.transpose()).norm() <= 1e-10 * back.norm());
}

TEST_CASE("exterior iterates resolve small singular values") {
  const BaseSystem s = BaseSystem::rotation({0.1});
  Matrix g(3, 3);
  g << 5, 1, 0, 0, 1, 1, 0, 0, 0.2;
  const Cocycle a = constant_cocycle(g);
  const Phase x = s.sample_phases(1, 1)[0];
  const ExteriorIterates e = exterior_iterates(a, s, x, {400}, 3);
  // log |det g^n| is exact: n log(5 * 1 * 0.2) = 0
  CHECK(std::abs(e.log_norm(0, 3)) <= 1e-9);
  CHECK(e.log_norm(0, 0) == 0.0);
  CHECK(e.log_norm(0, 1) / 400.0 == doctest::Approx(std::log(5.0)).epsilon(1e-3));
  const Cocycle w = exterior_cocycle(a, 2);
  CHECK(w.dim() == 3);
  CHECK((w(s, x) - exterior_power(g, 2)).norm() == 0.0);
}

TEST_CASE("diagonal random cocycle decodes symbols in mixed radix") {
  const BaseSystem s = BaseSystem::bernoulli({0.25, 0.25, 0.25, 0.25});
  const Cocycle a = diagonal_random_cocycle({{2.0, 0.5}, {3.0, 1.0 / 3.0}});
  const Phase x = s.sample_phases(1, 3)[0];
  for (int j = 0; j < 16; ++j) {
    const Phase y = s.step(x, j);
    const int sym = s.symbol(y);
    const Matrix g = a(s, y);
    CHECK(g(0, 0) == (sym % 2 == 0 ? 2.0 : 0.5));
    CHECK(g(1, 1) == (sym / 2 == 0 ? 3.0 : 1.0 / 3.0));
    CHECK(g(0, 1) == 0.0);
  }
}

TEST_CASE("catalog builds cocycles and names bad parameters") {
  CHECK(catalog("schrodinger", json{{"E", 0.0}, {"lambda", 3.0}}).dim() == 2);
  CHECK(catalog("constant", json{{"diag", {4, 2, 1}}}).dim() == 3);
  CHECK(catalog("random_glm", json{{"m", 3}, {"count", 4}, {"seed", 1}}).dim() == 3);
  try {
    catalog("schrodinger", json{{"E", 0.0}});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("cocycle.params.lambda") != std::string::npos);
  }
  CHECK_THROWS(catalog("nonexistent", json::object()));
  const auto mats = parse_matrix_csv("1,0,0,1\n\n2,0,0,0.5\n");
  REQUIRE(mats.size() == 2);
  CHECK(mats[1](1, 1) == 0.5);
  CHECK_THROWS(parse_matrix_csv("1,2,3\n"));
}

TEST_CASE("table cocycle over a partition of the circle") {
  const BaseSystem s = BaseSystem::rotation({0.25});
  const Cocycle a = table_cocycle({Matrix::Identity(2, 2), 2.0 * Matrix::Identity(2, 2)}, {0.5}, false);
  const auto p = s.sample_phases(4, 0, Sampling::grid);
  CHECK(a(s, p[0])(0, 0) == 1.0);
  CHECK(a(s, p[3])(0, 0) == 2.0);
}

TEST_CASE("generators returning non-finite matrices are rejected") {
  const BaseSystem s = BaseSystem::rotation({0.1});
  const Cocycle bad(2, [](const BaseSystem&, const Phase&) { return Matrix::Constant(2, 2, NAN); }, 1.0, "bad");
  CHECK_THROWS_AS(bad(s, s.sample_phases(1, 0)[0]), NonFinite);
  const Cocycle wrong(2, [](const BaseSystem&, const Phase&) { return Matrix::Identity(3, 3); }, 1.0, "wrong");
  CHECK_THROWS_AS(wrong(s, s.sample_phases(1, 0)[0]), DimensionMismatch);
}
