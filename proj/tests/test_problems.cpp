#include <doctest.h>

#include <cmath>
#include <fstream>
#include <random>

#include "aa/problems.hpp"
#include "oracles.hpp"

using aa::Matrix;
using aa::Vector;

TEST_CASE("residual examples") {
  const auto p41 = aa::builtin("prob41");
  CHECK(p41.residual(Vector{0.0, 0.0}) == Vector{0.0, 0.0});

  const auto ex = aa::builtin("example32_stall");
  CHECK(ex.residual(Vector{-2.0, 2.0}) == Vector{1.0, 1.0});
  CHECK(ex.apply(Vector{-2.0, 2.0}) == Vector{-3.0, 1.0});

  const auto nl = aa::builtin("prob43_nonlinear");
  CHECK(nl.residual(Vector{0.0, 0.0}) == Vector{0.0, 0.0});
  CHECK(nl.linear() == nullptr);
  // q(x) = ((x1 + x1² + x2²)/2, (x2 + x1²)/2) evaluated by hand at (1, 2).
  CHECK(nl.apply(Vector{1.0, 2.0}) == Vector{3.0, 1.5});

  CHECK_THROWS_AS(p41.residual(Vector{1.0}), aa::DimensionError);
}

TEST_CASE("builtin registry data") {
  const auto p41 = aa::builtin("prob41");
  CHECK(*p41.x_star() == Vector{0.0, 0.0});
  CHECK(p41.linear()->iteration_matrix() == Matrix{{2.0 / 3.0, 0.25}, {0.0, 1.0 / 3.0}});

  const auto p42 = aa::builtin("prob42");
  CHECK(p42.linear()->iteration_matrix() == Matrix{{0.5784, 0.0}, {0.0, 0.999}});
  CHECK(*p42.default_x0() == Vector{0.0001, 0.3023});

  const auto ex = aa::builtin("example32_stall");
  CHECK(ex.linear()->system_matrix() == Matrix{{-0.5, 0.0}, {0.0, 0.5}});

  const auto nrbe = aa::builtin("prob_nrbe");
  const Vector xs = *nrbe.x_star();
  CHECK(xs[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(xs[1] == doctest::Approx(1.0).epsilon(1e-15));
  // q(x) = M(x − b) + b with b = (1, 1).
  const Matrix m{{8.0 / 9.0, 0.25}, {0.0, 2.0 / 3.0}};
  const Vector x{0.3, -0.4};
  const Vector expected = m * (x - Vector{1.0, 1.0}) + Vector{1.0, 1.0};
  CHECK(aa::norm2(nrbe.apply(x) - expected) <= 1e-15);

  for (const auto& name : aa::builtin_names()) {
    const auto p = aa::builtin(name);
    REQUIRE(p.x_star());
    CHECK(aa::norm2(p.residual(*p.x_star())) <= 1e-14);
    CHECK(p.name() == name);
  }
}

TEST_CASE("unknown builtin names the valid ones") {
  try {
    (void)aa::builtin("nope");
    FAIL("expected UnknownProblemError");
  } catch (const aa::UnknownProblemError& e) {
    const std::string msg = e.what();
    for (const auto& name : aa::builtin_names()) CHECK(msg.find(name) != std::string::npos);
  }
  CHECK_THROWS_AS(aa::resolve_problem("builtin:zzz"), aa::UnknownProblemError);
}

TEST_CASE("linear problem invariants") {
  CHECK_THROWS_AS(aa::LinearProblem(Matrix(2, 2, 0.0), Vector{1.0, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(aa::LinearProblem(Matrix::identity(2), Vector{1.0, 1.0}), aa::SingularMatrixError);
  CHECK_THROWS_AS(aa::LinearProblem(Matrix{{0.5, 0.0}, {0.0, 0.5}}, Vector{1.0, 1.0}, Vector{0.0, 0.0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(aa::LinearProblem(Matrix{{0.5, 0.0, 0.0}}, Vector{1.0}), aa::DimensionError);
  const aa::LinearProblem lp(Matrix{{0.5, 0.0}, {0.0, 0.5}}, Vector{1.0, 1.0});
  CHECK(lp.x_star()[0] == doctest::Approx(2.0));

  std::mt19937_64 gen(17);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + trial % 5;
    const aa::LinearProblem p(0.4 * oracle::random_matrix(gen, n, n), oracle::random_vector(gen, n));
    const Vector x = oracle::random_vector(gen, n);
    const Vector y = oracle::random_vector(gen, n);
    const Vector lhs = p.residual(x) - p.residual(y);
    const Vector rhs = p.system_matrix() * (x - y);
    CHECK(aa::norm2(lhs - rhs) <= 1e-14 * (1.0 + aa::norm2(rhs)));
    CHECK(aa::norm2(p.residual(x) - (x - p.apply(x))) <= 1e-14 * (1.0 + aa::norm2(x)));
  }
}

TEST_CASE("nonlinear problem checks its fixed point") {
  auto q = [](const Vector& x) { return Vector{0.5 * x[0] + 1.0}; };
  CHECK_NOTHROW(aa::NonlinearProblem(1, q, Vector{2.0}));
  CHECK_THROWS_AS(aa::NonlinearProblem(1, q, Vector{1.0}), std::invalid_argument);
}

TEST_CASE("json problems") {
  const auto p = aa::problem_from_json(R"({"M": [[0.5, 0.1], [0.0, 0.25]], "b": [1, 2], "x0": [0.1, 0.2]})");
  REQUIRE(p.linear() != nullptr);
  CHECK(p.dimension() == 2);
  CHECK(*p.default_x0() == Vector{0.1, 0.2});
  CHECK(aa::norm2(p.residual(*p.x_star())) <= 1e-14);

  CHECK(aa::problem_from_json(R"({"builtin": "prob41"})").name() == "prob41");
  CHECK_THROWS_AS(aa::problem_from_json("{"), std::invalid_argument);
  CHECK_THROWS_AS(aa::problem_from_json(R"({"M": [[1, 2], [3]], "b": [1, 2]})"), aa::DimensionError);
  CHECK_THROWS_AS(aa::problem_from_json(R"({"b": [1, 2]})"), std::invalid_argument);
  CHECK_THROWS_AS(aa::problem_from_json(R"({"M": [[0.5]], "b": ["x"]})"), std::invalid_argument);
  CHECK_THROWS_AS(aa::load_problem_file("/nonexistent/problem.json"), std::invalid_argument);

  const std::string path = "test_problem_tmp.json";
  {
    std::ofstream os(path);
    os << R"({"M": [[0.5]], "b": [1], "x_star": [2]})";
  }
  const auto loaded = aa::resolve_problem(path);
  CHECK((*loaded.x_star())[0] == doctest::Approx(2.0));
  std::remove(path.c_str());
}

TEST_CASE("eigen_directions_2x2") {
  const Matrix a{{1.0 / 3.0, -0.25}, {0.0, 2.0 / 3.0}};
  const auto pairs = aa::eigen_directions_2x2(a);
  REQUIRE(pairs.size() == 2);
  CHECK(pairs[0].value == doctest::Approx(1.0 / 3.0));
  CHECK(pairs[1].value == doctest::Approx(2.0 / 3.0));
  CHECK(std::abs(pairs[0].vector[1]) <= 1e-15);
  // Parallel to (1, −4/3): cross product vanishes.
  CHECK(std::abs(pairs[1].vector[0] * (-4.0 / 3.0) - pairs[1].vector[1]) <= 1e-14);

  const auto id = aa::eigen_directions_2x2(Matrix::identity(2));
  CHECK(id[0].value == doctest::Approx(1.0));
  CHECK(id[1].value == doctest::Approx(1.0));
  CHECK(std::abs(aa::dot(id[0].vector, id[1].vector)) <= 1e-15);

  const auto d = aa::eigen_directions_2x2(Matrix{{-0.5, 0.0}, {0.0, 0.5}});
  CHECK(d[0].value == -0.5);
  CHECK(d[0].vector == Vector{1.0, 0.0});
  CHECK(d[1].vector == Vector{0.0, 1.0});

  CHECK_THROWS_AS(aa::eigen_directions_2x2(Matrix{{0.0, -1.0}, {1.0, 0.0}}), aa::NumericalError);

  std::mt19937_64 gen(23);
  int tested = 0;
  while (tested < 200) {
    const Matrix m = oracle::random_matrix(gen, 2, 2);
    const double disc = (m(0, 0) - m(1, 1)) * (m(0, 0) - m(1, 1)) + 4.0 * m(0, 1) * m(1, 0);
    if (disc < 1e-6) continue;
    ++tested;
    for (const auto& e : aa::eigen_directions_2x2(m)) {
      CHECK(aa::norm2(e.vector) == doctest::Approx(1.0));
      CHECK(aa::norm2(m * e.vector - e.value * e.vector) <= 1e-12);
    }
  }
}
