#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "aa/analysis.hpp"
#include "aa/gmres.hpp"
#include "oracles.hpp"

using aa::Matrix;
using aa::Polynomial;
using aa::Vector;

namespace {

aa::AAConfig cfg(int m, int max_iter, double tol_rel = aa::kNoEarlyStop) {
  aa::AAConfig c;
  c.m = m;
  c.max_iter = max_iter;
  c.tol_rel = tol_rel;
  return c;
}

}  // namespace

TEST_CASE("polynomial arithmetic") {
  const Polynomial p({1.0, -2.0, 3.0});
  CHECK(p(2.0) == doctest::Approx(9.0));
  CHECK(p.degree() == 2);
  CHECK(p.abs_sum() == 6.0);
  CHECK(p.shifted().coeffs == std::vector<double>{0.0, 1.0, -2.0, 3.0});
  const Matrix m{{2.0, 1.0}, {0.0, 3.0}};
  const Vector v{1.0, -1.0};
  const Vector expected = v - 2.0 * (m * v) + 3.0 * (m * (m * v));
  CHECK(aa::norm2(p.apply(m, v) - expected) <= 1e-14);
}

TEST_CASE("polynomial recurrence low-order closed forms") {
  const double b1 = 0.37, b2 = -0.58;
  const std::vector<Vector> betas{Vector{}, Vector{b1}, Vector{b2}};
  const auto p = aa::polynomial_recurrence(betas, 1);
  REQUIRE(p.size() == 4);
  CHECK(p[0].coeffs == std::vector<double>{1.0});
  CHECK(p[1].coeffs == std::vector<double>{0.0, 1.0});
  CHECK(p[2].coeff(0) == 0.0);
  CHECK(p[2].coeff(1) == doctest::Approx(-b1));
  CHECK(p[2].coeff(2) == doctest::Approx(1.0 + b1));
  CHECK(p[3].coeff(0) == 0.0);
  CHECK(p[3].coeff(1) == 0.0);
  CHECK(p[3].coeff(2) == doctest::Approx(-((1.0 + b2) * b1 + b2)));
  CHECK(p[3].coeff(3) == doctest::Approx((1.0 + b2) * (1.0 + b1)));

  CHECK_THROWS_AS(aa::polynomial_recurrence(std::vector<Vector>{Vector{}, Vector{1.0, 2.0}}, 1),
                  std::invalid_argument);
}

TEST_CASE("fixed-point polynomials are monomials") {
  const std::vector<Vector> betas(6);
  const auto p = aa::polynomial_recurrence(betas, 0);
  for (std::size_t k = 0; k < p.size(); ++k) {
    CHECK(p[k].degree() == k);
    CHECK(p[k].coeff(k) == 1.0);
    CHECK(p[k].abs_sum() == 1.0);
  }
}

TEST_CASE("polynomial oracle reproduces solver residuals") {
  for (const char* name : {"prob41", "prob42", "example32_stall", "prob_nrbe"}) {
    const auto p = aa::builtin(name);
    for (int m = 0; m <= 3; ++m) {
      const auto t = aa::solve(p, *p.default_x0(), cfg(m, 30, 1e-12));
      INFO(std::string(name), " m=", m);
      const auto all = aa::polynomial_recurrence(t.betas(), m);
      const Matrix& mm = p.linear()->iteration_matrix();
      const Vector& r0 = t.at(0).r;
      for (std::size_t k = 0; k < t.size(); ++k) {
        const double dev = aa::norm2(all[k].apply(mm, r0) - t.at(k).r);
        double weighted = 1.0;
        for (std::size_t j = 0; j < all[k].coeffs.size(); ++j)
          weighted += std::abs(all[k].coeffs[j]) * std::pow(std::max(1.0, aa::norm2(mm)), static_cast<double>(j));
        CHECK(dev <= 1e-13 * weighted * aa::norm2(r0));
      }
      const auto polys = aa::polynomial_recurrence(t.betas(), m);
      for (std::size_t k = 1; k < polys.size(); ++k) {
        const double tol = 1e-9 * polys[k].abs_sum();
        CHECK(std::abs(polys[k](1.0) - 1.0) <= tol);
        CHECK(std::abs(polys[k](0.0)) <= tol);
      }
    }
  }
  const auto p41 = aa::builtin("prob41");
  CHECK(aa::verify_polynomial_trace(aa::solve(p41, Vector{0.2, 0.3}, cfg(2, 20, 1e-12)), p41) <= 1e-13);
  CHECK_THROWS_AS(aa::verify_polynomial_trace(aa::solve(aa::builtin("prob43_nonlinear"), Vector{0.1, 0.1}, cfg(1, 5)),
                                              aa::builtin("prob43_nonlinear")),
                  std::invalid_argument);
}

TEST_CASE("memory effect") {
  CHECK(aa::memory_effect_factor(Polynomial({0.0, 1.0}), 1, 1).coeffs == std::vector<double>{1.0});

  const auto p41 = aa::builtin("prob41");
  for (int m = 1; m <= 3; ++m) {
    const auto t = aa::solve(p41, Vector{0.2, 0.3}, cfg(m, 25));
    const auto polys = aa::polynomial_recurrence(t.betas(), m);
    for (std::size_t k = 1; k < polys.size(); ++k) {
      const auto g = aa::memory_effect_factor(polys[k], m, static_cast<int>(k));
      const std::size_t s = (k - 1) / static_cast<std::size_t>(m + 1);
      // λ^{s+1}·g reproduces p_k.
      Polynomial back = g;
      for (std::size_t j = 0; j <= s; ++j) back = back.shifted();
      CHECK(aa::max_coeff_difference(back, polys[k]) <= 1e-9 * polys[k].abs_sum());
    }
  }

  // m = 2, k = 4: s = 1, divisible by λ².
  const auto t = aa::solve(aa::builtin("prob42"), Vector{0.3, -0.8}, cfg(2, 6));
  const auto polys = aa::polynomial_recurrence(t.betas(), 2);
  CHECK(std::abs(polys[4].coeff(1)) <= 1e-12 * polys[4].abs_sum());

  try {
    (void)aa::memory_effect_factor(Polynomial({0.0, 0.5, 0.5}), 1, 3);
    FAIL("expected a verification error");
  } catch (const aa::VerificationError& e) {
    CHECK(std::string(e.what()).find("c_1") != std::string::npos);
  }
}

TEST_CASE("AA(1) residual recursion") {
  const Matrix m{{1.5, 0.0}, {0.0, 0.5}};
  CHECK(aa::aa1_residual_recursion(Vector{1.5, 0.5}, Vector{1.5, 0.5}, m) == Vector{2.25, 0.25});

  const Vector r{0.3, -0.7};
  CHECK(aa::norm2(aa::aa1_residual_recursion(r, 2.5 * r, m)) <= 1e-15);

  for (const char* name : {"prob41", "prob42", "example32_stall", "prob_nrbe"}) {
    const auto p = aa::builtin(name);
    const Matrix& mm = p.linear()->iteration_matrix();
    const auto t = aa::solve(p, *p.default_x0(), cfg(1, 30));
    for (std::size_t k = 1; k + 1 < t.size(); ++k) {
      if (t.at(k).r_norm <= 1e-10 * t.at(0).r_norm) break;
      const Vector pred = aa::aa1_residual_recursion(t.at(k).r, t.at(k - 1).r, mm);
      CHECK(aa::norm2(pred - t.at(k + 1).r) <= 1e-9 * t.at(k).r_norm + 1e-11 * t.at(0).r_norm);
    }
  }
}

TEST_CASE("L_k recursion") {
  const auto p = aa::builtin("prob41");
  const Matrix& m = p.linear()->iteration_matrix();
  const Vector r0 = p.residual(Vector{0.2, 0.3});
  const auto ls = aa::lk_recursion(m, r0, 10);
  REQUIRE(ls.size() == 11);
  CHECK(ls[0].l == Matrix::identity(2));
  CHECK(ls[1].l == m);

  // L_2 = M(−M R0 + (M R0)ᵀ)(M − I) / ‖(M − I) r0‖².
  const Matrix r0r0 = aa::outer(r0, r0);
  const Matrix mr = m * r0r0;
  const Matrix mi = m - Matrix::identity(2);
  Matrix l2 = m * (mr.transpose() - mr) * mi;
  l2 *= 1.0 / std::pow(aa::norm2(mi * r0), 2);
  CHECK(aa::frobenius_norm(ls[2].l - l2) <= 1e-14 * aa::frobenius_norm(l2));

  const auto t = aa::solve(p, Vector{0.2, 0.3}, cfg(1, 10));
  const auto check = aa::lk_check(t, p);
  CHECK(check.max_deviation <= 1e-9);

  // Rank two in higher dimension.
  std::mt19937_64 gen(19);
  Matrix big = oracle::random_matrix(gen, 5, 5);
  big *= 0.8 / aa::norm2(big);
  const aa::Problem p5("five", aa::LinearProblem(big, Vector(5, 0.0)));
  const auto t5 = aa::solve(p5, oracle::random_vector(gen, 5), cfg(1, 10));
  const auto c5 = aa::lk_check(t5, p5);
  CHECK(c5.max_deviation <= 1e-9);
  CHECK(c5.max_rank_ratio <= 1e-10);

  const auto stall = aa::builtin("example32_stall");
  CHECK_THROWS_AS(aa::lk_recursion(stall.linear()->iteration_matrix(), Vector{1.0, 1.0}, 4), aa::VerificationError);
}

TEST_CASE("calB values") {
  for (double phi : {0.1, 0.5, 1.0, 1.4}) CHECK(aa::calB(phi, std::cos(phi)) == doctest::Approx(1.0));
  CHECK(aa::calB(0.0, 0.5) == 0.0);
  CHECK(aa::calB(std::numbers::pi, 2.0) == doctest::Approx(0.0).epsilon(1e-30));
  CHECK(aa::calB(std::numbers::pi / 2.0, 1.0) == doctest::Approx(0.5));
  CHECK_THROWS_AS(aa::calB(0.0, 1.0), std::domain_error);

  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> ph(0.0, std::numbers::pi), yy(0.0, 3.0);
  for (int i = 0; i < 1000; ++i) {
    const double b = aa::calB(ph(gen), yy(gen));
    CHECK(b >= 0.0);
    CHECK(b <= 1.0);
  }
}

TEST_CASE("bounds on the diagonal problem") {
  const auto p = aa::builtin("prob42");
  const Matrix& m = p.linear()->iteration_matrix();
  const auto t = aa::solve(p, *p.default_x0(), cfg(1, 467));
  const auto b = aa::bounds_check(t, m);
  CHECK(b.size() == 466);
  int below = 0;
  for (const auto& rec : b) {
    CHECK_FALSE(rec.violation);
    CHECK(rec.upper / rec.lower == doctest::Approx(0.999 / 0.5784));
    below += rec.upper < 0.99 ? 1 : 0;
  }
  CHECK(below > static_cast<int>(b.size()) / 2);
}

TEST_CASE("bounds are equalities when M is a scaled rotation") {
  const double c = std::cos(0.3), s = std::sin(0.3);
  const Matrix m{{0.7 * c, -0.7 * s}, {0.7 * s, 0.7 * c}};
  const aa::Problem p("rotation", aa::LinearProblem(m, Vector{0.0, 0.0}));
  std::mt19937_64 gen(6);
  for (int trial = 0; trial < 20; ++trial) {
    const auto t = aa::solve(p, oracle::random_vector(gen, 2), cfg(1, 40));
    for (const auto& rec : aa::bounds_check(t, m)) {
      REQUIRE(rec.b_value);
      CHECK(std::abs(rec.actual - 0.7 * std::sqrt(*rec.b_value)) <= 1e-12 * rec.actual + 1e-300);
    }
  }
}

TEST_CASE("stall step uses the plain singular-value bounds") {
  const auto p = aa::builtin("example32_stall");
  const auto t = aa::solve(p, Vector{-2.0, 2.0}, cfg(1, 10));
  const auto b = aa::bounds_check(t, p.linear()->iteration_matrix());
  const auto it = std::find_if(b.begin(), b.end(), [](const auto& r) { return r.k == 2; });
  REQUIRE(it != b.end());
  CHECK(it->special_case);
  CHECK(!it->b_value);
  CHECK(it->lower == doctest::Approx(0.5));
  CHECK(it->upper == doctest::Approx(1.5));
  for (const auto& rec : b) CHECK_FALSE(rec.violation);
}

TEST_CASE("estimate_rho") {
  const auto p41 = aa::builtin("prob41");
  const auto fp = aa::fp_solve(p41, Vector{0.2, 0.3}, 400, aa::kNoEarlyStop);
  CHECK(aa::estimate_rho(fp).rho_hat == doctest::Approx(2.0 / 3.0).epsilon(0.015));
  CHECK(aa::estimate_rho(fp, aa::RhoMethod::log_slope).rho_hat == doctest::Approx(2.0 / 3.0).epsilon(1e-6));

  const auto eig = aa::eigen_directions_2x2(p41.linear()->system_matrix());
  const auto t = aa::solve(p41, eig[1].vector, cfg(1, 20));
  const auto est = aa::estimate_rho(t);
  CHECK(est.finite);
  CHECK(est.rho_hat == 0.0);

  const auto short_run = aa::fp_solve(p41, Vector{0.2, 0.3}, 5, aa::kNoEarlyStop);
  CHECK_THROWS_AS(aa::estimate_rho(short_run), aa::VerificationError);
}

TEST_CASE("scaling invariance") {
  const auto p41 = aa::builtin("prob41");
  const auto one = aa::scaling_invariance_check(p41, Vector{0.2, 0.3}, 1.0, 30);
  CHECK(one.beta == 0.0);
  CHECK(one.polynomial == 0.0);
  CHECK(one.rho == 0.0);
  CHECK(aa::scaling_invariance_check(p41, Vector{0.2, 0.3}, 10.0, 30).beta <= 1e-9);
  CHECK(aa::scaling_invariance_check(p41, Vector{0.2, 0.3}, -3.7, 30).rho <= 1e-3);
  CHECK_THROWS_AS(aa::scaling_invariance_check(p41, Vector{0.2, 0.3}, 0.0, 30), std::invalid_argument);
  CHECK_THROWS_AS(aa::scaling_invariance_check(aa::builtin("prob_nrbe"), Vector{0.2, 0.3}, 2.0, 30),
                  std::invalid_argument);
}

TEST_CASE("normwise backward errors") {
  const Matrix a{{2.0, 0.0}, {0.0, 1.0}};
  const Vector b{2.0, 3.0};
  CHECK(aa::nrbe(a, b, Vector{1.0, 3.0}) == 0.0);
  CHECK(aa::nrbe(a, b, Vector{0.0, 0.0}) == doctest::Approx(1.0));
  // ‖b − A x‖ / (‖b‖ + ‖A‖‖x‖) by hand for x = (1, 1): r = (0, 2).
  CHECK(aa::nrbe(a, b, Vector{1.0, 1.0}) == doctest::Approx(2.0 / (std::sqrt(13.0) + 2.0 * std::sqrt(2.0))));
  CHECK_THROWS_AS(aa::nrbe(a, Vector{0.0, 0.0}, Vector{0.0, 0.0}), std::domain_error);

  const auto p = aa::builtin("prob_nrbe");
  aa::AAConfig c;
  const auto t = aa::solve(p, *p.default_x0(), c);
  CHECK(aa::nrbe(p.linear()->system_matrix(), p.linear()->affine_term(), t.records.back().x) <= 1e-14);

  const Matrix r{{0.5}, {-0.5}};
  const Vector rk{1.5, 0.5};
  CHECK(aa::ls_nrbe(r, rk, Vector{-1.0}) <= 1e-16);
  CHECK(aa::ls_nrbe(r, rk, Vector{0.0}) == doctest::Approx(1.0));
}

TEST_CASE("multi-Krylov base cases and degree bound") {
  for (int m = 1; m <= 3; ++m)
    for (int i = 1; i <= m + 1; ++i)
      for (int j = 0; j <= m; ++j) CHECK(aa::multi_krylov_base(i, j, m) == (j == m + 1 - i ? 1.0 : 0.0));

  std::mt19937_64 gen(29);
  std::vector<Vector> betas;
  for (int s = 0; s < 8; ++s) betas.push_back(oracle::random_vector(gen, 2));
  const auto table = aa::multi_krylov_polynomials(betas, 2);
  for (std::size_t t = 1; t <= table.size(); ++t)
    for (const auto& p : table[t - 1]) CHECK(p.degree() <= t);
  CHECK(table[0][2].coeffs == std::vector<double>{0.0, 1.0 + betas[0][0] + betas[0][1]});
  CHECK(table[0][1].coeffs == std::vector<double>{0.0, -betas[0][0]});
  CHECK(table[0][0].coeffs == std::vector<double>{0.0, -betas[0][1]});
}

TEST_CASE("multi-Krylov polynomials reproduce general-guess residuals") {
  std::mt19937_64 gen(37);
  for (int trial = 0; trial < 20; ++trial) {
    const int m = 1 + trial % 3;
    Matrix mm = oracle::random_matrix(gen, 4, 4);
    mm *= 0.9 / aa::norm2(mm);
    const aa::Problem p("r4", aa::LinearProblem(mm, oracle::random_vector(gen, 4)));
    std::vector<Vector> guesses;
    for (int j = 0; j <= m; ++j) guesses.push_back(oracle::random_vector(gen, 4));
    const auto t = aa::solve_general(p, guesses, cfg(m, 20));
    CHECK(aa::verify_multi_krylov(t, p) <= 1e-8);
  }
  const auto p41 = aa::builtin("prob41");
  CHECK_THROWS_AS(aa::verify_multi_krylov(aa::solve(p41, Vector{0.2, 0.3}, cfg(1, 5)), p41), std::invalid_argument);
}

TEST_CASE("multi-Krylov collapses to the single-Krylov polynomials when x1 = q(x0)") {
  const auto p = aa::builtin("prob41");
  const Vector x0{0.2, 0.3};
  const std::vector<Vector> guesses{x0, p.apply(x0)};
  const auto tg = aa::solve_general(p, guesses, cfg(1, 12));
  const auto ts = aa::solve(p, x0, cfg(1, 12));
  const auto gb = tg.betas();
  const std::vector<Vector> betas(gb.begin() + 1, gb.end());
  const auto table = aa::multi_krylov_polynomials(betas, 1);
  const auto single = aa::polynomial_recurrence(ts.betas(), 1);
  // r1 = M r0, so p_{t,0}(λ) + λ p_{t,1}(λ) = p_{t+1}(λ).
  for (std::size_t t = 1; t <= table.size() && t + 1 < single.size(); ++t) {
    const Polynomial combined = table[t - 1][0] + table[t - 1][1].shifted();
    CHECK(aa::max_coeff_difference(combined, single[t + 1]) <= 1e-9 * (1.0 + single[t + 1].abs_sum()));
  }
}

TEST_CASE("AA coefficients stay above -1 for contractive M") {
  std::mt19937_64 gen(53);
  int steps = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 2 + trial % 4;
    Matrix m = oracle::random_matrix(gen, n, n);
    m *= 0.99 / aa::norm2(m);
    const aa::Problem p("c", aa::LinearProblem(m, Vector(n, 0.0)));
    const auto t = aa::solve(p, oracle::random_vector(gen, n), cfg(1, 40));
    const double r0 = t.at(0).r_norm;
    for (const auto& rec : t.records) {
      if (rec.r_norm <= 1e-12 * r0) break;
      for (double b : rec.beta) CHECK(b > -1.0);
      ++steps;
    }
  }
  CHECK(steps > 1000);
}

TEST_CASE("GMRES dominance over AA residual polynomials") {
  std::mt19937_64 gen(61);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t n = 2 + trial % 5;
    const int m = 1 + trial % 3;
    Matrix mm = oracle::random_matrix(gen, n, n);
    mm *= 0.95 / aa::norm2(mm);
    const aa::Problem p("g", aa::LinearProblem(mm, oracle::random_vector(gen, n)));
    const Vector x0 = oracle::random_vector(gen, n);
    const auto t = aa::solve(p, x0, cfg(m, 25));
    const auto polys = aa::polynomial_recurrence(t.betas(), m);
    const auto g = aa::gmres(p.linear()->system_matrix(), p.linear()->affine_term(), x0, 25);
    const Vector r0 = t.at(0).r;
    for (std::size_t k = 0; k < polys.size(); ++k) {
      const double aa_norm = aa::norm2(polys[k].apply(mm, r0));
      CHECK(g.norm_at(k) <= aa_norm + 1e-10 * aa::norm2(r0));
    }
  }
}
