#pragma once

#include <cstddef>
#include <vector>

#include "aa/linalg.hpp"

namespace aa {

/// p(λ) = Σ cⱼ λʲ in the monomial basis.
struct Polynomial {
  std::vector<double> coeffs;

  Polynomial() = default;
  explicit Polynomial(std::vector<double> c) : coeffs(std::move(c)) {}

  static Polynomial constant(double c) { return Polynomial({c}); }
  static Polynomial zero() { return Polynomial(); }

  /// Index of the highest nonzero coefficient; 0 for the zero polynomial.
  std::size_t degree() const noexcept;
  double coeff(std::size_t j) const noexcept { return j < coeffs.size() ? coeffs[j] : 0.0; }
  double abs_sum() const noexcept;

  double operator()(double lambda) const noexcept;
  /// p(M)·v by Horner's rule on vectors.
  Vector apply(const Matrix& m, const Vector& v) const;

  Polynomial& operator+=(const Polynomial& other);
  Polynomial& operator*=(double s) noexcept;
  /// Multiplication by λ.
  Polynomial shifted() const;
};

Polynomial operator+(Polynomial a, const Polynomial& b);
Polynomial operator*(double s, Polynomial p);

/// max_j |aⱼ − bⱼ| over the union of supports.
double max_coeff_difference(const Polynomial& a, const Polynomial& b);

}  // namespace aa
