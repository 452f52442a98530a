#include "aa/polynomial.hpp"

#include <algorithm>
#include <cmath>

namespace aa {

std::size_t Polynomial::degree() const noexcept {
  for (std::size_t j = coeffs.size(); j-- > 0;)
    if (coeffs[j] != 0.0) return j;
  return 0;
}

double Polynomial::abs_sum() const noexcept {
  double s = 0.0;
  for (double c : coeffs) s += std::abs(c);
  return s;
}

double Polynomial::operator()(double lambda) const noexcept {
  double acc = 0.0;
  for (std::size_t j = coeffs.size(); j-- > 0;) acc = acc * lambda + coeffs[j];
  return acc;
}

Vector Polynomial::apply(const Matrix& m, const Vector& v) const {
  if (!m.square() || m.cols() != v.size()) throw DimensionError("Polynomial::apply: size mismatch");
  Vector acc(v.size(), 0.0);
  for (std::size_t j = coeffs.size(); j-- > 0;) {
    acc = m * acc;
    if (coeffs[j] != 0.0) acc += coeffs[j] * v;
  }
  return acc;
}

Polynomial& Polynomial::operator+=(const Polynomial& other) {
  if (coeffs.size() < other.coeffs.size()) coeffs.resize(other.coeffs.size(), 0.0);
  for (std::size_t j = 0; j < other.coeffs.size(); ++j) coeffs[j] += other.coeffs[j];
  return *this;
}

Polynomial& Polynomial::operator*=(double s) noexcept {
  for (double& c : coeffs) c *= s;
  return *this;
}

Polynomial Polynomial::shifted() const {
  std::vector<double> c(coeffs.size() + 1, 0.0);
  std::copy(coeffs.begin(), coeffs.end(), c.begin() + 1);
  return Polynomial(std::move(c));
}

Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
Polynomial operator*(double s, Polynomial p) { return p *= s; }

double max_coeff_difference(const Polynomial& a, const Polynomial& b) {
  const std::size_t n = std::max(a.coeffs.size(), b.coeffs.size());
  double d = 0.0;
  for (std::size_t j = 0; j < n; ++j) d = std::max(d, std::abs(a.coeff(j) - b.coeff(j)));
  return d;
}

}  // namespace aa
