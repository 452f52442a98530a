#pragma once

// Dense small-scale linear algebra used by the solver and analysis layers.
// Everything here is a pure function of its inputs.

#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace aa {

/// Thrown when operand shapes do not conform.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Base for failures caused by the numbers themselves rather than by usage.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NonFiniteError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class SingularMatrixError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class Vector {
 public:
  Vector() = default;
  explicit Vector(std::size_t n, double value = 0.0);
  Vector(std::initializer_list<double> values);
  explicit Vector(std::vector<double> values);

  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> span() noexcept { return data_; }
  std::span<const double> span() const noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  auto begin() noexcept { return data_.begin(); }
  auto end() noexcept { return data_.end(); }
  auto begin() const noexcept { return data_.begin(); }
  auto end() const noexcept { return data_.end(); }

  bool all_finite() const noexcept;

  Vector& operator+=(const Vector& other);
  Vector& operator-=(const Vector& other);
  Vector& operator*=(double s) noexcept;

  friend bool operator==(const Vector&, const Vector&) = default;

 private:
  std::vector<double> data_;
};

Vector operator+(Vector a, const Vector& b);
Vector operator-(Vector a, const Vector& b);
Vector operator-(Vector a);
Vector operator*(double s, Vector v);
Vector operator*(Vector v, double s);

double dot(const Vector& a, const Vector& b);
double norm2(const Vector& v);

/// Row-major dense matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double value = 0.0);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> row_major);

  static Matrix identity(std::size_t n);
  static Matrix diagonal(const Vector& d);
  static Matrix from_columns(std::span<const Vector> columns);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool square() const noexcept { return rows_ == cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  Vector column(std::size_t j) const;
  Vector row(std::size_t i) const;
  Matrix transpose() const;
  std::span<const double> data() const noexcept { return data_; }

  bool all_finite() const noexcept;

  Matrix& operator+=(const Matrix& other);
  Matrix& operator-=(const Matrix& other);
  Matrix& operator*=(double s) noexcept;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(double s, Matrix a);
Matrix operator*(const Matrix& a, const Matrix& b);
Vector operator*(const Matrix& a, const Vector& x);

Matrix outer(const Vector& a, const Vector& b);
Matrix power(const Matrix& a, unsigned k);
double frobenius_norm(const Matrix& a);
/// Spectral norm (largest singular value).
double norm2(const Matrix& a);

struct SingularPair {
  double sigma_min = 0.0;
  double sigma_max = 0.0;
};

/// Thin SVD A = U diag(s) Vᵀ from one-sided Jacobi; s is sorted descending.
/// U is rows×k and V is cols×k with k = min(rows, cols).
struct Svd {
  Matrix u;
  Vector s;
  Matrix v;
};
Svd jacobi_svd(const Matrix& a);

/// Extreme singular values of a (possibly non-square) matrix.
SingularPair singular_values_small(const Matrix& m);

/// All singular values, descending.
Vector singular_values(const Matrix& m);

/// Least-squares minimizer of ‖R·β + rhs‖ by Householder QR with column
/// pivoting. Columns whose pivoted diagonal falls below the rank cutoff
/// receive zero weight (basic solution).
Vector qr_least_squares(const Matrix& r, const Vector& rhs);

/// Numerical rank used by qr_least_squares for the given matrix.
std::size_t qr_rank(const Matrix& r);

/// Minimum-norm least-squares solution of R·x ≈ rhs (x = R†·rhs).
Vector pseudo_inverse_solve(const Matrix& r, const Vector& rhs);

/// Explicit pseudo-inverse, p×n for an n×p input.
Matrix pseudo_inverse(const Matrix& r);

/// (RᵀR + λI)⁻¹ Rᵀ·rhs via Cholesky; requires λ > 0.
Vector regularized_solve(const Matrix& r, const Vector& rhs, double lambda);

/// Partial-pivot LU solve of a square system.
Vector solve_square(const Matrix& a, const Vector& b);

/// Cholesky solve of a symmetric positive definite system.
Vector cholesky_solve(const Matrix& a, const Vector& b);

std::string to_string(const Vector& v);

}  // namespace aa
