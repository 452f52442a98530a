#include "aa/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

namespace aa {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

void require_finite(const Vector& v, const char* what) {
  if (!v.all_finite()) throw NonFiniteError(std::string(what) + ": non-finite entry");
}

void require_finite(const Matrix& m, const char* what) {
  if (!m.all_finite()) throw NonFiniteError(std::string(what) + ": non-finite entry");
}

void require_rhs(const Matrix& r, const Vector& rhs, const char* what) {
  if (r.rows() != rhs.size()) {
    throw DimensionError(std::string(what) + ": matrix has " + std::to_string(r.rows()) +
                         " rows but right-hand side has " + std::to_string(rhs.size()) +
                         " entries");
  }
}

double max_abs(std::span<const double> xs) {
  double m = 0.0;
  for (double x : xs) m = std::max(m, std::abs(x));
  return m;
}

// Householder QR with column pivoting, applied in place. The upper triangle of
// `w` holds R; `rhs` is overwritten with Qᵀ·rhs when non-null.
struct PivotedQr {
  Matrix w;
  std::vector<std::size_t> perm;
  std::size_t rank = 0;
};

PivotedQr pivoted_qr(const Matrix& a, Vector* rhs) {
  const std::size_t n = a.rows();
  const std::size_t p = a.cols();
  PivotedQr qr{a, std::vector<std::size_t>(p), 0};
  std::iota(qr.perm.begin(), qr.perm.end(), std::size_t{0});
  Matrix& w = qr.w;
  const std::size_t steps = std::min(n, p);

  for (std::size_t k = 0; k < steps; ++k) {
    // Trailing column norms are recomputed, not downdated: sizes are tiny and
    // recomputation keeps the pivot order exact.
    std::size_t best = k;
    double best_norm = -1.0;
    for (std::size_t j = k; j < p; ++j) {
      double s = 0.0;
      for (std::size_t i = k; i < n; ++i) s += w(i, j) * w(i, j);
      if (s > best_norm) {
        best_norm = s;
        best = j;
      }
    }
    if (best != k) {
      for (std::size_t i = 0; i < n; ++i) std::swap(w(i, k), w(i, best));
      std::swap(qr.perm[k], qr.perm[best]);
    }

    double norm_x = std::sqrt(best_norm);
    if (norm_x == 0.0) continue;
    const double alpha = w(k, k) > 0.0 ? -norm_x : norm_x;
    std::vector<double> v(n - k);
    for (std::size_t i = k; i < n; ++i) v[i - k] = w(i, k);
    v[0] -= alpha;
    double vtv = 0.0;
    for (double x : v) vtv += x * x;
    if (vtv == 0.0) continue;

    for (std::size_t j = k + 1; j < p; ++j) {
      double s = 0.0;
      for (std::size_t i = k; i < n; ++i) s += v[i - k] * w(i, j);
      s = 2.0 * s / vtv;
      for (std::size_t i = k; i < n; ++i) w(i, j) -= s * v[i - k];
    }
    if (rhs != nullptr) {
      double s = 0.0;
      for (std::size_t i = k; i < n; ++i) s += v[i - k] * (*rhs)[i];
      s = 2.0 * s / vtv;
      for (std::size_t i = k; i < n; ++i) (*rhs)[i] -= s * v[i - k];
    }
    w(k, k) = alpha;
    for (std::size_t i = k + 1; i < n; ++i) w(i, k) = 0.0;
  }

  const double cutoff =
      static_cast<double>(std::max(n, p)) * std::ldexp(1.0, -52) * 64.0 *
      (steps > 0 ? std::abs(w(0, 0)) : 0.0);
  std::size_t rank = 0;
  while (rank < steps && std::abs(w(rank, rank)) > cutoff) ++rank;
  qr.rank = rank;
  return qr;
}

}  // namespace

// ---------------------------------------------------------------- Vector

Vector::Vector(std::size_t n, double value) : data_(n, value) {}
Vector::Vector(std::initializer_list<double> values) : data_(values) {}
Vector::Vector(std::vector<double> values) : data_(std::move(values)) {}

bool Vector::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

Vector& Vector::operator+=(const Vector& other) {
  if (other.size() != size()) throw DimensionError("vector sizes differ");
  for (std::size_t i = 0; i < size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Vector& Vector::operator-=(const Vector& other) {
  if (other.size() != size()) throw DimensionError("vector sizes differ");
  for (std::size_t i = 0; i < size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

Vector& Vector::operator*=(double s) noexcept {
  for (double& x : data_) x *= s;
  return *this;
}

Vector operator+(Vector a, const Vector& b) { return a += b; }
Vector operator-(Vector a, const Vector& b) { return a -= b; }
Vector operator-(Vector a) { return a *= -1.0; }
Vector operator*(double s, Vector v) { return v *= s; }
Vector operator*(Vector v, double s) { return v *= s; }

double dot(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw DimensionError("dot: vector sizes differ");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(const Vector& v) {
  // Scaled accumulation so tiny residuals (homogeneous problems drive them
  // toward underflow) keep full relative accuracy.
  const double scale = max_abs(v.span());
  if (scale == 0.0 || !std::isfinite(scale)) return scale;
  double s = 0.0;
  for (double x : v) {
    const double t = x / scale;
    s += t * t;
  }
  return scale * std::sqrt(s);
}

// ---------------------------------------------------------------- Matrix

Matrix::Matrix(std::size_t rows, std::size_t cols, double value)
    : rows_(rows), cols_(cols), data_(rows * cols, value) {}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& row : rows) {
    if (row.size() != cols_) throw DimensionError("ragged matrix initializer");
    data_.insert(data_.end(), row.begin(), row.end());
  }
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> row_major)
    : rows_(rows), cols_(cols), data_(std::move(row_major)) {
  if (data_.size() != rows_ * cols_) {
    throw DimensionError("matrix entry count " + std::to_string(data_.size()) +
                         " does not match " + std::to_string(rows_) + "x" +
                         std::to_string(cols_));
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::diagonal(const Vector& d) {
  Matrix m(d.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
  return m;
}

Matrix Matrix::from_columns(std::span<const Vector> columns) {
  if (columns.empty()) return {};
  const std::size_t n = columns.front().size();
  Matrix m(n, columns.size());
  for (std::size_t j = 0; j < columns.size(); ++j) {
    if (columns[j].size() != n) throw DimensionError("from_columns: column sizes differ");
    for (std::size_t i = 0; i < n; ++i) m(i, j) = columns[j][i];
  }
  return m;
}

Vector Matrix::column(std::size_t j) const {
  Vector c(rows_);
  for (std::size_t i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
  return c;
}

Vector Matrix::row(std::size_t i) const {
  Vector r(cols_);
  for (std::size_t j = 0; j < cols_; ++j) r[j] = (*this)(i, j);
  return r;
}

Matrix Matrix::transpose() const {
  Matrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

bool Matrix::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

Matrix& Matrix::operator+=(const Matrix& other) {
  if (other.rows_ != rows_ || other.cols_ != cols_) throw DimensionError("matrix shapes differ");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Matrix& Matrix::operator-=(const Matrix& other) {
  if (other.rows_ != rows_ || other.cols_ != cols_) throw DimensionError("matrix shapes differ");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

Matrix& Matrix::operator*=(double s) noexcept {
  for (double& x : data_) x *= s;
  return *this;
}

Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
Matrix operator*(double s, Matrix a) { return a *= s; }

Matrix operator*(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw DimensionError("matrix product: inner dimensions differ");
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

Vector operator*(const Matrix& a, const Vector& x) {
  if (a.cols() != x.size()) throw DimensionError("matrix-vector product: dimensions differ");
  Vector y(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j) * x[j];
    y[i] = s;
  }
  return y;
}

Matrix outer(const Vector& a, const Vector& b) {
  Matrix m(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) m(i, j) = a[i] * b[j];
  return m;
}

Matrix power(const Matrix& a, unsigned k) {
  if (!a.square()) throw DimensionError("power: matrix must be square");
  Matrix result = Matrix::identity(a.rows());
  for (unsigned i = 0; i < k; ++i) result = result * a;
  return result;
}

double frobenius_norm(const Matrix& a) {
  double s = 0.0;
  for (double x : a.data()) s += x * x;
  return std::sqrt(s);
}

double norm2(const Matrix& a) {
  if (a.rows() == 0 || a.cols() == 0) return 0.0;
  return singular_values_small(a).sigma_max;
}

// ---------------------------------------------------------------- SVD

Svd jacobi_svd(const Matrix& a) {
  require_finite(a, "jacobi_svd");
  if (a.rows() < a.cols()) {
    Svd t = jacobi_svd(a.transpose());
    return Svd{std::move(t.v), std::move(t.s), std::move(t.u)};
  }
  const std::size_t n = a.rows();
  const std::size_t p = a.cols();
  Matrix u = a;
  Matrix v = Matrix::identity(p);

  for (int sweep = 0; sweep < 80; ++sweep) {
    bool rotated = false;
    for (std::size_t i = 0; i + 1 < p; ++i) {
      for (std::size_t j = i + 1; j < p; ++j) {
        double alpha = 0.0, beta = 0.0, gamma = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
          alpha += u(r, i) * u(r, i);
          beta += u(r, j) * u(r, j);
          gamma += u(r, i) * u(r, j);
        }
        if (gamma == 0.0 || std::abs(gamma) <= kEps * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::hypot(1.0, zeta));
        const double c = 1.0 / std::hypot(1.0, t);
        const double s = c * t;
        for (std::size_t r = 0; r < n; ++r) {
          const double ui = u(r, i), uj = u(r, j);
          u(r, i) = c * ui - s * uj;
          u(r, j) = s * ui + c * uj;
        }
        for (std::size_t r = 0; r < p; ++r) {
          const double vi = v(r, i), vj = v(r, j);
          v(r, i) = c * vi - s * vj;
          v(r, j) = s * vi + c * vj;
        }
      }
    }
    if (!rotated) break;
  }

  std::vector<double> sigma(p);
  for (std::size_t j = 0; j < p; ++j) sigma[j] = norm2(u.column(j));
  std::vector<std::size_t> order(p);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return sigma[x] > sigma[y]; });

  Svd out{Matrix(n, p), Vector(p), Matrix(p, p)};
  for (std::size_t k = 0; k < p; ++k) {
    const std::size_t j = order[k];
    out.s[k] = sigma[j];
    for (std::size_t r = 0; r < n; ++r) out.u(r, k) = sigma[j] > 0.0 ? u(r, j) / sigma[j] : 0.0;
    for (std::size_t r = 0; r < p; ++r) out.v(r, k) = v(r, j);
  }
  return out;
}

Vector singular_values(const Matrix& m) {
  if (m.rows() == 0 || m.cols() == 0) throw DimensionError("singular_values: empty matrix");
  return jacobi_svd(m).s;
}

SingularPair singular_values_small(const Matrix& m) {
  const Vector s = singular_values(m);
  SingularPair pair{s[s.size() - 1], s[0]};
  // inf ‖Mz‖/‖z‖ is zero for a wide matrix (nontrivial kernel).
  if (m.rows() < m.cols()) pair.sigma_min = 0.0;
  return pair;
}

// ---------------------------------------------------------------- solvers

Vector qr_least_squares(const Matrix& r, const Vector& rhs) {
  if (r.rows() == 0 || r.cols() == 0) throw DimensionError("qr_least_squares: empty matrix");
  require_rhs(r, rhs, "qr_least_squares");
  require_finite(r, "qr_least_squares");
  require_finite(rhs, "qr_least_squares");

  Vector c = -rhs;  // minimize ‖Rβ − (−rhs)‖
  const PivotedQr qr = pivoted_qr(r, &c);
  Vector z(qr.rank);
  for (std::size_t ii = qr.rank; ii-- > 0;) {
    double s = c[ii];
    for (std::size_t j = ii + 1; j < qr.rank; ++j) s -= qr.w(ii, j) * z[j];
    z[ii] = s / qr.w(ii, ii);
  }
  Vector beta(r.cols());
  for (std::size_t i = 0; i < qr.rank; ++i) beta[qr.perm[i]] = z[i];
  return beta;
}

std::size_t qr_rank(const Matrix& r) {
  require_finite(r, "qr_rank");
  return pivoted_qr(r, nullptr).rank;
}

Matrix pseudo_inverse(const Matrix& r) {
  require_finite(r, "pseudo_inverse");
  const Svd svd = jacobi_svd(r);
  const std::size_t k = svd.s.size();
  const double tol =
      static_cast<double>(std::max(r.rows(), r.cols())) * kEps * (k > 0 ? svd.s[0] : 0.0);
  Matrix pinv(r.cols(), r.rows());
  for (std::size_t t = 0; t < k; ++t) {
    if (!(svd.s[t] > tol)) continue;
    for (std::size_t i = 0; i < r.cols(); ++i)
      for (std::size_t j = 0; j < r.rows(); ++j)
        pinv(i, j) += svd.v(i, t) * svd.u(j, t) / svd.s[t];
  }
  return pinv;
}

Vector pseudo_inverse_solve(const Matrix& r, const Vector& rhs) {
  if (r.rows() == 0 || r.cols() == 0) throw DimensionError("pseudo_inverse_solve: empty matrix");
  require_rhs(r, rhs, "pseudo_inverse_solve");
  require_finite(r, "pseudo_inverse_solve");
  require_finite(rhs, "pseudo_inverse_solve");

  const Svd svd = jacobi_svd(r);
  const std::size_t k = svd.s.size();
  const double tol =
      static_cast<double>(std::max(r.rows(), r.cols())) * kEps * (k > 0 ? svd.s[0] : 0.0);
  Vector x(r.cols());
  for (std::size_t t = 0; t < k; ++t) {
    if (!(svd.s[t] > tol)) continue;
    double coef = 0.0;
    for (std::size_t j = 0; j < r.rows(); ++j) coef += svd.u(j, t) * rhs[j];
    coef /= svd.s[t];
    for (std::size_t i = 0; i < r.cols(); ++i) x[i] += coef * svd.v(i, t);
  }
  return x;
}

Vector cholesky_solve(const Matrix& a, const Vector& b) {
  if (!a.square() || a.rows() != b.size()) throw DimensionError("cholesky_solve: shape mismatch");
  const std::size_t n = a.rows();
  Matrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = a(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > 0.0)) throw SingularMatrixError("cholesky_solve: matrix not positive definite");
    l(j, j) = std::sqrt(d);
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / l(j, j);
    }
  }
  Vector y(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * y[k];
    y[i] = s / l(i, i);
  }
  Vector x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = y[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= l(k, i) * x[k];
    x[i] = s / l(i, i);
  }
  return x;
}

Vector regularized_solve(const Matrix& r, const Vector& rhs, double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda))
    throw std::invalid_argument("regularized_solve: lambda must be positive and finite");
  require_rhs(r, rhs, "regularized_solve");
  require_finite(r, "regularized_solve");
  require_finite(rhs, "regularized_solve");
  const Matrix rt = r.transpose();
  Matrix normal = rt * r;
  for (std::size_t i = 0; i < normal.rows(); ++i) normal(i, i) += lambda;
  return cholesky_solve(normal, rt * rhs);
}

Vector solve_square(const Matrix& a, const Vector& b) {
  if (!a.square()) throw DimensionError("solve_square: matrix must be square");
  if (a.rows() != b.size()) throw DimensionError("solve_square: right-hand side size mismatch");
  require_finite(a, "solve_square");
  require_finite(b, "solve_square");
  const std::size_t n = a.rows();
  Matrix lu = a;
  Vector x = b;
  const double scale = max_abs(a.data());
  const double tiny = static_cast<double>(n) * kEps * scale;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::abs(lu(i, k)) > std::abs(lu(piv, k))) piv = i;
    if (!(std::abs(lu(piv, k)) > tiny)) {
      throw SingularMatrixError("solve_square: matrix is singular to working precision (column " +
                                std::to_string(k) + ")");
    }
    if (piv != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(lu(k, j), lu(piv, j));
      std::swap(x[k], x[piv]);
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      const double f = lu(i, k) / lu(k, k);
      lu(i, k) = f;
      for (std::size_t j = k + 1; j < n; ++j) lu(i, j) -= f * lu(k, j);
      x[i] -= f * x[k];
    }
  }
  for (std::size_t i = n; i-- > 0;) {
    double s = x[i];
    for (std::size_t j = i + 1; j < n; ++j) s -= lu(i, j) * x[j];
    x[i] = s / lu(i, i);
  }
  return x;
}

std::string to_string(const Vector& v) {
  std::string s = "(";
  char buf[32];
  for (std::size_t i = 0; i < v.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", v[i]);
    if (i > 0) s += ", ";
    s += buf;
  }
  return s + ")";
}

}  // namespace aa
