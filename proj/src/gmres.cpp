#include "aa/gmres.hpp"

#include <cmath>
#include <stdexcept>

namespace aa {

double GmresTrace::norm_at(std::size_t k) const {
  if (residual_norms.empty()) throw std::out_of_range("GmresTrace is empty");
  return k < residual_norms.size() ? residual_norms[k] : residual_norms.back();
}

GmresTrace gmres(const Matrix& a, const Vector& b, const Vector& x0, int max_iter) {
  if (!a.square()) throw DimensionError("gmres: matrix must be square");
  if (a.rows() != b.size() || b.size() != x0.size()) throw DimensionError("gmres: size mismatch");
  if (max_iter < 0) throw std::invalid_argument("gmres: max_iter must be >= 0");
  if (!a.all_finite() || !b.all_finite() || !x0.all_finite())
    throw NonFiniteError("gmres: non-finite input");

  const std::size_t n = b.size();
  GmresTrace out;
  out.x = x0;
  const Vector r0 = b - a * x0;
  const double beta = norm2(r0);
  out.residual_norms.push_back(beta);
  if (beta == 0.0 || max_iter == 0) {
    out.breakdown = beta == 0.0;
    return out;
  }

  const std::size_t steps = static_cast<std::size_t>(max_iter);
  std::vector<Vector> basis{(1.0 / beta) * r0};
  // Hessenberg columns after Givens rotation: upper triangular R.
  std::vector<std::vector<double>> h;
  std::vector<double> cs, sn;
  std::vector<double> g{beta};

  std::size_t j = 0;
  for (; j < steps; ++j) {
    Vector w = a * basis[j];
    std::vector<double> col(j + 2, 0.0);
    // Modified Gram-Schmidt, applied twice for orthogonality at tiny n.
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t i = 0; i <= j; ++i) {
        const double hij = dot(w, basis[i]);
        col[i] += hij;
        w -= hij * basis[i];
      }
    }
    col[j + 1] = norm2(w);
    if (!std::isfinite(col[j + 1])) throw NonFiniteError("gmres: non-finite Arnoldi vector");

    for (std::size_t i = 0; i < j; ++i) {
      const double t = cs[i] * col[i] + sn[i] * col[i + 1];
      col[i + 1] = -sn[i] * col[i] + cs[i] * col[i + 1];
      col[i] = t;
    }
    const double denom = std::hypot(col[j], col[j + 1]);
    const double c = denom == 0.0 ? 1.0 : col[j] / denom;
    const double s = denom == 0.0 ? 0.0 : col[j + 1] / denom;
    cs.push_back(c);
    sn.push_back(s);
    const double lucky = col[j + 1];
    col[j] = denom;
    col[j + 1] = 0.0;
    g.push_back(-s * g[j]);
    g[j] = c * g[j];
    h.push_back(std::move(col));
    out.residual_norms.push_back(std::abs(g[j + 1]));

    const bool invariant = lucky <= 1e-14 * frobenius_norm(a) || j + 1 == n;
    if (invariant) {
      out.breakdown = true;
      ++j;
      break;
    }
    basis.push_back((1.0 / lucky) * w);
  }

  // Back substitution for y minimizing ‖g − R y‖, then x = x0 + V y.
  const std::size_t k = j;
  std::vector<double> y(k, 0.0);
  for (std::size_t i = k; i-- > 0;) {
    double s = g[i];
    for (std::size_t l = i + 1; l < k; ++l) s -= h[l][i] * y[l];
    y[i] = h[i][i] != 0.0 ? s / h[i][i] : 0.0;
  }
  for (std::size_t i = 0; i < k; ++i) out.x += y[i] * basis[i];
  if (out.breakdown) out.residual_norms.back() = norm2(b - a * out.x);
  return out;
}

}  // namespace aa
