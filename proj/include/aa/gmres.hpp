#pragma once

// Full (non-restarted) GMRES, used as the optimality reference that bounds
// what any Krylov method can achieve after k iterations.

#include <vector>

#include "aa/linalg.hpp"

namespace aa {

struct GmresTrace {
  /// ‖b − A·x_k‖ for k = 0, 1, …; non-increasing.
  std::vector<double> residual_norms;
  Vector x;
  /// True when the Krylov space became invariant (exact solve).
  bool breakdown = false;

  /// Residual norm after k iterations; past breakdown the last value persists.
  double norm_at(std::size_t k) const;
};

GmresTrace gmres(const Matrix& a, const Vector& b, const Vector& x0, int max_iter);

}  // namespace aa
