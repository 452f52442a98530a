#pragma once

// Verification of the linear-case theory for AA(m): residual polynomials,
// memory effect, AA(1) closed forms, per-step bounds, convergence factors,
// and backward errors.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aa/linalg.hpp"
#include "aa/polynomial.hpp"
#include "aa/problems.hpp"
#include "aa/solver.hpp"

namespace aa {

class VerificationError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// ------------------------------------------------------------ residual polynomials

/// p_0 … p_K with r_k = p_k(M)·r_0, built from β⁽⁰⁾ … β⁽ᴷ⁻¹⁾ (betas[k] has
/// length min(k, m); a zero-length entry is a plain q step).
std::vector<Polynomial> polynomial_recurrence(std::span<const Vector> betas, int m);

/// max_k ‖p_k(M)·r_0 − r_k‖ / ‖r_0‖ over a single-guess linear trace.
double verify_polynomial_trace(const Trace& trace, const Problem& problem);

/// For k = s(m+1) + i (1 ≤ i ≤ m+1) checks that c_0 … c_s vanish and returns
/// g with λ^{s+1}·g(λ) = p_k(λ).
Polynomial memory_effect_factor(const Polynomial& p, int m, int k);

// ------------------------------------------------------------ AA(1) closed forms

/// r_{k+1} = M·S·w/‖w‖² with w = r_k − r_{k−1}, S = r_{k−1}r_kᵀ − r_k r_{k−1}ᵀ;
/// M·r_k when the two residuals coincide.
Vector aa1_residual_recursion(const Vector& r_k, const Vector& r_km1, const Matrix& m);

struct RankTwoUpdate {
  Matrix l;
  int k = 0;
};

/// L_0 … L_steps with r_k = L_k·r_0. Throws VerificationError at the first k
/// whose residuals coincide.
std::vector<RankTwoUpdate> lk_recursion(const Matrix& m, const Vector& r0, int steps);

struct LkCheck {
  /// max_k ‖L_k·r_0 − r_k‖ / ‖r_0‖.
  double max_deviation = 0.0;
  /// max over k ≥ 2 of σ_3(L_k)/σ_1(L_k) (0 when n < 3).
  double max_rank_ratio = 0.0;
  int steps = 0;
};

LkCheck lk_check(const Trace& trace, const Problem& problem);

// ------------------------------------------------------------ per-step bounds

/// B(φ, y) = sin²φ / (y² − 2y·cosφ + 1), clamped to [0, 1]. Throws
/// std::domain_error at the indeterminate point (0, 1).
double calB(double phi, double y);

struct BoundsRecord {
  int k = 0;
  /// Absent for the r_k = r_{k−1} step.
  std::optional<double> b_value;
  double lower = 0.0;
  double upper = 0.0;
  /// ‖r_{k+1}‖ / ‖r_k‖.
  double actual = 0.0;
  bool special_case = false;
  bool violation = false;
};

inline constexpr double kBoundsSlack = 1e-9;

/// One record per AA(1) step k ≥ 1 with ‖r_k‖ > 0 and a successor record.
std::vector<BoundsRecord> bounds_check(const Trace& trace, const Matrix& m,
                                       double slack = kBoundsSlack);

// ------------------------------------------------------------ convergence factor

enum class RhoMethod { sigma_k_tail, log_slope };

struct ConvergenceEstimate {
  double rho_hat = 0.0;
  int k_used = 0;
  RhoMethod method = RhoMethod::sigma_k_tail;
  /// Reached the precision floor before enough records accumulated.
  bool finite = false;
};

inline constexpr int kMinUsableRecords = 10;

/// Requires x* known. Throws VerificationError with fewer than 10 usable
/// records unless the trace reached the precision floor.
ConvergenceEstimate estimate_rho(const Trace& trace, RhoMethod method = RhoMethod::sigma_k_tail);

std::string to_string(RhoMethod m);

struct ScalingDeviation {
  double beta = 0.0;
  double polynomial = 0.0;
  double rho = 0.0;
  double rho_base = 0.0;
  double rho_scaled = 0.0;
};

/// AA(1) from x0 and alpha·x0 on a homogeneous linear problem.
ScalingDeviation scaling_invariance_check(const Problem& problem, const Vector& x0, double alpha,
                                          int steps);

// ------------------------------------------------------------ backward errors

/// ‖b − A·x‖ / (‖b‖ + ‖A‖₂‖x‖).
double nrbe(const Matrix& a, const Vector& b, const Vector& x);

/// ‖RᵀR·β + Rᵀr‖ / (‖Rᵀr‖ + ‖RᵀR‖₂‖β‖) for min ‖r + R·β‖.
double ls_nrbe(const Matrix& r_mat, const Vector& r, const Vector& beta);

// ------------------------------------------------------------ multi-Krylov

/// p[t−1][j] = p_{t,j} for t = 1 … betas.size(), j = 0 … m, where
/// betas[t−1] = β⁽ᵗ⁺ᵐ⁻¹⁾ from a general-guess trace.
std::vector<std::vector<Polynomial>> multi_krylov_polynomials(std::span<const Vector> betas, int m);

/// Base case p_{1−i,j} for i = 1 … m + 1: 1 when j = m + 1 − i, else 0.
double multi_krylov_base(int i, int j, int m);

/// max_k ‖Σⱼ p_{k−m+1,j}(M)·r_j − r_{k+1}‖ / ‖r_0‖ over a general-guess trace.
double verify_multi_krylov(const Trace& trace, const Problem& problem);

}  // namespace aa
