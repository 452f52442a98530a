#pragma once

// Windowed Anderson acceleration AA(m) for fixed-point maps q, with
// per-step diagnostics recorded into a Trace.

#include <algorithm>
#include <deque>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aa/linalg.hpp"
#include "aa/problems.hpp"

namespace aa {

/// tol_rel that lets a run reach max_iter unless the residual underflows.
inline constexpr double kNoEarlyStop = std::numeric_limits<double>::min();

enum class LeastSquaresKind { qr, pseudo_inverse, regularized };

enum class LambdaScale {
  absolute,
  /// λ_eff = λ · max(diag(RᵀR)) at every step.
  relative_to_max_diag,
};

struct LeastSquaresStrategy {
  LeastSquaresKind kind = LeastSquaresKind::qr;
  double lambda = 0.0;
  LambdaScale scale = LambdaScale::absolute;

  static LeastSquaresStrategy qr() { return {}; }
  static LeastSquaresStrategy pseudo_inverse() { return {LeastSquaresKind::pseudo_inverse}; }
  static LeastSquaresStrategy regularized(double lambda,
                                          LambdaScale scale = LambdaScale::absolute) {
    return {LeastSquaresKind::regularized, lambda, scale};
  }
};

struct AAConfig {
  int m = 1;
  int max_iter = 1000;
  /// Stop once ‖r_k‖ ≤ tol_rel·‖r_0‖.
  double tol_rel = 1e-14;
  LeastSquaresStrategy ls;

  /// Throws std::invalid_argument on inconsistent settings.
  void validate() const;
};

struct IterationRecord {
  int k = 0;
  Vector x;
  Vector r;
  double r_norm = 0.0;
  /// β⁽ᵏ⁾ used to form x_{k+1}; empty when no acceleration step was taken.
  Vector beta;
  /// ‖r_k‖/‖r_{k−1}‖, absent for k = 0 or ‖r_{k−1}‖ = 0.
  std::optional<double> y;
  /// Angle in [0, π] between r_k and r_{k−1}; absent when either is zero.
  std::optional<double> phi;
  /// ‖x_k − x*‖^{1/k}; absent for k = 0, unknown x*, or below the precision floor.
  std::optional<double> sigma;
  bool sigma_floored = false;
  /// ‖x_k − x*‖ when x* is known.
  std::optional<double> error_norm;
};

enum class Termination { converged, max_iter, stalled_window, non_finite };

std::string to_string(Termination t);

struct Trace {
  std::vector<IterationRecord> records;
  Termination reason = Termination::max_iter;
  int m = 0;
  /// 1 for a single initial guess, m + 1 for the general-initial-guess mode.
  int initial_guesses = 1;
  /// Copied from the problem when known.
  std::optional<Vector> x_star;

  const IterationRecord& at(std::size_t k) const { return records.at(k); }
  std::size_t size() const noexcept { return records.size(); }
  std::vector<Vector> residuals() const;
  /// β⁽ᵏ⁾ for k = 0 … size−2 (the steps that produced records 1 … size−1).
  std::vector<Vector> betas() const;
};

/// β for the window residuals (newest first: r_k, r_{k−1}, …, r_{k−m'}).
/// Builds R_k = [r_k − r_{k−1}, …, r_k − r_{k−m'}] and minimizes ‖r_k + R_k·β‖.
Vector compute_beta(std::span<const Vector> window_residuals, const LeastSquaresStrategy& ls);

/// R_k for a window of residuals, newest first.
Matrix difference_matrix(std::span<const Vector> window_residuals);

/// True when ‖a − b‖ ≤ 1e−14·‖a‖ (the single-column stall test).
bool residuals_coincide(const Vector& a, const Vector& b);

/// Sliding window of (x, q(x), r(x)) triples, newest first.
class AAState {
 public:
  struct Entry {
    Vector x;
    Vector qx;
    Vector r;
  };

  AAState(const Problem& problem, std::span<const Vector> initial_iterates, int m);

  int k() const noexcept { return k_; }
  int m() const noexcept { return m_; }
  const std::deque<Entry>& window() const noexcept { return window_; }
  const Entry& newest() const { return window_.front(); }
  /// Window size used by the next step: min(k, m).
  int active_columns() const noexcept { return std::min(k_, m_); }

  void push(Entry e);

 private:
  int k_;
  int m_;
  std::deque<Entry> window_;
};

/// One acceleration step. Returns x_{k+1} and β⁽ᵏ⁾, and advances `state`.
struct StepResult {
  Vector x_next;
  Vector beta;
};
StepResult aa_step(const Problem& problem, AAState& state, const AAConfig& config);

/// AA(m) from a single initial guess; window grows 1 → m.
Trace solve(const Problem& problem, const Vector& x0, const AAConfig& config);

/// AA(m) started from m + 1 general initial guesses x_0 … x_m, using the full
/// window from the first step.
Trace solve_general(const Problem& problem, std::span<const Vector> guesses,
                    const AAConfig& config);

/// Plain fixed-point iteration with the same Trace schema.
Trace fp_solve(const Problem& problem, const Vector& x0, int max_iter, double tol_rel);

}  // namespace aa
