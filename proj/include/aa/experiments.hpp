#pragma once

// Batch drivers for initial-guess sweeps. Every trial is independent; rows are
// stored by trial index, so results do not depend on the number of jobs.

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "aa/analysis.hpp"
#include "aa/problems.hpp"
#include "aa/solver.hpp"

namespace aa {

struct SweepOptions {
  int m = 1;
  int max_iter = 2000;
  double tol_rel = 1e-16;
  LeastSquaresStrategy ls;
  RhoMethod method = RhoMethod::sigma_k_tail;
  /// Estimator for the fixed-point baseline, whose error is asymptotically geometric.
  RhoMethod fp_method = RhoMethod::log_slope;
  int jobs = 1;

  AAConfig config() const;
};

struct SweepRow {
  std::size_t index = 0;
  /// Sweep inputs, named by SweepResult::param_names.
  std::vector<double> params;
  std::optional<double> rho_hat;
  bool finite = false;
  int iterations = 0;
  Termination reason = Termination::max_iter;
  /// The error fell below the precision floor, i.e. the run converged to x*.
  bool reached_solution = false;
  /// Extremes of β over records above the precision floor (NaN when none).
  double beta_min = 0.0;
  double beta_max = 0.0;
  /// Fixed-point baseline, Monte Carlo only.
  std::optional<double> fp_rho_hat;
};

inline constexpr std::size_t kHistogramBins = 100;

struct SweepStats {
  std::size_t count = 0;
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
  /// Uniform bins on [0, 1]; values ≥ 1 land in the last bin.
  std::array<std::size_t, kHistogramBins> histogram{};
};

SweepStats summarize(const std::vector<double>& values);

struct SweepResult {
  std::string kind;
  std::vector<std::string> param_names;
  std::vector<SweepRow> rows;
  SweepStats stats;
  std::optional<SweepStats> fp_stats;
  std::vector<std::string> warnings;
};

struct Box {
  double lo = -1.0;
  double hi = 1.0;
};

struct MonteCarloConfig {
  std::size_t trials = 1000;
  std::uint64_t seed = 0;
  Box box;
  bool run_fp = true;
};

/// Trial i draws x0 − x* uniformly from box^n with a generator seeded from (seed, i).
Vector monte_carlo_draw(std::uint64_t seed, std::size_t index, std::size_t n, Box box);

SweepResult run_monte_carlo(const Problem& problem, const MonteCarloConfig& mc, const SweepOptions& opt);

/// x0 = x* + (cos θ, sin θ) for θ = 2πk/n, k = 0 … n−1.
SweepResult run_theta_sweep(const Problem& problem, std::size_t n_angles, const SweepOptions& opt);

struct GridConfig {
  std::size_t nx = 101;
  std::size_t ny = 101;
  double x_lo = -1.0, x_hi = 1.0;
  double y_lo = -1.0, y_hi = 1.0;
};

/// x0 on an inclusive nx × ny lattice (absolute coordinates).
SweepResult run_grid_sweep(const Problem& problem, const GridConfig& grid, const SweepOptions& opt);

struct DualGuessConfig {
  std::size_t n_theta1 = 50;
  std::size_t n_theta2 = 50;
  std::size_t n_alpha = 50;
  double alpha_max = 10.0;
};

/// General-guess AA(1) from x0 = x* + (cos θ₁, sin θ₁), x1 = x* + α(cos θ₂, sin θ₂) with
/// θ = 2πk/n (k = 0 … n−1) and α = α_max·k/n (k = 1 … n).
SweepResult run_dual_guess_search(const Problem& problem, const DualGuessConfig& dual,
                                  const SweepOptions& opt);

struct LambdaSetting {
  double lambda = 0.0;
  LambdaScale scale = LambdaScale::absolute;
};

struct LambdaRow {
  LambdaSetting setting;
  std::optional<double> rho_hat;
  bool finite = false;
  int iterations = 0;
  /// ‖x_k − x*‖ per iteration when curves were requested.
  std::vector<double> errors;
};

struct LambdaSweepResult {
  std::optional<double> reference_rho;
  std::vector<double> reference_errors;
  std::vector<LambdaRow> rows;
};

/// AA(1) with the regularized least-squares strategy per setting, plus the
/// unregularized (QR) reference run.
LambdaSweepResult run_lambda_sweep(const Problem& problem, const Vector& x0,
                                   const std::vector<LambdaSetting>& settings, const SweepOptions& opt,
                                   bool keep_curves);

struct NrbeRow {
  int k = 0;
  double r_norm = 0.0;
  double system_nrbe = 0.0;
  /// Backward error of the least-squares solve that produced β⁽ᵏ⁾.
  std::optional<double> ls_nrbe;
};

std::vector<NrbeRow> run_nrbe_trace(const Problem& problem, const Vector& x0, const AAConfig& config);

/// Calls body(i) for i in [0, n) on up to `jobs` threads.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& body);

}  // namespace aa
