#include "aa/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <thread>

namespace aa {

namespace {

struct TrialOutcome {
  std::optional<double> rho;
  bool finite = false;
  int iterations = 0;
  Termination reason = Termination::max_iter;
  bool reached_solution = false;
  double beta_min = std::numeric_limits<double>::quiet_NaN();
  double beta_max = std::numeric_limits<double>::quiet_NaN();
};

TrialOutcome outcome_of(const Trace& trace, RhoMethod method) {
  TrialOutcome out;
  out.iterations = trace.records.empty() ? 0 : trace.records.back().k;
  out.reason = trace.reason;
  const double floor = trace.x_star ? 1e-13 * (1.0 + norm2(*trace.x_star)) : 0.0;
  for (const auto& rec : trace.records) {
    if (trace.x_star && !(rec.error_norm.value_or(0.0) > floor)) break;
    for (double b : rec.beta) {
      if (std::isnan(out.beta_min) || b < out.beta_min) out.beta_min = b;
      if (std::isnan(out.beta_max) || b > out.beta_max) out.beta_max = b;
    }
  }
  if (trace.reason == Termination::non_finite || !trace.x_star) return out;
  out.reached_solution = std::any_of(trace.records.begin(), trace.records.end(), [&](const auto& rec) {
    return rec.error_norm && *rec.error_norm <= floor;
  });
  if (!out.reached_solution) return out;
  try {
    const auto est = estimate_rho(trace, method);
    out.rho = est.rho_hat;
    out.finite = est.finite;
  } catch (const VerificationError&) {
  }
  return out;
}

TrialOutcome run_single(const Problem& problem, const Vector& x0, const AAConfig& config, RhoMethod method) {
  try {
    return outcome_of(solve(problem, x0, config), method);
  } catch (const NumericalError&) {
    TrialOutcome out;
    out.reason = Termination::non_finite;
    return out;
  }
}

SweepRow make_row(std::size_t index, std::vector<double> params, const TrialOutcome& o) {
  SweepRow row;
  row.index = index;
  row.params = std::move(params);
  row.rho_hat = o.rho;
  row.finite = o.finite;
  row.iterations = o.iterations;
  row.reason = o.reason;
  row.reached_solution = o.reached_solution;
  row.beta_min = o.beta_min;
  row.beta_max = o.beta_max;
  return row;
}

void finalize(SweepResult& result) {
  std::vector<double> values;
  std::vector<double> fp_values;
  bool any_fp = false;
  for (const auto& row : result.rows) {
    if (row.rho_hat) values.push_back(*row.rho_hat);
    if (row.fp_rho_hat) fp_values.push_back(*row.fp_rho_hat);
    any_fp = any_fp || row.fp_rho_hat.has_value();
  }
  result.stats = summarize(values);
  if (any_fp) result.fp_stats = summarize(fp_values);
}

Vector star_or_zero(const Problem& problem) {
  if (auto xs = problem.x_star()) return *xs;
  return Vector(problem.dimension(), 0.0);
}

void require_plane(const Problem& problem, const char* what) {
  if (problem.dimension() != 2)
    throw DimensionError(std::string(what) + ": requires a two-dimensional problem");
}

}  // namespace

AAConfig SweepOptions::config() const {
  AAConfig c;
  c.m = m;
  c.max_iter = max_iter;
  c.tol_rel = tol_rel;
  c.ls = ls;
  c.validate();
  return c;
}

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& body) {
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(jobs, 1)), std::max<std::size_t>(n, 1));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      (void)w;
      while (!failed.load()) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) break;
        try {
          body(i);
        } catch (...) {
          if (!failed.exchange(true)) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

SweepStats summarize(const std::vector<double>& values) {
  SweepStats s;
  s.count = values.size();
  if (values.empty()) return s;
  double total = 0.0;
  s.min = values.front();
  s.max = values.front();
  for (double v : values) {
    total += v;
    s.min = std::min(s.min, v);
    s.max = std::max(s.max, v);
    const double scaled = std::floor(v * static_cast<double>(kHistogramBins));
    const auto bin = static_cast<std::size_t>(std::clamp(scaled, 0.0, static_cast<double>(kHistogramBins - 1)));
    ++s.histogram[bin];
  }
  s.mean = total / static_cast<double>(values.size());
  return s;
}

Vector monte_carlo_draw(std::uint64_t seed, std::size_t index, std::size_t n, Box box) {
  if (!(box.lo < box.hi)) throw std::invalid_argument("Monte Carlo box must satisfy lo < hi");
  const auto idx = static_cast<std::uint64_t>(index);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(idx), static_cast<std::uint32_t>(idx >> 32)};
  std::mt19937_64 gen(seq);
  std::uniform_real_distribution<double> dist(box.lo, box.hi);
  Vector x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = dist(gen);
  return x;
}

SweepResult run_monte_carlo(const Problem& problem, const MonteCarloConfig& mc, const SweepOptions& opt) {
  if (mc.trials < 1) throw std::invalid_argument("monte carlo: trials must be >= 1");
  if (!problem.x_star()) throw std::invalid_argument("monte carlo: problem has no known x*");
  const AAConfig config = opt.config();
  AAConfig fp_config = config;
  fp_config.m = 0;
  const Vector xs = *problem.x_star();
  const std::size_t n = problem.dimension();

  SweepResult result;
  result.kind = "monte_carlo";
  for (std::size_t i = 0; i < n; ++i) result.param_names.push_back("x0_" + std::to_string(i + 1));
  result.rows.resize(mc.trials);
  parallel_for(mc.trials, opt.jobs, [&](std::size_t i) {
    const Vector x0 = xs + monte_carlo_draw(mc.seed, i, n, mc.box);
    SweepRow row = make_row(i, x0.values(), run_single(problem, x0, config, opt.method));
    if (mc.run_fp) row.fp_rho_hat = run_single(problem, x0, fp_config, opt.fp_method).rho;
    result.rows[i] = std::move(row);
  });
  if (opt.m == 1) {
    for (const auto& row : result.rows) {
      if (row.reached_solution && !std::isnan(row.beta_min) && row.beta_min <= -1.0) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "trial %zu: beta_min = %.17g <= -1", row.index, row.beta_min);
        result.warnings.emplace_back(buf);
      }
    }
  }
  finalize(result);
  return result;
}

SweepResult run_theta_sweep(const Problem& problem, std::size_t n_angles, const SweepOptions& opt) {
  require_plane(problem, "theta sweep");
  if (n_angles < 1) throw std::invalid_argument("theta sweep: n_angles must be >= 1");
  const AAConfig config = opt.config();
  const Vector xs = star_or_zero(problem);

  SweepResult result;
  result.kind = "theta";
  result.param_names = {"theta"};
  result.rows.resize(n_angles);
  parallel_for(n_angles, opt.jobs, [&](std::size_t i) {
    const double theta = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n_angles);
    const Vector x0 = xs + Vector{std::cos(theta), std::sin(theta)};
    result.rows[i] = make_row(i, {theta}, run_single(problem, x0, config, opt.method));
  });
  finalize(result);
  return result;
}

SweepResult run_grid_sweep(const Problem& problem, const GridConfig& grid, const SweepOptions& opt) {
  require_plane(problem, "grid sweep");
  if (grid.nx < 1 || grid.ny < 1) throw std::invalid_argument("grid sweep: counts must be >= 1");
  if (!(grid.x_lo <= grid.x_hi) || !(grid.y_lo <= grid.y_hi))
    throw std::invalid_argument("grid sweep: bounds must satisfy lo <= hi");
  const AAConfig config = opt.config();
  auto coord = [](double lo, double hi, std::size_t i, std::size_t n) {
    return n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  };

  SweepResult result;
  result.kind = "grid";
  result.param_names = {"x0_1", "x0_2"};
  const std::size_t total = grid.nx * grid.ny;
  result.rows.resize(total);
  parallel_for(total, opt.jobs, [&](std::size_t idx) {
    const std::size_t i = idx / grid.ny, j = idx % grid.ny;
    const Vector x0{coord(grid.x_lo, grid.x_hi, i, grid.nx), coord(grid.y_lo, grid.y_hi, j, grid.ny)};
    result.rows[idx] = make_row(idx, x0.values(), run_single(problem, x0, config, opt.method));
  });
  finalize(result);
  return result;
}

SweepResult run_dual_guess_search(const Problem& problem, const DualGuessConfig& dual,
                                  const SweepOptions& opt) {
  require_plane(problem, "dual-guess search");
  if (dual.n_theta1 < 1 || dual.n_theta2 < 1 || dual.n_alpha < 1)
    throw std::invalid_argument("dual-guess search: counts must be >= 1");
  if (!(dual.alpha_max > 0.0)) throw std::invalid_argument("dual-guess search: alpha_max must be > 0");
  if (opt.m != 1) throw std::invalid_argument("dual-guess search runs AA(1) (m = 1)");
  AAConfig config = opt.config();
  config.max_iter = std::max(config.max_iter, 1);
  const Vector xs = star_or_zero(problem);

  SweepResult result;
  result.kind = "dual_guess";
  result.param_names = {"theta1", "theta2", "alpha"};
  const std::size_t total = dual.n_theta1 * dual.n_theta2 * dual.n_alpha;
  result.rows.resize(total);
  parallel_for(total, opt.jobs, [&](std::size_t idx) {
    const std::size_t a = idx % dual.n_alpha;
    const std::size_t t2 = (idx / dual.n_alpha) % dual.n_theta2;
    const std::size_t t1 = idx / (dual.n_alpha * dual.n_theta2);
    const double theta1 = 2.0 * std::numbers::pi * static_cast<double>(t1) / static_cast<double>(dual.n_theta1);
    const double theta2 = 2.0 * std::numbers::pi * static_cast<double>(t2) / static_cast<double>(dual.n_theta2);
    const double alpha = dual.alpha_max * static_cast<double>(a + 1) / static_cast<double>(dual.n_alpha);
    const Vector guesses[] = {xs + Vector{std::cos(theta1), std::sin(theta1)},
                              xs + alpha * Vector{std::cos(theta2), std::sin(theta2)}};
    TrialOutcome o;
    try {
      o = outcome_of(solve_general(problem, guesses, config), opt.method);
    } catch (const NumericalError&) {
      o.reason = Termination::non_finite;
    }
    result.rows[idx] = make_row(idx, {theta1, theta2, alpha}, o);
  });
  finalize(result);
  return result;
}

LambdaSweepResult run_lambda_sweep(const Problem& problem, const Vector& x0,
                                   const std::vector<LambdaSetting>& settings, const SweepOptions& opt,
                                   bool keep_curves) {
  if (settings.empty()) throw std::invalid_argument("lambda sweep: need at least one lambda");
  auto errors_of = [](const Trace& t) {
    std::vector<double> e;
    for (const auto& rec : t.records) e.push_back(rec.error_norm.value_or(std::numeric_limits<double>::quiet_NaN()));
    return e;
  };

  LambdaSweepResult result;
  {
    SweepOptions ref = opt;
    ref.ls = LeastSquaresStrategy::qr();
    const Trace t = solve(problem, x0, ref.config());
    result.reference_rho = outcome_of(t, opt.method).rho;
    if (keep_curves) result.reference_errors = errors_of(t);
  }
  result.rows.resize(settings.size());
  parallel_for(settings.size(), opt.jobs, [&](std::size_t i) {
    SweepOptions o = opt;
    o.ls = LeastSquaresStrategy::regularized(settings[i].lambda, settings[i].scale);
    const Trace t = solve(problem, x0, o.config());
    const TrialOutcome out = outcome_of(t, opt.method);
    LambdaRow row;
    row.setting = settings[i];
    row.rho_hat = out.rho;
    row.finite = out.finite;
    row.iterations = out.iterations;
    if (keep_curves) row.errors = errors_of(t);
    result.rows[i] = std::move(row);
  });
  return result;
}

std::vector<NrbeRow> run_nrbe_trace(const Problem& problem, const Vector& x0, const AAConfig& config) {
  const auto* lin = problem.linear();
  if (lin == nullptr) throw std::invalid_argument("nrbe trace: requires a linear problem");
  const Trace t = solve(problem, x0, config);
  std::vector<NrbeRow> rows;
  rows.reserve(t.size());
  for (std::size_t k = 0; k < t.size(); ++k) {
    const auto& rec = t.records[k];
    NrbeRow row;
    row.k = rec.k;
    row.r_norm = rec.r_norm;
    row.system_nrbe = nrbe(lin->system_matrix(), lin->affine_term(), rec.x);
    if (!rec.beta.empty()) {
      std::vector<Vector> window;
      for (std::size_t i = 0; i <= rec.beta.size(); ++i) window.push_back(t.records[k - i].r);
      row.ls_nrbe = ls_nrbe(difference_matrix(window), rec.r, rec.beta);
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace aa
