#include "aa/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace aa {

namespace {

constexpr double kStallRelTol = 1e-14;

IterationRecord make_record(int k, const AAState::Entry& entry, const AAState::Entry* previous,
                            const std::optional<Vector>& x_star) {
  IterationRecord rec;
  rec.k = k;
  rec.x = entry.x;
  rec.r = entry.r;
  rec.r_norm = norm2(entry.r);
  if (previous != nullptr) {
    const double prev_norm = norm2(previous->r);
    if (prev_norm > 0.0) rec.y = rec.r_norm / prev_norm;
    if (prev_norm > 0.0 && rec.r_norm > 0.0) {
      const double c = dot(entry.r, previous->r) / (rec.r_norm * prev_norm);
      rec.phi = std::acos(std::clamp(c, -1.0, 1.0));
    }
  }
  if (x_star) {
    const double e = norm2(entry.x - *x_star);
    rec.error_norm = e;
    if (k >= 1) {
      const double floor =
          1e2 * std::numeric_limits<double>::epsilon() * norm2(*x_star) + 1e-290;
      if (e > floor) {
        rec.sigma = std::exp(std::log(e) / k);
      } else {
        rec.sigma_floored = true;
      }
    }
  }
  return rec;
}

Trace run(const Problem& problem, std::span<const Vector> initial, const AAConfig& config) {
  config.validate();
  for (const auto& x : initial) {
    if (x.size() != problem.dimension()) {
      throw DimensionError("initial guess has dimension " + std::to_string(x.size()) +
                           ", problem has " + std::to_string(problem.dimension()));
    }
    if (!x.all_finite()) throw NonFiniteError("initial guess has non-finite entries");
  }

  const auto x_star = problem.x_star();
  Trace trace;
  trace.m = config.m;
  trace.initial_guesses = static_cast<int>(initial.size());
  trace.x_star = x_star;

  // Records for the supplied iterates, oldest first.
  {
    const AAState::Entry* prev = nullptr;
    std::vector<AAState::Entry> entries;
    entries.reserve(initial.size());
    for (const auto& x : initial) {
      Vector qx = problem.apply(x);
      Vector r = problem.residual(x);
      entries.push_back({x, std::move(qx), std::move(r)});
    }
    for (std::size_t j = 0; j < entries.size(); ++j) {
      trace.records.push_back(make_record(static_cast<int>(j), entries[j], prev, x_star));
      prev = &entries[j];
    }
    if (!std::all_of(entries.begin(), entries.end(),
                     [](const auto& e) { return e.qx.all_finite() && e.r.all_finite(); })) {
      trace.reason = Termination::non_finite;
      return trace;
    }
  }

  AAState state(problem, initial, config.m);
  const double r0_norm = trace.records.front().r_norm;

  while (true) {
    IterationRecord& current = trace.records.back();
    if (current.r_norm <= config.tol_rel * r0_norm) {
      trace.reason = Termination::converged;
      break;
    }
    if (current.k >= config.max_iter) {
      trace.reason = Termination::max_iter;
      break;
    }

    const AAState::Entry before = state.newest();
    StepResult step;
    try {
      step = aa_step(problem, state, config);
    } catch (const NonFiniteError&) {
      trace.reason = Termination::non_finite;
      break;
    }
    trace.records.back().beta = step.beta;
    const auto& added = state.newest();
    if (!added.x.all_finite() || !added.r.all_finite() || !added.qx.all_finite()) {
      trace.reason = Termination::non_finite;
      break;
    }
    const bool plain_step =
        std::all_of(step.beta.begin(), step.beta.end(), [](double b) { return b == 0.0; });
    if (plain_step && added.x == before.x) {
      trace.reason = Termination::stalled_window;
      break;
    }
    trace.records.push_back(make_record(state.k(), added, &before, x_star));
  }
  return trace;
}

}  // namespace

void AAConfig::validate() const {
  if (m < 0) throw std::invalid_argument("window size m must be >= 0");
  if (max_iter < 1) throw std::invalid_argument("max_iter must be positive");
  if (!(tol_rel > 0.0) || !std::isfinite(tol_rel))
    throw std::invalid_argument("tol_rel must be positive");
  if (ls.kind == LeastSquaresKind::regularized && (!(ls.lambda > 0.0) || !std::isfinite(ls.lambda)))
    throw std::invalid_argument("regularized least squares requires lambda > 0");
}

std::string to_string(Termination t) {
  switch (t) {
    case Termination::converged: return "converged";
    case Termination::max_iter: return "max_iter";
    case Termination::stalled_window: return "stalled_window";
    case Termination::non_finite: return "non_finite";
  }
  return "unknown";
}

std::vector<Vector> Trace::residuals() const {
  std::vector<Vector> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.r);
  return out;
}

std::vector<Vector> Trace::betas() const {
  std::vector<Vector> out;
  if (records.empty()) return out;
  for (std::size_t k = 0; k + 1 < records.size(); ++k) out.push_back(records[k].beta);
  return out;
}

bool residuals_coincide(const Vector& a, const Vector& b) {
  return norm2(a - b) <= kStallRelTol * norm2(a);
}

Matrix difference_matrix(std::span<const Vector> window) {
  if (window.size() < 2) throw std::invalid_argument("difference_matrix: need at least two residuals");
  const Vector& newest = window.front();
  Matrix r(newest.size(), window.size() - 1);
  for (std::size_t j = 1; j < window.size(); ++j) {
    if (window[j].size() != newest.size()) throw DimensionError("window residual sizes differ");
    for (std::size_t i = 0; i < newest.size(); ++i) r(i, j - 1) = newest[i] - window[j][i];
  }
  return r;
}

Vector compute_beta(std::span<const Vector> window, const LeastSquaresStrategy& ls) {
  if (window.size() < 2) throw std::invalid_argument("compute_beta: window needs m' >= 1");
  for (const auto& r : window)
    if (!r.all_finite()) throw NonFiniteError("compute_beta: non-finite residual");

  const Vector& rk = window.front();
  if (window.size() == 2 && residuals_coincide(rk, window[1])) return Vector(1, 0.0);

  const Matrix r = difference_matrix(window);
  switch (ls.kind) {
    case LeastSquaresKind::qr:
      return qr_least_squares(r, rk);
    case LeastSquaresKind::pseudo_inverse:
      return -pseudo_inverse_solve(r, rk);
    case LeastSquaresKind::regularized: {
      double lambda = ls.lambda;
      if (ls.scale == LambdaScale::relative_to_max_diag) {
        double max_diag = 0.0;
        for (std::size_t j = 0; j < r.cols(); ++j) max_diag = std::max(max_diag, dot(r.column(j), r.column(j)));
        lambda *= max_diag;
        if (lambda == 0.0) return Vector(r.cols(), 0.0);
      }
      return -regularized_solve(r, rk, lambda);
    }
  }
  throw std::logic_error("compute_beta: unhandled strategy");
}

AAState::AAState(const Problem& problem, std::span<const Vector> initial_iterates, int m)
    : k_(static_cast<int>(initial_iterates.size()) - 1), m_(m) {
  if (initial_iterates.empty()) throw std::invalid_argument("AAState: need an initial iterate");
  for (const auto& x : initial_iterates) {
    Vector qx = problem.apply(x);
    Vector r = problem.residual(x);
    window_.push_front({x, std::move(qx), std::move(r)});
  }
  while (window_.size() > static_cast<std::size_t>(m_) + 1) window_.pop_back();
}

void AAState::push(Entry e) {
  window_.push_front(std::move(e));
  ++k_;
  while (window_.size() > static_cast<std::size_t>(m_) + 1) window_.pop_back();
}

StepResult aa_step(const Problem& problem, AAState& state, const AAConfig& config) {
  const int columns = state.active_columns();
  const auto& window = state.window();
  const Vector& q_newest = window.front().qx;

  StepResult out;
  out.x_next = q_newest;
  if (columns > 0) {
    std::vector<Vector> residuals;
    residuals.reserve(static_cast<std::size_t>(columns) + 1);
    for (int i = 0; i <= columns; ++i) residuals.push_back(window[static_cast<std::size_t>(i)].r);
    out.beta = compute_beta(residuals, config.ls);
    for (int i = 1; i <= columns; ++i) {
      const double b = out.beta[static_cast<std::size_t>(i - 1)];
      if (b == 0.0) continue;
      out.x_next += b * (q_newest - window[static_cast<std::size_t>(i)].qx);
    }
  }
  Vector qx = problem.apply(out.x_next);
  Vector r = problem.residual(out.x_next);
  state.push({out.x_next, std::move(qx), std::move(r)});
  return out;
}

Trace solve(const Problem& problem, const Vector& x0, const AAConfig& config) {
  const Vector initial[] = {x0};
  return run(problem, initial, config);
}

Trace solve_general(const Problem& problem, std::span<const Vector> guesses,
                    const AAConfig& config) {
  if (guesses.size() != static_cast<std::size_t>(config.m) + 1) {
    throw std::invalid_argument("general-guess mode needs m + 1 = " + std::to_string(config.m + 1) +
                                " initial guesses, got " + std::to_string(guesses.size()));
  }
  if (config.max_iter < config.m) throw std::invalid_argument("max_iter must be >= m in general-guess mode");
  return run(problem, guesses, config);
}

Trace fp_solve(const Problem& problem, const Vector& x0, int max_iter, double tol_rel) {
  AAConfig config;
  config.m = 0;
  config.max_iter = max_iter;
  config.tol_rel = tol_rel;
  return solve(problem, x0, config);
}

}  // namespace aa
