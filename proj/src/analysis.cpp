#include "aa/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace aa {

namespace {

const LinearProblem& require_linear(const Problem& problem, const char* what) {
  const auto* lin = problem.linear();
  if (lin == nullptr) throw std::invalid_argument(std::string(what) + ": requires a linear problem");
  return *lin;
}

double sum(const Vector& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

/// exp of the least-squares slope of log(e) against k.
double log_slope_rate(std::span<const int> ks, std::span<const double> errors) {
  const std::size_t n = ks.size();
  double mk = 0.0, me = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mk += ks[i];
    me += std::log(errors[i]);
  }
  mk /= static_cast<double>(n);
  me /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dk = ks[i] - mk;
    sxy += dk * (std::log(errors[i]) - me);
    sxx += dk * dk;
  }
  return std::exp(sxy / sxx);
}

}  // namespace

// ------------------------------------------------------------ residual polynomials

std::vector<Polynomial> polynomial_recurrence(std::span<const Vector> betas, int m) {
  if (m < 0) throw std::invalid_argument("polynomial_recurrence: m must be >= 0");
  std::vector<Polynomial> p{Polynomial::constant(1.0)};
  p.reserve(betas.size() + 1);
  for (std::size_t k = 0; k < betas.size(); ++k) {
    const Vector& beta = betas[k];
    const std::size_t expected = std::min<std::size_t>(k, static_cast<std::size_t>(m));
    if (beta.size() != expected) {
      throw std::invalid_argument("polynomial_recurrence: beta at step " + std::to_string(k) +
                                  " has length " + std::to_string(beta.size()) + ", expected " +
                                  std::to_string(expected));
    }
    Polynomial next = (1.0 + sum(beta)) * p[k];
    for (std::size_t i = 1; i <= beta.size(); ++i) next += (-beta[i - 1]) * p[k - i];
    p.push_back(next.shifted());
  }
  return p;
}

double verify_polynomial_trace(const Trace& trace, const Problem& problem) {
  const auto& lin = require_linear(problem, "verify_polynomial_trace");
  if (trace.initial_guesses != 1)
    throw std::invalid_argument("verify_polynomial_trace: expects a single-guess trace");
  if (trace.records.empty()) return 0.0;
  const auto polys = polynomial_recurrence(trace.betas(), trace.m);
  const Vector& r0 = trace.records.front().r;
  const double scale = norm2(r0);
  if (scale == 0.0) return 0.0;
  double worst = 0.0;
  for (std::size_t k = 0; k < trace.size(); ++k) {
    const Vector predicted = polys[k].apply(lin.iteration_matrix(), r0);
    worst = std::max(worst, norm2(predicted - trace.records[k].r) / scale);
  }
  return worst;
}

Polynomial memory_effect_factor(const Polynomial& p, int m, int k) {
  if (m < 0 || k < 1) throw std::invalid_argument("memory_effect_factor: need m >= 0 and k >= 1");
  const std::size_t s = static_cast<std::size_t>((k - 1) / (m + 1));
  const double tol = 1e-9 * p.abs_sum();
  for (std::size_t j = 0; j <= s; ++j) {
    if (std::abs(p.coeff(j)) > tol) {
      throw VerificationError("memory effect violated at k = " + std::to_string(k) + ": coefficient c_" +
                              std::to_string(j) + " = " + fmt(p.coeff(j)) + " should vanish");
    }
  }
  std::vector<double> g;
  for (std::size_t j = s + 1; j < p.coeffs.size(); ++j) g.push_back(p.coeffs[j]);
  return Polynomial(std::move(g));
}

// ------------------------------------------------------------ AA(1) closed forms

Vector aa1_residual_recursion(const Vector& r_k, const Vector& r_km1, const Matrix& m) {
  if (r_k.size() != r_km1.size() || m.cols() != r_k.size() || !m.square())
    throw DimensionError("aa1_residual_recursion: size mismatch");
  if (residuals_coincide(r_k, r_km1)) return m * r_k;
  const Vector w = r_k - r_km1;
  const Matrix s = outer(r_km1, r_k) - outer(r_k, r_km1);
  return (1.0 / dot(w, w)) * (m * (s * w));
}

std::vector<RankTwoUpdate> lk_recursion(const Matrix& m, const Vector& r0, int steps) {
  if (!m.square() || m.rows() != r0.size()) throw DimensionError("lk_recursion: size mismatch");
  if (steps < 0) throw std::invalid_argument("lk_recursion: steps must be >= 0");
  const std::size_t n = r0.size();
  const Matrix r0_outer = outer(r0, r0);
  std::vector<RankTwoUpdate> out{{Matrix::identity(n), 0}};
  if (steps >= 1) out.push_back({m, 1});
  for (int k = 1; k < steps; ++k) {
    const Matrix& lk = out[static_cast<std::size_t>(k)].l;
    const Matrix& lkm1 = out[static_cast<std::size_t>(k - 1)].l;
    if (residuals_coincide(lk * r0, lkm1 * r0)) {
      throw VerificationError("lk_recursion: r_k = r_{k-1} at k = " + std::to_string(k));
    }
    const Matrix d = lk - lkm1;
    const Vector w = d * r0;
    const Matrix t = lk * r0_outer * lkm1.transpose();
    Matrix next = m * (t.transpose() - t) * d;
    next *= 1.0 / dot(w, w);
    out.push_back({std::move(next), k + 1});
  }
  return out;
}

LkCheck lk_check(const Trace& trace, const Problem& problem) {
  const auto& lin = require_linear(problem, "lk_check");
  if (trace.m != 1 || trace.initial_guesses != 1)
    throw std::invalid_argument("lk_check: expects a single-guess AA(1) trace");
  LkCheck out;
  if (trace.records.empty()) return out;
  const Vector& r0 = trace.records.front().r;
  const double scale = norm2(r0);
  out.steps = static_cast<int>(trace.size()) - 1;
  const auto ls = lk_recursion(lin.iteration_matrix(), r0, out.steps);
  for (const auto& u : ls) {
    const auto k = static_cast<std::size_t>(u.k);
    if (scale > 0.0) out.max_deviation = std::max(out.max_deviation, norm2(u.l * r0 - trace.records[k].r) / scale);
    if (u.k >= 2) {
      const Vector s = singular_values(u.l);
      if (s.size() >= 3 && s[0] > 0.0) out.max_rank_ratio = std::max(out.max_rank_ratio, s[2] / s[0]);
    }
  }
  return out;
}

// ------------------------------------------------------------ per-step bounds

double calB(double phi, double y) {
  if (!std::isfinite(phi) || !std::isfinite(y)) throw std::domain_error("calB: non-finite input");
  if (std::abs(phi) < 1e-12 && std::abs(y - 1.0) < 1e-12)
    throw std::domain_error("calB: indeterminate at (phi, y) = (0, 1)");
  const double s = std::sin(phi);
  const double den = y * y - 2.0 * y * std::cos(phi) + 1.0;
  if (!(den > 0.0)) return 0.0;
  return std::clamp(s * s / den, 0.0, 1.0);
}

std::vector<BoundsRecord> bounds_check(const Trace& trace, const Matrix& m, double slack) {
  if (trace.m != 1) throw std::invalid_argument("bounds_check: expects an AA(1) trace");
  const SingularPair sv = singular_values_small(m);
  std::vector<BoundsRecord> out;
  for (std::size_t k = 1; k + 1 < trace.size(); ++k) {
    const auto& prev = trace.records[k - 1];
    const auto& cur = trace.records[k];
    const auto& next = trace.records[k + 1];
    if (cur.r_norm == 0.0 || prev.r_norm == 0.0) continue;

    BoundsRecord rec;
    rec.k = static_cast<int>(k);
    rec.actual = next.r_norm / cur.r_norm;
    const double phi = cur.phi.value_or(0.0);
    const double y = cur.y.value_or(1.0);
    rec.special_case = residuals_coincide(cur.r, prev.r) ||
                       (std::abs(phi) < 1e-12 && std::abs(y - 1.0) < 1e-12);
    double factor = 1.0;
    if (!rec.special_case) {
      rec.b_value = calB(phi, y);
      factor = std::sqrt(*rec.b_value);
    }
    rec.lower = sv.sigma_min * factor;
    rec.upper = sv.sigma_max * factor;
    rec.violation = rec.actual < rec.lower * (1.0 - slack) || rec.actual > rec.upper * (1.0 + slack);
    out.push_back(rec);
  }
  return out;
}

// ------------------------------------------------------------ convergence factor

std::string to_string(RhoMethod m) {
  return m == RhoMethod::sigma_k_tail ? "sigma_k_tail" : "log_slope";
}

ConvergenceEstimate estimate_rho(const Trace& trace, RhoMethod method) {
  if (!trace.x_star) throw std::invalid_argument("estimate_rho: x* unknown for this trace");
  const double floor = 1e-13 * (1.0 + norm2(*trace.x_star));
  std::vector<int> ks;
  std::vector<double> errors;
  bool reached_floor = false;
  for (const auto& rec : trace.records) {
    if (rec.k < 1) continue;
    const double e = rec.error_norm.value_or(0.0);
    if (!(e > floor)) {
      reached_floor = true;
      break;
    }
    ks.push_back(rec.k);
    errors.push_back(e);
  }

  ConvergenceEstimate est;
  est.method = method;
  if (ks.size() < static_cast<std::size_t>(kMinUsableRecords)) {
    if (!reached_floor) {
      throw VerificationError("estimate_rho: only " + std::to_string(ks.size()) +
                              " usable records above the precision floor (need " +
                              std::to_string(kMinUsableRecords) + ")");
    }
    est.finite = true;
    est.rho_hat = 0.0;
    est.k_used = ks.empty() ? 0 : ks.back();
    return est;
  }
  est.k_used = ks.back();
  if (method == RhoMethod::sigma_k_tail) {
    est.rho_hat = std::exp(std::log(errors.back()) / ks.back());
  } else {
    const std::size_t half = ks.size() / 2;
    est.rho_hat = log_slope_rate(std::span(ks).subspan(half), std::span(errors).subspan(half));
  }
  return est;
}

ScalingDeviation scaling_invariance_check(const Problem& problem, const Vector& x0, double alpha,
                                          int steps) {
  const auto& lin = require_linear(problem, "scaling_invariance_check");
  if (alpha == 0.0 || !std::isfinite(alpha))
    throw std::invalid_argument("scaling_invariance_check: alpha must be a nonzero finite scalar");
  if (std::any_of(lin.affine_term().begin(), lin.affine_term().end(), [](double v) { return v != 0.0; }))
    throw std::invalid_argument("scaling_invariance_check: requires a homogeneous problem (b = 0)");

  AAConfig config;
  config.m = 1;
  config.max_iter = steps;
  config.tol_rel = kNoEarlyStop;
  const Trace base = solve(problem, x0, config);
  const Trace scaled = solve(problem, alpha * x0, config);

  ScalingDeviation out;
  const auto b0 = base.betas();
  const auto b1 = scaled.betas();
  const std::size_t common = std::min(b0.size(), b1.size());
  for (std::size_t k = 0; k < common; ++k) {
    if (b0[k].size() != b1[k].size()) {
      out.beta = std::numeric_limits<double>::infinity();
      break;
    }
    for (std::size_t i = 0; i < b0[k].size(); ++i) out.beta = std::max(out.beta, std::abs(b0[k][i] - b1[k][i]));
  }

  const auto p0 = polynomial_recurrence(std::span(b0).first(common), 1);
  const auto p1 = polynomial_recurrence(std::span(b1).first(common), 1);
  for (std::size_t k = 0; k < p0.size(); ++k)
    out.polynomial = std::max(out.polynomial, max_coeff_difference(p0[k], p1[k]) / (1.0 + p0[k].abs_sum()));

  // Common window where both errors stay above a floor relative to their start.
  std::vector<int> ks;
  std::vector<double> e0, e1;
  const std::size_t n = std::min(base.size(), scaled.size());
  if (n > 0) {
    const double f0 = 1e-13 * base.records[0].error_norm.value_or(0.0);
    const double f1 = 1e-13 * scaled.records[0].error_norm.value_or(0.0);
    for (std::size_t k = 1; k < n; ++k) {
      const double a = base.records[k].error_norm.value_or(0.0);
      const double b = scaled.records[k].error_norm.value_or(0.0);
      if (!(a > f0) || !(b > f1)) break;
      ks.push_back(static_cast<int>(k));
      e0.push_back(a);
      e1.push_back(b);
    }
  }
  if (ks.size() >= 4) {
    const std::size_t half = ks.size() / 2;
    out.rho_base = log_slope_rate(std::span(ks).subspan(half), std::span(e0).subspan(half));
    out.rho_scaled = log_slope_rate(std::span(ks).subspan(half), std::span(e1).subspan(half));
    out.rho = std::abs(out.rho_base - out.rho_scaled);
  }
  return out;
}

// ------------------------------------------------------------ backward errors

double nrbe(const Matrix& a, const Vector& b, const Vector& x) {
  if (!a.square() || a.rows() != b.size() || b.size() != x.size()) throw DimensionError("nrbe: size mismatch");
  const double den = norm2(b) + norm2(a) * norm2(x);
  if (!(den > 0.0)) throw std::domain_error("nrbe: ||b|| + ||A||·||x|| is zero");
  return norm2(b - a * x) / den;
}

double ls_nrbe(const Matrix& r_mat, const Vector& r, const Vector& beta) {
  if (r_mat.rows() != r.size() || r_mat.cols() != beta.size()) throw DimensionError("ls_nrbe: size mismatch");
  const Matrix rt = r_mat.transpose();
  const Matrix normal = rt * r_mat;
  const Vector rtr = rt * r;
  const double num = norm2(normal * beta + rtr);
  if (num == 0.0) return 0.0;
  const double den = norm2(rtr) + norm2(normal) * norm2(beta);
  if (!(den > 0.0)) throw std::domain_error("ls_nrbe: zero denominator");
  return num / den;
}

// ------------------------------------------------------------ multi-Krylov

double multi_krylov_base(int i, int j, int m) {
  if (i < 1 || i > m + 1 || j < 0 || j > m) throw std::out_of_range("multi_krylov_base: index out of range");
  return j == m + 1 - i ? 1.0 : 0.0;
}

std::vector<std::vector<Polynomial>> multi_krylov_polynomials(std::span<const Vector> betas, int m) {
  if (m < 1) throw std::invalid_argument("multi_krylov_polynomials: needs m >= 1");
  const auto width = static_cast<std::size_t>(m) + 1;
  // row(t) for t = −m … T, stored at offset t + m.
  std::vector<std::vector<Polynomial>> rows;
  for (int t = -m; t <= 0; ++t) {
    std::vector<Polynomial> row(width);
    for (std::size_t j = 0; j < width; ++j)
      row[j] = Polynomial::constant(multi_krylov_base(1 - t, static_cast<int>(j), m));
    rows.push_back(std::move(row));
  }
  for (std::size_t s = 0; s < betas.size(); ++s) {
    const Vector& beta = betas[s];
    if (beta.size() != static_cast<std::size_t>(m)) {
      throw std::invalid_argument("multi_krylov_polynomials: beta " + std::to_string(s) + " has length " +
                                  std::to_string(beta.size()) + ", expected " + std::to_string(m));
    }
    const std::size_t prev = rows.size() - 1;
    std::vector<Polynomial> row(width);
    for (std::size_t j = 0; j < width; ++j) {
      Polynomial acc = (1.0 + sum(beta)) * rows[prev][j];
      for (std::size_t i = 1; i <= beta.size(); ++i) acc += (-beta[i - 1]) * rows[prev - i][j];
      row[j] = acc.shifted();
    }
    rows.push_back(std::move(row));
  }
  rows.erase(rows.begin(), rows.begin() + m + 1);
  return rows;
}

double verify_multi_krylov(const Trace& trace, const Problem& problem) {
  const auto& lin = require_linear(problem, "verify_multi_krylov");
  const int m = trace.m;
  if (m < 1 || trace.initial_guesses != m + 1)
    throw std::invalid_argument("verify_multi_krylov: trace is not in general-guess mode");
  const auto all = trace.betas();
  const std::vector<Vector> betas(all.begin() + m, all.end());
  const auto table = multi_krylov_polynomials(betas, m);
  const double scale = norm2(trace.records.front().r);
  if (scale == 0.0) return 0.0;
  double worst = 0.0;
  for (std::size_t t = 1; t <= table.size(); ++t) {
    Vector acc(lin.dimension(), 0.0);
    for (std::size_t j = 0; j <= static_cast<std::size_t>(m); ++j)
      acc += table[t - 1][j].apply(lin.iteration_matrix(), trace.records[j].r);
    const std::size_t target = t + static_cast<std::size_t>(m);
    worst = std::max(worst, norm2(acc - trace.records[target].r) / scale);
  }
  return worst;
}

}  // namespace aa
