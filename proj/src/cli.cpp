#include "aa/cli.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "aa/analysis.hpp"
#include "aa/experiments.hpp"
#include "aa/gmres.hpp"
#include "aa/problems.hpp"
#include "aa/solver.hpp"

namespace aa::cli {

namespace {

/// Raised when a verification subcommand detects a failed check.
class CheckFailed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string cell(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

struct Options {
  std::string problem;
  std::string x0;
  std::string guesses;
  int m = 1;
  std::optional<int> max_iter;
  std::optional<double> tol;
  std::string ls = "qr";
  double lambda = 0.0;
  std::string lambda_scale = "absolute";
  std::string out = "-";
  int jobs = 1;
  int iters = 30;
};

class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) {
    if (path.empty() || path == "-") {
      stream_ = &fallback;
    } else {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) throw std::invalid_argument("cannot open output file '" + path + "'");
      stream_ = file_.get();
    }
  }
  std::ostream& operator*() { return *stream_; }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* stream_ = nullptr;
};

Vector initial_guess(const Problem& problem, const std::string& text) {
  if (!text.empty()) return Vector(parse_list(text));
  if (problem.default_x0()) return *problem.default_x0();
  throw std::invalid_argument("problem '" + problem.name() + "' has no default x0; pass --x0");
}

std::vector<Vector> parse_guesses(const std::string& text) {
  std::vector<Vector> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ';')) out.emplace_back(parse_list(item));
  return out;
}

LeastSquaresStrategy strategy_from(const Options& o) {
  LambdaScale scale = LambdaScale::absolute;
  if (o.lambda_scale == "relative") {
    scale = LambdaScale::relative_to_max_diag;
  } else if (o.lambda_scale != "absolute") {
    throw std::invalid_argument("--lambda-scale must be 'absolute' or 'relative'");
  }
  if (o.ls == "qr") return LeastSquaresStrategy::qr();
  if (o.ls == "pinv") return LeastSquaresStrategy::pseudo_inverse();
  if (o.ls == "regularized") return LeastSquaresStrategy::regularized(o.lambda, scale);
  throw std::invalid_argument("--ls must be one of qr, pinv, regularized");
}

AAConfig config_from(const Options& o) {
  AAConfig c;
  c.m = o.m;
  c.max_iter = o.max_iter.value_or(c.max_iter);
  c.tol_rel = o.tol.value_or(c.tol_rel);
  c.ls = strategy_from(o);
  c.validate();
  return c;
}

void add_problem(CLI::App* cmd, Options& o) {
  cmd->add_option("--problem", o.problem, "builtin:NAME or a JSON problem file")->required();
}

void add_x0(CLI::App* cmd, Options& o) {
  cmd->add_option("--x0", o.x0, "initial guess, comma-separated");
}

void add_solver(CLI::App* cmd, Options& o) {
  cmd->add_option("--m", o.m, "window size")->check(CLI::NonNegativeNumber);
  cmd->add_option("--max-iter", o.max_iter, "iteration limit")->check(CLI::PositiveNumber);
  cmd->add_option("--tol", o.tol, "relative residual tolerance");
  cmd->add_option("--ls", o.ls, "least-squares strategy: qr | pinv | regularized");
  cmd->add_option("--lambda", o.lambda, "regularization parameter");
  cmd->add_option("--lambda-scale", o.lambda_scale, "absolute | relative");
}

void add_out(CLI::App* cmd, Options& o, const char* flag = "--out") {
  cmd->add_option(flag, o.out, "output CSV path ('-' for stdout)");
}

void write_trace_csv(std::ostream& os, const Trace& trace, const Problem& problem) {
  os << "k,r_norm,y_k,phi_k,sigma_k";
  for (int i = 1; i <= trace.m; ++i) os << ",beta_" << i;
  os << ",B,lower,upper,actual\n";

  std::map<int, BoundsRecord> bounds;
  if (trace.m == 1 && problem.linear() != nullptr) {
    for (const auto& b : bounds_check(trace, problem.linear()->iteration_matrix())) bounds[b.k] = b;
  }
  for (const auto& rec : trace.records) {
    os << rec.k << ',' << format_double(rec.r_norm) << ',' << cell(rec.y) << ',' << cell(rec.phi) << ','
       << cell(rec.sigma);
    for (int i = 0; i < trace.m; ++i) {
      os << ',';
      if (static_cast<std::size_t>(i) < rec.beta.size()) os << format_double(rec.beta[static_cast<std::size_t>(i)]);
    }
    const auto it = bounds.find(rec.k);
    if (it != bounds.end()) {
      os << ',' << cell(it->second.b_value) << ',' << format_double(it->second.lower) << ','
         << format_double(it->second.upper) << ',' << format_double(it->second.actual) << '\n';
    } else {
      os << ",,,,\n";
    }
  }
}

void report_trace(std::ostream& err, const Trace& trace) {
  const auto& last = trace.records.back();
  err << "iterations: " << last.k << "\nreason: " << to_string(trace.reason)
      << "\nfinal_r_norm: " << format_double(last.r_norm) << '\n';
  if (trace.x_star) {
    try {
      const auto est = estimate_rho(trace);
      err << "rho_hat: " << format_double(est.rho_hat) << (est.finite ? " (finite)" : "") << '\n';
    } catch (const VerificationError&) {
    }
  }
}

int finish_trace(const Trace& trace) {
  return trace.reason == Termination::non_finite ? kExitNumerical : kExitOk;
}

const LinearProblem& linear_of(const Problem& p) {
  if (p.linear() == nullptr) throw std::invalid_argument("problem '" + p.name() + "' is not linear");
  return *p.linear();
}

void write_sweep_csv(std::ostream& os, const SweepResult& r) {
  os << "index";
  for (const auto& name : r.param_names) os << ',' << name;
  os << ",rho_hat,finite,reached_solution,iterations,reason,beta_min,beta_max";
  const bool fp = r.fp_stats.has_value();
  if (fp) os << ",fp_rho_hat";
  os << '\n';
  for (const auto& row : r.rows) {
    os << row.index;
    for (double p : row.params) os << ',' << format_double(p);
    os << ',' << cell(row.rho_hat) << ',' << (row.finite ? 1 : 0) << ',' << (row.reached_solution ? 1 : 0) << ','
       << row.iterations << ',' << to_string(row.reason) << ','
       << (std::isnan(row.beta_min) ? std::string() : format_double(row.beta_min)) << ','
       << (std::isnan(row.beta_max) ? std::string() : format_double(row.beta_max));
    if (fp) os << ',' << cell(row.fp_rho_hat);
    os << '\n';
  }
}

void write_stats(std::ostream& err, const char* label, const SweepStats& s) {
  err << label << "_count: " << s.count << '\n'
      << label << "_mean: " << format_double(s.mean) << '\n'
      << label << "_min: " << format_double(s.min) << '\n'
      << label << "_max: " << format_double(s.max) << '\n';
}

void write_histogram(const std::string& path, const SweepStats& s) {
  if (path.empty()) return;
  std::ofstream os(path);
  if (!os) throw std::invalid_argument("cannot open histogram file '" + path + "'");
  os << "bin_lo,bin_hi,count\n";
  for (std::size_t i = 0; i < kHistogramBins; ++i) {
    os << format_double(static_cast<double>(i) / kHistogramBins) << ','
       << format_double(static_cast<double>(i + 1) / kHistogramBins) << ',' << s.histogram[i] << '\n';
  }
}

void report_sweep(std::ostream& err, const SweepResult& r, const std::string& histogram) {
  write_stats(err, "rho", r.stats);
  if (r.fp_stats) write_stats(err, "fp_rho", *r.fp_stats);
  for (const auto& w : r.warnings) err << "warning: " << w << '\n';
  write_histogram(histogram, r.stats);
}

SweepOptions sweep_options(const Options& o) {
  SweepOptions s;
  s.m = o.m;
  s.max_iter = o.max_iter.value_or(s.max_iter);
  s.tol_rel = o.tol.value_or(s.tol_rel);
  s.ls = strategy_from(o);
  s.jobs = o.jobs;
  return s;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const char* begin = item.c_str();
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(begin, &end);
    while (end != nullptr && *end == ' ') ++end;
    if (end == begin || *end != '\0' || errno == ERANGE || !std::isfinite(v))
      throw std::invalid_argument("malformed number '" + item + "' in list '" + text + "'");
    out.push_back(v);
  }
  if (out.empty() || (!text.empty() && text.back() == ','))
    throw std::invalid_argument("malformed list '" + text + "'");
  return out;
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Anderson acceleration AA(m): solver, verification checks and sweeps", "aa_cli"};
  app.require_subcommand(1, 1);
  Options o;
  std::function<int()> action;

  // ---------------------------------------------------------------- solve
  auto* solve_cmd = app.add_subcommand("solve", "run AA(m) and write the iteration trace");
  add_problem(solve_cmd, o);
  add_x0(solve_cmd, o);
  solve_cmd->add_option("--guesses", o.guesses, "m+1 general initial guesses, ';'-separated");
  add_solver(solve_cmd, o);
  add_out(solve_cmd, o, "--trace");
  solve_cmd->callback([&] {
    action = [&] {
      const Problem p = resolve_problem(o.problem);
      const AAConfig c = config_from(o);
      Trace t;
      if (!o.guesses.empty()) {
        if (!o.x0.empty()) throw std::invalid_argument("--x0 and --guesses are mutually exclusive");
        const auto g = parse_guesses(o.guesses);
        t = solve_general(p, g, c);
      } else {
        t = solve(p, initial_guess(p, o.x0), c);
      }
      Sink sink(o.out, out);
      write_trace_csv(*sink, t, p);
      report_trace(err, t);
      return finish_trace(t);
    };
  });

  // ---------------------------------------------------------------- fp
  auto* fp_cmd = app.add_subcommand("fp", "plain fixed-point iteration trace");
  add_problem(fp_cmd, o);
  add_x0(fp_cmd, o);
  fp_cmd->add_option("--max-iter", o.max_iter, "iteration limit")->check(CLI::PositiveNumber);
  fp_cmd->add_option("--tol", o.tol, "relative residual tolerance");
  add_out(fp_cmd, o, "--trace");
  fp_cmd->callback([&] {
    action = [&] {
      const Problem p = resolve_problem(o.problem);
      const Trace t = fp_solve(p, initial_guess(p, o.x0), o.max_iter.value_or(1000), o.tol.value_or(1e-14));
      Sink sink(o.out, out);
      write_trace_csv(*sink, t, p);
      report_trace(err, t);
      return finish_trace(t);
    };
  });

  // ---------------------------------------------------------------- gmres-compare
  auto* gm_cmd = app.add_subcommand("gmres-compare", "residual norms of full GMRES vs AA(m)");
  add_problem(gm_cmd, o);
  add_x0(gm_cmd, o);
  gm_cmd->add_option("--m", o.m, "window size")->check(CLI::NonNegativeNumber);
  gm_cmd->add_option("--iters", o.iters, "iterations")->check(CLI::PositiveNumber);
  add_out(gm_cmd, o);
  gm_cmd->callback([&] {
    action = [&] {
      const Problem p = resolve_problem(o.problem);
      const auto& lin = linear_of(p);
      const Vector x0 = initial_guess(p, o.x0);
      AAConfig c;
      c.m = o.m;
      c.max_iter = o.iters;
      c.tol_rel = kNoEarlyStop;
      const Trace t = solve(p, x0, c);
      const GmresTrace g = gmres(lin.system_matrix(), lin.affine_term(), x0, o.iters);
      const double slack = 1e-10 * t.records.front().r_norm;
      int violations = 0;
      Sink sink(o.out, out);
      *sink << "k,gmres_r_norm,aa_r_norm,dominated\n";
      for (const auto& rec : t.records) {
        const double gk = g.norm_at(static_cast<std::size_t>(rec.k));
        const bool ok = gk <= rec.r_norm + slack;
        violations += ok ? 0 : 1;
        *sink << rec.k << ',' << format_double(gk) << ',' << format_double(rec.r_norm) << ',' << (ok ? 1 : 0) << '\n';
      }
      err << "violations: " << violations << '\n';
      if (violations > 0) throw CheckFailed("GMRES residual exceeded the AA residual");
      return kExitOk;
    };
  });

  // ---------------------------------------------------------------- bounds
  auto* bounds_cmd = app.add_subcommand("bounds", "AA(1) per-step residual bounds");
  add_problem(bounds_cmd, o);
  add_x0(bounds_cmd, o);
  bounds_cmd->add_option("--iters", o.iters, "iterations")->check(CLI::PositiveNumber);
  add_out(bounds_cmd, o);
  bounds_cmd->callback([&] {
    action = [&] {
      const Problem p = resolve_problem(o.problem);
      const auto& lin = linear_of(p);
      AAConfig c;
      c.max_iter = o.iters;
      c.tol_rel = kNoEarlyStop;
      const Trace t = solve(p, initial_guess(p, o.x0), c);
      const auto recs = bounds_check(t, lin.iteration_matrix());
      int violations = 0;
      Sink sink(o.out, out);
      *sink << "k,phi_k,y_k,B,lower,upper,actual,special,violation\n";
      for (const auto& b : recs) {
        const auto& rec = t.records[static_cast<std::size_t>(b.k)];
        violations += b.violation ? 1 : 0;
        *sink << b.k << ',' << cell(rec.phi) << ',' << cell(rec.y) << ',' << cell(b.b_value) << ','
              << format_double(b.lower) << ',' << format_double(b.upper) << ',' << format_double(b.actual) << ','
              << (b.special_case ? 1 : 0) << ',' << (b.violation ? 1 : 0) << '\n';
      }
      err << "steps: " << recs.size() << "\nviolations: " << violations << '\n';
      if (violations > 0) throw CheckFailed("residual bound violated");
      return kExitOk;
    };
  });

  // ---------------------------------------------------------------- poly-verify
  auto* poly_cmd = app.add_subcommand("poly-verify", "residual polynomial recurrence and memory effect");
  add_problem(poly_cmd, o);
  add_x0(poly_cmd, o);
  poly_cmd->add_option("--m", o.m, "window size")->check(CLI::NonNegativeNumber);
  poly_cmd->add_option("--iters", o.iters, "iterations")->check(CLI::PositiveNumber);
  add_out(poly_cmd, o);
  poly_cmd->callback([&] {
    action = [&] {
      const Problem p = resolve_problem(o.problem);
      const auto& lin = linear_of(p);
      AAConfig c;
      c.m = o.m;
      c.max_iter = o.iters;
      c.tol_rel = kNoEarlyStop;
      const Trace t = solve(p, initial_guess(p, o.x0), c);
      const auto polys = polynomial_recurrence(t.betas(), t.m);
      const Vector& r0 = t.records.front().r;
      const double scale = norm2(r0);
      double worst = 0.0;
      int memory_failures = 0;
      Sink sink(o.out, out);
      *sink << "k,degree,deviation,p_at_1,p_at_0,abs_coeff_sum,memory_ok\n";
      for (std::size_t k = 0; k < polys.size(); ++k) {
        const double dev =
            scale > 0.0 ? norm2(polys[k].apply(lin.iteration_matrix(), r0) - t.records[k].r) / scale : 0.0;
        worst = std::max(worst, dev);
        bool memory_ok = true;
        if (k >= 1) {
          try {
            (void)memory_effect_factor(polys[k], t.m, static_cast<int>(k));
          } catch (const VerificationError& e) {
            memory_ok = false;
            ++memory_failures;
            err << e.what() << '\n';
          }
        }
        *sink << k << ',' << polys[k].degree() << ',' << format_double(dev) << ',' << format_double(polys[k](1.0))
              << ',' << format_double(polys[k](0.0)) << ',' << format_double(polys[k].abs_sum()) << ','
              << (memory_ok ? 1 : 0) << '\n';
      }
      err << "max_deviation: " << format_double(worst) << "\nmemory_failures: " << memory_failures << '\n';
      if (worst > 1e-8 || memory_failures > 0) throw CheckFailed("polynomial verification failed");
      return kExitOk;
    };
  });

  // ---------------------------------------------------------------- lk-verify
  auto* lk_cmd = app.add_subcommand("lk-verify", "AA(1) closed-form residual and L_k recursions");
  add_problem(lk_cmd, o);
  add_x0(lk_cmd, o);
  lk_cmd->add_option("--iters", o.iters, "iterations")->check(CLI::PositiveNumber);
  add_out(lk_cmd, o);
  lk_cmd->callback([&] {
    action = [&] {
      const Problem p = resolve_problem(o.problem);
      const auto& lin = linear_of(p);
      AAConfig c;
      c.max_iter = o.iters;
      c.tol_rel = kNoEarlyStop;
      const Trace t = solve(p, initial_guess(p, o.x0), c);
      const Vector& r0 = t.records.front().r;
      const double scale = norm2(r0);
      const auto ls = lk_recursion(lin.iteration_matrix(), r0, static_cast<int>(t.size()) - 1);
      double worst_lk = 0.0, worst_rec = 0.0, worst_rank = 0.0;
      Sink sink(o.out, out);
      *sink << "k,lk_deviation,recursion_deviation,sigma3_over_sigma1\n";
      for (const auto& u : ls) {
        const auto k = static_cast<std::size_t>(u.k);
        const double lk_dev = scale > 0.0 ? norm2(u.l * r0 - t.records[k].r) / scale : 0.0;
        std::optional<double> rec_dev;
        if (k >= 2) {
          const Vector pred = aa1_residual_recursion(t.records[k - 1].r, t.records[k - 2].r, lin.iteration_matrix());
          const double base = t.records[k - 1].r_norm;
          rec_dev = base > 0.0 ? norm2(pred - t.records[k].r) / base : 0.0;
          worst_rec = std::max(worst_rec, *rec_dev);
        }
        std::optional<double> rank;
        if (k >= 2) {
          const Vector s = singular_values(u.l);
          rank = (s.size() >= 3 && s[0] > 0.0) ? s[2] / s[0] : 0.0;
          worst_rank = std::max(worst_rank, *rank);
        }
        worst_lk = std::max(worst_lk, lk_dev);
        *sink << u.k << ',' << format_double(lk_dev) << ',' << cell(rec_dev) << ',' << cell(rank) << '\n';
      }
      err << "max_lk_deviation: " << format_double(worst_lk) << "\nmax_recursion_deviation: "
          << format_double(worst_rec) << "\nmax_rank_ratio: " << format_double(worst_rank) << '\n';
      if (worst_lk > 1e-9 || worst_rec > 1e-11 || worst_rank > 1e-10) throw CheckFailed("AA(1) closed forms disagree");
      return kExitOk;
    };
  });

  // ---------------------------------------------------------------- scaling-check
  double alpha = 10.0;
  auto* sc_cmd = app.add_subcommand("scaling-check", "invariance of AA(1) under x0 -> alpha*x0");
  add_problem(sc_cmd, o);
  add_x0(sc_cmd, o);
  sc_cmd->add_option("--alpha", alpha, "nonzero scale factor");
  sc_cmd->add_option("--iters", o.iters, "iterations")->check(CLI::PositiveNumber);
  add_out(sc_cmd, o);
  sc_cmd->callback([&] {
    action = [&] {
      const Problem p = resolve_problem(o.problem);
      const auto d = scaling_invariance_check(p, initial_guess(p, o.x0), alpha, o.iters);
      Sink sink(o.out, out);
      *sink << "quantity,value\n"
            << "beta_deviation," << format_double(d.beta) << '\n'
            << "polynomial_deviation," << format_double(d.polynomial) << '\n'
            << "rho_base," << format_double(d.rho_base) << '\n'
            << "rho_scaled," << format_double(d.rho_scaled) << '\n'
            << "rho_deviation," << format_double(d.rho) << '\n';
      if (d.beta > 1e-9 || d.polynomial > 1e-9) throw CheckFailed("scaling invariance violated");
      return kExitOk;
    };
  });

  // ---------------------------------------------------------------- nrbe
  auto* nrbe_cmd = app.add_subcommand("nrbe", "normwise relative backward errors along an AA(m) run");
  add_problem(nrbe_cmd, o);
  add_x0(nrbe_cmd, o);
  add_solver(nrbe_cmd, o);
  add_out(nrbe_cmd, o);
  nrbe_cmd->callback([&] {
    action = [&] {
      const Problem p = resolve_problem(o.problem);
      const auto rows = run_nrbe_trace(p, initial_guess(p, o.x0), config_from(o));
      Sink sink(o.out, out);
      *sink << "k,r_norm,system_nrbe,ls_nrbe\n";
      double worst_ls = 0.0;
      for (const auto& r : rows) {
        *sink << r.k << ',' << format_double(r.r_norm) << ',' << format_double(r.system_nrbe) << ','
              << cell(r.ls_nrbe) << '\n';
        if (r.ls_nrbe) worst_ls = std::max(worst_ls, *r.ls_nrbe);
      }
      err << "final_system_nrbe: " << format_double(rows.back().system_nrbe)
          << "\nmax_ls_nrbe: " << format_double(worst_ls) << '\n';
      return kExitOk;
    };
  });

  // ---------------------------------------------------------------- monte-carlo
  MonteCarloConfig mc;
  bool no_fp = false;
  std::string histogram;
  auto* mc_cmd = app.add_subcommand("monte-carlo", "AA(m) and FP from random initial guesses");
  add_problem(mc_cmd, o);
  add_solver(mc_cmd, o);
  mc_cmd->add_option("--trials", mc.trials, "number of trials")->check(CLI::PositiveNumber);
  mc_cmd->add_option("--seed", mc.seed, "master seed");
  mc_cmd->add_option("--box-lo", mc.box.lo, "lower box bound (offset from x*)");
  mc_cmd->add_option("--box-hi", mc.box.hi, "upper box bound (offset from x*)");
  mc_cmd->add_flag("--no-fp", no_fp, "skip the fixed-point baseline");
  mc_cmd->add_option("--jobs", o.jobs, "worker threads")->check(CLI::PositiveNumber);
  mc_cmd->add_option("--histogram", histogram, "write rho_hat histogram CSV");
  add_out(mc_cmd, o);
  mc_cmd->callback([&] {
    action = [&] {
      const Problem p = resolve_problem(o.problem);
      mc.run_fp = !no_fp;
      const SweepOptions s = sweep_options(o);
      const auto r = run_monte_carlo(p, mc, s);
      Sink sink(o.out, out);
      write_sweep_csv(*sink, r);
      report_sweep(err, r, histogram);
      return kExitOk;
    };
  });

  // ---------------------------------------------------------------- sweep-theta
  std::size_t n_angles = 50;
  auto* th_cmd = app.add_subcommand("sweep-theta", "AA(m) from x* + (cos t, sin t) on an angle grid");
  add_problem(th_cmd, o);
  add_solver(th_cmd, o);
  th_cmd->add_option("--n", n_angles, "number of angles")->check(CLI::PositiveNumber);
  th_cmd->add_option("--jobs", o.jobs, "worker threads")->check(CLI::PositiveNumber);
  th_cmd->add_option("--histogram", histogram, "write rho_hat histogram CSV");
  add_out(th_cmd, o);
  th_cmd->callback([&] {
    action = [&] {
      const Problem p = resolve_problem(o.problem);
      const SweepOptions s = sweep_options(o);
      const auto r = run_theta_sweep(p, n_angles, s);
      Sink sink(o.out, out);
      write_sweep_csv(*sink, r);
      report_sweep(err, r, histogram);
      return kExitOk;
    };
  });

  // ---------------------------------------------------------------- sweep-grid
  GridConfig grid;
  auto* grid_cmd = app.add_subcommand("sweep-grid", "AA(m) from initial guesses on a 2-D lattice");
  add_problem(grid_cmd, o);
  add_solver(grid_cmd, o);
  grid_cmd->add_option("--nx", grid.nx, "points along x")->check(CLI::PositiveNumber);
  grid_cmd->add_option("--ny", grid.ny, "points along y")->check(CLI::PositiveNumber);
  grid_cmd->add_option("--x-lo", grid.x_lo, "lower x bound");
  grid_cmd->add_option("--x-hi", grid.x_hi, "upper x bound");
  grid_cmd->add_option("--y-lo", grid.y_lo, "lower y bound");
  grid_cmd->add_option("--y-hi", grid.y_hi, "upper y bound");
  grid_cmd->add_option("--jobs", o.jobs, "worker threads")->check(CLI::PositiveNumber);
  grid_cmd->add_option("--histogram", histogram, "write rho_hat histogram CSV");
  add_out(grid_cmd, o);
  grid_cmd->callback([&] {
    action = [&] {
      const Problem p = resolve_problem(o.problem);
      const SweepOptions s = sweep_options(o);
      const auto r = run_grid_sweep(p, grid, s);
      Sink sink(o.out, out);
      write_sweep_csv(*sink, r);
      report_sweep(err, r, histogram);
      return kExitOk;
    };
  });

  // ---------------------------------------------------------------- dual-guess
  DualGuessConfig dual;
  auto* dual_cmd = app.add_subcommand("dual-guess", "general-guess AA(1) over (theta1, theta2, alpha)");
  add_problem(dual_cmd, o);
  dual_cmd->add_option("--n-theta1", dual.n_theta1, "grid points for theta1")->check(CLI::PositiveNumber);
  dual_cmd->add_option("--n-theta2", dual.n_theta2, "grid points for theta2")->check(CLI::PositiveNumber);
  dual_cmd->add_option("--n-alpha", dual.n_alpha, "grid points for alpha")->check(CLI::PositiveNumber);
  dual_cmd->add_option("--alpha-max", dual.alpha_max, "largest alpha");
  dual_cmd->add_option("--jobs", o.jobs, "worker threads")->check(CLI::PositiveNumber);
  dual_cmd->add_option("--histogram", histogram, "write rho_hat histogram CSV");
  add_out(dual_cmd, o);
  dual_cmd->callback([&] {
    action = [&] {
      const Problem p = resolve_problem(o.problem);
      SweepOptions s;
      s.jobs = o.jobs;
      const auto r = run_dual_guess_search(p, dual, s);
      Sink sink(o.out, out);
      write_sweep_csv(*sink, r);
      report_sweep(err, r, histogram);
      return kExitOk;
    };
  });

  // ---------------------------------------------------------------- sweep-lambda
  std::string lambdas = "1,0.1,0.01";
  std::string relative_lambdas = "1e-14,1e-16";
  std::string curves;
  auto* lam_cmd = app.add_subcommand("sweep-lambda", "AA(1) with regularized least squares per lambda");
  add_problem(lam_cmd, o);
  add_x0(lam_cmd, o);
  lam_cmd->add_option("--lambdas", lambdas, "absolute lambdas, comma-separated");
  lam_cmd->add_option("--relative-lambdas", relative_lambdas,
                      "lambdas scaled by max(diag(R^T R)), comma-separated ('' for none)");
  lam_cmd->add_option("--curves", curves, "write error curves CSV");
  lam_cmd->add_option("--jobs", o.jobs, "worker threads")->check(CLI::PositiveNumber);
  add_out(lam_cmd, o);
  lam_cmd->callback([&] {
    action = [&] {
      const Problem p = resolve_problem(o.problem);
      std::vector<LambdaSetting> settings;
      if (!lambdas.empty())
        for (double l : parse_list(lambdas)) settings.push_back({l, LambdaScale::absolute});
      if (!relative_lambdas.empty())
        for (double l : parse_list(relative_lambdas)) settings.push_back({l, LambdaScale::relative_to_max_diag});
      SweepOptions s;
      s.jobs = o.jobs;
      const auto r = run_lambda_sweep(p, initial_guess(p, o.x0), settings, s, !curves.empty());
      auto scale_name = [](LambdaScale sc) { return sc == LambdaScale::absolute ? "absolute" : "relative"; };
      Sink sink(o.out, out);
      *sink << "lambda,scale,rho_hat,finite,iterations\n";
      for (const auto& row : r.rows) {
        *sink << format_double(row.setting.lambda) << ',' << scale_name(row.setting.scale) << ','
              << cell(row.rho_hat) << ',' << (row.finite ? 1 : 0) << ',' << row.iterations << '\n';
      }
      err << "reference_rho_hat: " << cell(r.reference_rho) << '\n';
      if (!curves.empty()) {
        std::ofstream cs(curves);
        if (!cs) throw std::invalid_argument("cannot open curves file '" + curves + "'");
        cs << "lambda,scale,k,error\n";
        for (std::size_t k = 0; k < r.reference_errors.size(); ++k)
          cs << ",none," << k << ',' << format_double(r.reference_errors[k]) << '\n';
        for (const auto& row : r.rows)
          for (std::size_t k = 0; k < row.errors.size(); ++k)
            cs << format_double(row.setting.lambda) << ',' << scale_name(row.setting.scale) << ',' << k << ','
               << format_double(row.errors[k]) << '\n';
      }
      return kExitOk;
    };
  });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    return action();
  } catch (const CheckFailed& e) {
    err << "check failed: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::domain_error& e) {
    err << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumerical;
  }
}

}  // namespace aa::cli
