#include "aa/problems.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace aa {

namespace {

Vector require_dimension(const Vector& x, std::size_t n, const char* what) {
  if (x.size() != n) {
    throw DimensionError(std::string(what) + ": expected dimension " + std::to_string(n) +
                         ", got " + std::to_string(x.size()));
  }
  return x;
}

std::string joined_builtin_names() {
  std::string s;
  for (const auto& n : builtin_names()) {
    if (!s.empty()) s += ", ";
    s += n;
  }
  return s;
}

}  // namespace

// ---------------------------------------------------------------- LinearProblem

LinearProblem::LinearProblem(Matrix m, Vector b, std::optional<Vector> x_star)
    : m_(std::move(m)), b_(std::move(b)) {
  if (!m_.square()) throw DimensionError("LinearProblem: M must be square");
  if (m_.rows() != b_.size()) throw DimensionError("LinearProblem: M and b sizes differ");
  if (!m_.all_finite() || !b_.all_finite()) throw NonFiniteError("LinearProblem: non-finite data");
  if (std::all_of(m_.data().begin(), m_.data().end(), [](double v) { return v == 0.0; })) {
    throw std::invalid_argument("LinearProblem: M = 0 is the trivial case A = I");
  }
  a_ = Matrix::identity(m_.rows()) - m_;
  // Throws SingularMatrixError when A is singular to working precision.
  Vector solved = solve_square(a_, b_);
  if (x_star) {
    require_dimension(*x_star, b_.size(), "LinearProblem x_star");
    const double defect = norm2(a_ * *x_star - b_);
    if (defect > 1e-12 * (1.0 + norm2(b_))) {
      throw std::invalid_argument("LinearProblem: x_star does not solve (I - M)x = b (defect " +
                                  std::to_string(defect) + ")");
    }
    x_star_ = std::move(*x_star);
  } else {
    x_star_ = std::move(solved);
  }
}

Vector LinearProblem::apply(const Vector& x) const {
  require_dimension(x, dimension(), "LinearProblem::apply");
  return m_ * x + b_;
}

Vector LinearProblem::residual(const Vector& x) const {
  require_dimension(x, dimension(), "LinearProblem::residual");
  return a_ * x - b_;
}

// ---------------------------------------------------------------- NonlinearProblem

NonlinearProblem::NonlinearProblem(std::size_t dimension, Map q, std::optional<Vector> x_star,
                                   std::optional<double> spectral_radius_at_star)
    : n_(dimension), q_(std::move(q)), x_star_(std::move(x_star)), rho_(spectral_radius_at_star) {
  if (x_star_) {
    require_dimension(*x_star_, n_, "NonlinearProblem x_star");
    const double defect = norm2(q_(*x_star_) - *x_star_);
    if (defect > 1e-12 * (1.0 + norm2(*x_star_))) {
      throw std::invalid_argument("NonlinearProblem: x_star is not a fixed point");
    }
  }
}

Vector NonlinearProblem::apply(const Vector& x) const {
  require_dimension(x, n_, "NonlinearProblem::apply");
  return q_(x);
}

Vector NonlinearProblem::residual(const Vector& x) const { return x - apply(x); }

// ---------------------------------------------------------------- Problem

Problem::Problem(std::string name, LinearProblem p, std::optional<Vector> default_x0)
    : name_(std::move(name)), impl_(std::move(p)), default_x0_(std::move(default_x0)) {}

Problem::Problem(std::string name, NonlinearProblem p, std::optional<Vector> default_x0)
    : name_(std::move(name)), impl_(std::move(p)), default_x0_(std::move(default_x0)) {}

std::size_t Problem::dimension() const noexcept {
  return std::visit([](const auto& p) { return p.dimension(); }, impl_);
}

std::optional<Vector> Problem::x_star() const {
  if (const auto* lin = linear()) return lin->x_star();
  return std::get<NonlinearProblem>(impl_).x_star();
}

Vector Problem::apply(const Vector& x) const {
  return std::visit([&](const auto& p) { return p.apply(x); }, impl_);
}

Vector Problem::residual(const Vector& x) const {
  return std::visit([&](const auto& p) { return p.residual(x); }, impl_);
}

// ---------------------------------------------------------------- registry

const std::vector<std::string>& builtin_names() {
  static const std::vector<std::string> names{"prob41", "prob42", "prob43_nonlinear",
                                              "example32_stall", "prob_nrbe"};
  return names;
}

Problem builtin(std::string_view name) {
  if (name == "prob41") {
    return Problem("prob41",
                   LinearProblem(Matrix{{2.0 / 3.0, 0.25}, {0.0, 1.0 / 3.0}}, Vector{0.0, 0.0},
                                 Vector{0.0, 0.0}),
                   Vector{0.2, 0.3});
  }
  if (name == "prob42") {
    return Problem("prob42",
                   LinearProblem(Matrix{{0.5784, 0.0}, {0.0, 0.999}}, Vector{0.0, 0.0},
                                 Vector{0.0, 0.0}),
                   Vector{0.0001, 0.3023});
  }
  if (name == "prob43_nonlinear") {
    auto q = [](const Vector& x) {
      return Vector{0.5 * (x[0] + x[0] * x[0] + x[1] * x[1]), 0.5 * (x[1] + x[0] * x[0])};
    };
    return Problem("prob43_nonlinear", NonlinearProblem(2, q, Vector{0.0, 0.0}, 0.5),
                   Vector{0.2, 0.3});
  }
  if (name == "example32_stall") {
    return Problem("example32_stall",
                   LinearProblem(Matrix{{1.5, 0.0}, {0.0, 0.5}}, Vector{0.0, 0.0},
                                 Vector{0.0, 0.0}),
                   Vector{-2.0, 2.0});
  }
  if (name == "prob_nrbe") {
    // x_{k+1} = M(x_k − c) + c with c = (1, 1): affine term (I − M)c, fixed point c.
    const Matrix m{{8.0 / 9.0, 0.25}, {0.0, 2.0 / 3.0}};
    const Vector c{1.0, 1.0};
    const Vector affine = (Matrix::identity(2) - m) * c;
    return Problem("prob_nrbe", LinearProblem(m, affine, c), Vector{1.2, 1.3});
  }
  throw UnknownProblemError("unknown builtin problem '" + std::string(name) +
                            "'; valid builtins: " + joined_builtin_names());
}

namespace {

Vector vector_from_json(const nlohmann::json& j, const char* field) {
  if (!j.is_array()) throw std::invalid_argument(std::string("field '") + field + "' must be an array");
  std::vector<double> v;
  for (const auto& e : j) {
    if (!e.is_number()) throw std::invalid_argument(std::string("field '") + field + "' must hold numbers");
    v.push_back(e.get<double>());
  }
  return Vector(std::move(v));
}

Matrix matrix_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.empty()) throw std::invalid_argument("field 'M' must be a non-empty array of rows");
  const std::size_t rows = j.size();
  std::vector<double> data;
  std::size_t cols = 0;
  for (const auto& row : j) {
    const Vector r = vector_from_json(row, "M");
    if (cols == 0) cols = r.size();
    if (r.size() != cols) throw DimensionError("field 'M' has ragged rows");
    data.insert(data.end(), r.begin(), r.end());
  }
  return Matrix(rows, cols, std::move(data));
}

}  // namespace

Problem problem_from_json(std::string_view json_text, std::string name) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("problem JSON: ") + e.what());
  }
  if (!doc.is_object()) throw std::invalid_argument("problem JSON must be an object");
  if (doc.contains("builtin")) return builtin(doc.at("builtin").get<std::string>());
  if (!doc.contains("M") || !doc.contains("b")) {
    throw std::invalid_argument("problem JSON needs fields 'M' and 'b' (or 'builtin')");
  }
  Matrix m = matrix_from_json(doc.at("M"));
  Vector b = vector_from_json(doc.at("b"), "b");
  std::optional<Vector> x_star;
  if (doc.contains("x_star")) x_star = vector_from_json(doc.at("x_star"), "x_star");
  std::optional<Vector> x0;
  if (doc.contains("x0")) x0 = vector_from_json(doc.at("x0"), "x0");
  return Problem(std::move(name), LinearProblem(std::move(m), std::move(b), std::move(x_star)),
                 std::move(x0));
}

Problem load_problem_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open problem file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return problem_from_json(buf.str(), path);
}

Problem resolve_problem(const std::string& ref) {
  constexpr std::string_view prefix = "builtin:";
  if (ref.starts_with(prefix)) return builtin(std::string_view(ref).substr(prefix.size()));
  return load_problem_file(ref);
}

// ---------------------------------------------------------------- eigenpairs

std::vector<Eigenpair> eigen_directions_2x2(const Matrix& a) {
  if (a.rows() != 2 || a.cols() != 2) throw DimensionError("eigen_directions_2x2: need a 2x2 matrix");
  const double p = a(0, 0), q = a(0, 1), r = a(1, 0), s = a(1, 1);
  const double tr = p + s;
  const double det = p * s - q * r;
  // (p − s)² + 4qr avoids cancellation in tr² − 4·det.
  double disc = (p - s) * (p - s) + 4.0 * q * r;
  const double scale = tr * tr + std::abs(4.0 * det);
  if (disc < 0.0) {
    if (disc < -64.0 * std::numeric_limits<double>::epsilon() * scale) {
      throw NumericalError("eigen_directions_2x2: complex eigenvalues (discriminant " +
                           std::to_string(disc) + ")");
    }
    disc = 0.0;
  }
  const double root = std::sqrt(disc);
  double hi = 0.5 * (tr + std::copysign(root, tr));
  double lo = hi != 0.0 ? det / hi : 0.5 * (tr - root);
  if (tr == 0.0) {
    hi = 0.5 * root;
    lo = -0.5 * root;
  }
  if (lo > hi) std::swap(lo, hi);

  auto direction = [&](double mu, Vector fallback) {
    const double r0x = p - mu, r0y = q, r1x = r, r1y = s - mu;
    const double n0 = std::hypot(r0x, r0y), n1 = std::hypot(r1x, r1y);
    Vector v;
    if (std::max(n0, n1) <= 1e-14 * (std::abs(mu) + 1.0)) {
      v = std::move(fallback);
    } else if (n0 >= n1) {
      v = Vector{-r0y, r0x};
    } else {
      v = Vector{-r1y, r1x};
    }
    v *= 1.0 / norm2(v);
    if (v[0] < 0.0 || (v[0] == 0.0 && v[1] < 0.0)) v *= -1.0;
    return v;
  };

  return {Eigenpair{lo, direction(lo, Vector{1.0, 0.0})},
          Eigenpair{hi, direction(hi, Vector{0.0, 1.0})}};
}

}  // namespace aa
