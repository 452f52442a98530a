#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "aa/linalg.hpp"

namespace aa {

/// Affine fixed-point map q(x) = M·x + b whose fixed point solves (I − M)x = b.
class LinearProblem {
 public:
  LinearProblem(Matrix m, Vector b, std::optional<Vector> x_star = std::nullopt);

  const Matrix& iteration_matrix() const noexcept { return m_; }
  /// A = I − M.
  const Matrix& system_matrix() const noexcept { return a_; }
  const Vector& affine_term() const noexcept { return b_; }
  const Vector& x_star() const noexcept { return x_star_; }
  std::size_t dimension() const noexcept { return b_.size(); }

  Vector apply(const Vector& x) const;
  /// A·x − b, which equals x − q(x).
  Vector residual(const Vector& x) const;

 private:
  Matrix m_;
  Matrix a_;
  Vector b_;
  Vector x_star_;
};

class NonlinearProblem {
 public:
  using Map = std::function<Vector(const Vector&)>;

  NonlinearProblem(std::size_t dimension, Map q, std::optional<Vector> x_star = std::nullopt,
                   std::optional<double> spectral_radius_at_star = std::nullopt);

  std::size_t dimension() const noexcept { return n_; }
  const std::optional<Vector>& x_star() const noexcept { return x_star_; }
  std::optional<double> spectral_radius_at_star() const noexcept { return rho_; }

  Vector apply(const Vector& x) const;
  Vector residual(const Vector& x) const;

 private:
  std::size_t n_;
  Map q_;
  std::optional<Vector> x_star_;
  std::optional<double> rho_;
};

/// A fixed-point problem plus registry metadata.
class Problem {
 public:
  Problem(std::string name, LinearProblem p, std::optional<Vector> default_x0 = std::nullopt);
  Problem(std::string name, NonlinearProblem p, std::optional<Vector> default_x0 = std::nullopt);

  const std::string& name() const noexcept { return name_; }
  std::size_t dimension() const noexcept;
  /// Null for nonlinear problems.
  const LinearProblem* linear() const noexcept { return std::get_if<LinearProblem>(&impl_); }
  std::optional<Vector> x_star() const;
  const std::optional<Vector>& default_x0() const noexcept { return default_x0_; }

  /// q(x).
  Vector apply(const Vector& x) const;
  /// r(x) = x − q(x).
  Vector residual(const Vector& x) const;

 private:
  std::string name_;
  std::variant<LinearProblem, NonlinearProblem> impl_;
  std::optional<Vector> default_x0_;
};

class UnknownProblemError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Registered builtin names, in registry order.
const std::vector<std::string>& builtin_names();

/// Looks up a named builtin; throws UnknownProblemError listing valid names.
Problem builtin(std::string_view name);

/// Parses a JSON problem document: {"M": [[...],...], "b": [...], "x_star"?: [...],
/// "x0"?: [...]} or {"builtin": "<name>"}.
Problem problem_from_json(std::string_view json_text, std::string name = "json");
Problem load_problem_file(const std::string& path);

/// Resolves "builtin:<name>" or a JSON file path.
Problem resolve_problem(const std::string& ref);

struct Eigenpair {
  double value;
  Vector vector;
};

/// Both real eigenpairs of a 2×2 matrix, unit eigenvectors, ascending
/// eigenvalues. Throws NumericalError on complex eigenvalues.
std::vector<Eigenpair> eigen_directions_2x2(const Matrix& a);

}  // namespace aa
