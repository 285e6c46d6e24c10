#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace specres {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Thrown when a residual evaluation produces NaN or Inf.
class EvaluationError : public std::runtime_error {
public:
  EvaluationError(const std::string& label, Eigen::Index index)
      : std::runtime_error("non-finite residual component " + std::to_string(index) +
                           " in problem '" + label + "'"),
        index_(index) {}

  Eigen::Index index() const noexcept { return index_; }

private:
  Eigen::Index index_;
};

/// Thrown when an operation needs an analytic Jacobian the problem does not have.
class CapabilityError : public std::logic_error {
public:
  using std::logic_error::logic_error;
};

/// Square nonlinear system F: R^n -> R^n.
///
/// Problems are immutable value types; every solve owns its own EvalCounter,
/// so one definition can be shared across concurrent runs.
template <typename Scalar>
struct NonlinearProblem {
  using Vector = VectorX<Scalar>;
  using Matrix = MatrixX<Scalar>;
  using Residual = std::function<Vector(const Vector&)>;
  using Jacobian = std::function<Matrix(const Vector&)>;

  std::string label;
  Eigen::Index dimension = 0;
  Residual residual;
  Jacobian jacobian;  // empty when no analytic Jacobian is available
  Vector initial_point;

  bool has_jacobian() const noexcept { return static_cast<bool>(jacobian); }
};

using Problem = NonlinearProblem<double>;

struct EvalCounter {
  std::size_t f_evals = 0;
  std::size_t jac_evals = 0;
};

template <typename Scalar>
VectorX<Scalar> evaluate(const NonlinearProblem<Scalar>& problem, const VectorX<Scalar>& x,
                         EvalCounter& counter) {
  if (x.size() != problem.dimension)
    throw std::invalid_argument("evaluate: point has length " + std::to_string(x.size()) +
                                ", problem '" + problem.label + "' has dimension " +
                                std::to_string(problem.dimension));
  VectorX<Scalar> fx = problem.residual(x);
  ++counter.f_evals;
  if (fx.size() != problem.dimension)
    throw std::logic_error("residual of '" + problem.label + "' returned wrong length");
  for (Eigen::Index i = 0; i < fx.size(); ++i) {
    using std::isfinite;
    if (!isfinite(fx[i])) throw EvaluationError(problem.label, i);
  }
  return fx;
}

template <typename Scalar>
MatrixX<Scalar> evaluate_jacobian(const NonlinearProblem<Scalar>& problem,
                                  const VectorX<Scalar>& x, EvalCounter& counter) {
  if (!problem.has_jacobian())
    throw CapabilityError("problem '" + problem.label + "' has no analytic Jacobian");
  MatrixX<Scalar> jac = problem.jacobian(x);
  ++counter.jac_evals;
  if (jac.rows() != problem.dimension || jac.cols() != problem.dimension)
    throw std::logic_error("jacobian of '" + problem.label + "' has wrong shape");
  return jac;
}

/// Forward-difference Jacobian reusing a known F(x); costs n residual calls.
template <typename Scalar>
MatrixX<Scalar> fd_jacobian(const NonlinearProblem<Scalar>& problem, const VectorX<Scalar>& x,
                            const VectorX<Scalar>& fx, Scalar h, EvalCounter& counter) {
  if (!(h > Scalar(0))) throw std::invalid_argument("fd_jacobian: step must be positive");
  const Eigen::Index n = problem.dimension;
  MatrixX<Scalar> jac(n, n);
  VectorX<Scalar> shifted = x;
  for (Eigen::Index i = 0; i < n; ++i) {
    shifted[i] = x[i] + h;
    jac.col(i) = (evaluate(problem, shifted, counter) - fx) / h;
    shifted[i] = x[i];
  }
  return jac;
}

/// Forward-difference Jacobian; column i is (F(x + h e_i) - F(x)) / h. Costs n + 1 calls.
template <typename Scalar>
MatrixX<Scalar> fd_jacobian(const NonlinearProblem<Scalar>& problem, const VectorX<Scalar>& x,
                            Scalar h, EvalCounter& counter) {
  const VectorX<Scalar> fx = evaluate(problem, x, counter);
  return fd_jacobian(problem, x, fx, h, counter);
}

/// Default forward-difference step 1e-7 * (1 + |x|_inf).
template <typename Scalar>
Scalar default_fd_step(const VectorX<Scalar>& x) {
  const Scalar scale = x.size() > 0 ? x.template lpNorm<Eigen::Infinity>() : Scalar(0);
  return Scalar(1e-7) * (Scalar(1) + scale);
}

}  // namespace specres
