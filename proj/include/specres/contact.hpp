#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "specres/problem.hpp"

namespace specres::contact {

/// Balance between creep and traction bound, controlling the adhesion/slip split.
enum class Regime { AdhesionHeavy, Mixed, SlipHeavy };

std::string_view to_string(Regime regime);
std::optional<Regime> regime_from_string(std::string_view name);

/// Discretized tangential rolling-contact system on a rectangular grid.
///
/// Unknowns are the tangential pressures p = (p_{1,x}, p_{1,y}, ..., p_{N,x}, p_{N,y}),
/// nondimensionalized by the peak normal pressure. The slip is affine,
/// s = c + B p, and each element contributes the residual block
///   F_I(p) = s_I + sqrt(|s_I|^2 + eps) p_I / g_I.
struct ContactProblem {
  int n_elements = 0;
  int rows = 0;
  int cols = 0;
  double spacing = 1.0;
  Regime regime = Regime::Mixed;
  std::uint64_t seed = 0;
  double epsilon = 1e-12;

  Eigen::MatrixXd influence;        // B, 2N x 2N
  Eigen::VectorXd creep;            // c, 2N
  Eigen::VectorXd traction_bound;   // g = f * p_N, N
  Eigen::VectorXd friction;         // f, N
  Eigen::VectorXd normal_pressure;  // p_N, N

  Eigen::Index dimension() const { return 2 * static_cast<Eigen::Index>(n_elements); }
};

/// Deterministic in (n_elements, regime, seed).
ContactProblem build_contact_problem(int n_elements, Regime regime, std::uint64_t seed);

Eigen::VectorXd slip(const ContactProblem& problem, const Eigen::VectorXd& pressures);
Eigen::VectorXd contact_residual(const ContactProblem& problem, const Eigen::VectorXd& pressures);
Eigen::MatrixXd contact_jacobian(const ContactProblem& problem, const Eigen::VectorXd& pressures);

/// Wraps the contact system as a solver problem starting from zero traction.
Problem as_problem(const ContactProblem& problem);

/// Text format with every array written row-major at 17 significant digits.
void write_contact_problem(std::ostream& out, const ContactProblem& problem);
ContactProblem read_contact_problem(std::istream& in);

/// Fraction of entries that are exactly nonzero.
double density(const Eigen::MatrixXd& m);

/// True when some row has off-diagonal absolute sum larger than its diagonal.
bool lacks_diagonal_dominance(const Eigen::MatrixXd& m);

}  // namespace specres::contact
