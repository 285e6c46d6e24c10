#include "specres/contact.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <memory>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>

namespace specres::contact {

namespace {

// Kernel anisotropy: x-x coupling 1.0, y-y coupling 0.7, a 0.1 skew in the
// rolling (x) direction, and antisymmetric x-y / y-x cross couplings.
constexpr double kXX = 1.0;
constexpr double kYY = 0.7;
constexpr double kSkew = 0.1;
constexpr double kXY = 0.5;
constexpr double kYX = -0.5;

double sgn(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

double creep_scale(Regime regime) {
  switch (regime) {
    case Regime::AdhesionHeavy:
      return 0.1;
    case Regime::Mixed:
      return 0.5;
    case Regime::SlipHeavy:
      return 2.0;
  }
  return 0.5;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void expect_key(std::istream& in, const std::string& key) {
  std::string token;
  if (!(in >> token) || token != key)
    throw std::runtime_error("contact problem file: expected '" + key + "', found '" + token + "'");
}

template <typename T>
T read_value(std::istream& in, const std::string& key) {
  expect_key(in, key);
  T value{};
  if (!(in >> value)) throw std::runtime_error("contact problem file: bad value for '" + key + "'");
  return value;
}

Eigen::VectorXd read_vector(std::istream& in, const std::string& key, Eigen::Index expected) {
  const auto size = read_value<Eigen::Index>(in, key);
  if (size != expected)
    throw std::runtime_error("contact problem file: '" + key + "' has length " +
                             std::to_string(size) + ", expected " + std::to_string(expected));
  Eigen::VectorXd v(size);
  for (Eigen::Index i = 0; i < size; ++i)
    if (!(in >> v[i])) throw std::runtime_error("contact problem file: truncated '" + key + "'");
  return v;
}

void write_vector(std::ostream& out, const std::string& key, const Eigen::VectorXd& v) {
  out << key << ' ' << v.size() << '\n';
  for (Eigen::Index i = 0; i < v.size(); ++i) out << (i ? " " : "") << format_double(v[i]);
  out << '\n';
}

}  // namespace

std::string_view to_string(Regime regime) {
  switch (regime) {
    case Regime::AdhesionHeavy:
      return "adhesion-heavy";
    case Regime::Mixed:
      return "mixed";
    case Regime::SlipHeavy:
      return "slip-heavy";
  }
  return "mixed";
}

std::optional<Regime> regime_from_string(std::string_view name) {
  for (Regime r : {Regime::AdhesionHeavy, Regime::Mixed, Regime::SlipHeavy})
    if (to_string(r) == name) return r;
  return std::nullopt;
}

ContactProblem build_contact_problem(int n_elements, Regime regime, std::uint64_t seed) {
  if (n_elements < 1) throw std::invalid_argument("build_contact_problem: need n_elements >= 1");

  ContactProblem cp;
  cp.n_elements = n_elements;
  cp.regime = regime;
  cp.seed = seed;
  cp.spacing = 1.0;
  cp.rows = 1;
  for (int r = 1; r * r <= n_elements; ++r)
    if (n_elements % r == 0) cp.rows = r;
  cp.cols = n_elements / cp.rows;

  const double h = cp.spacing;
  const int n = n_elements;
  Eigen::VectorXd cx(n), cy(n);
  for (int i = 0; i < n; ++i) {
    const int row = i / cp.cols;
    const int col = i % cp.cols;
    cx[i] = (col - 0.5 * (cp.cols - 1)) * h;
    cy[i] = (row - 0.5 * (cp.rows - 1)) * h;
  }

  // Hertz-like semi-ellipsoid normal pressure, scaled to a unit peak.
  const double a = 0.75 * cp.cols * h;
  const double b = 0.75 * cp.rows * h;
  cp.normal_pressure.resize(n);
  for (int i = 0; i < n; ++i) {
    const double r2 = (cx[i] / a) * (cx[i] / a) + (cy[i] / b) * (cy[i] / b);
    cp.normal_pressure[i] = std::sqrt(std::max(0.0, 1.0 - r2));
  }
  cp.normal_pressure /= cp.normal_pressure.maxCoeff();

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  cp.friction.resize(n);
  for (int i = 0; i < n; ++i) cp.friction[i] = 0.3 * (1.0 + 0.1 * unit(rng));
  cp.traction_bound = cp.friction.cwiseProduct(cp.normal_pressure);

  // Half-space-like decay K / (h (1 + d/h)) with K normalizing the row sums of the
  // x-x coupling at the patch centre element to one.
  auto decay = [&](int i, int j) {
    const double d = std::hypot(cx[i] - cx[j], cy[i] - cy[j]);
    return 1.0 / (h * (1.0 + d / h));
  };
  const int centre = (cp.rows / 2) * cp.cols + cp.cols / 2;
  double row_sum = 0.0;
  for (int j = 0; j < n; ++j) row_sum += decay(centre, j);
  const double k_const = 1.0 / row_sum;

  cp.influence.resize(2 * n, 2 * n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double base = k_const * decay(i, j);
      const double sx = sgn(cx[i] - cx[j]);
      const double sy = sgn(cy[i] - cy[j]);
      cp.influence(2 * i, 2 * j) = base * (kXX + kSkew * sx);
      cp.influence(2 * i + 1, 2 * j + 1) = base * (kYY + kSkew * sx);
      cp.influence(2 * i, 2 * j + 1) = base * kXY * (1.0 + 0.5 * sy);
      cp.influence(2 * i + 1, 2 * j) = base * kYX * (1.0 - 0.5 * sy);
    }
  }

  // Rigid creep: longitudinal + lateral creepage plus spin about the patch centre.
  std::uniform_real_distribution<double> longitudinal(0.5, 1.0);
  std::uniform_real_distribution<double> lateral(-0.5, 0.5);
  std::uniform_real_distribution<double> spin(-1.0, 1.0);
  const double xi_x = longitudinal(rng);
  const double xi_y = lateral(rng);
  const double phi = spin(rng) / std::max(cp.rows, cp.cols);
  Eigen::VectorXd shape(2 * n);
  for (int i = 0; i < n; ++i) {
    shape[2 * i] = xi_x - phi * cy[i];
    shape[2 * i + 1] = xi_y + phi * cx[i];
  }
  double shape_max = 0.0;
  for (int i = 0; i < n; ++i) shape_max = std::max(shape_max, shape.segment<2>(2 * i).norm());

  // Reference slip: what full longitudinal sliding traction induces.
  Eigen::VectorXd sliding(2 * n);
  for (int i = 0; i < n; ++i) {
    sliding[2 * i] = cp.traction_bound[i];
    sliding[2 * i + 1] = 0.0;
  }
  const double reference = (cp.influence * sliding).lpNorm<Eigen::Infinity>();
  cp.creep = (creep_scale(regime) * reference / shape_max) * shape;
  return cp;
}

Eigen::VectorXd slip(const ContactProblem& cp, const Eigen::VectorXd& pressures) {
  return cp.creep + cp.influence * pressures;
}

Eigen::VectorXd contact_residual(const ContactProblem& cp, const Eigen::VectorXd& pressures) {
  if (pressures.size() != cp.dimension())
    throw std::invalid_argument("contact_residual: wrong number of unknowns");
  const Eigen::VectorXd s = slip(cp, pressures);
  Eigen::VectorXd f = s;
  for (int i = 0; i < cp.n_elements; ++i) {
    const double r = std::sqrt(s.segment<2>(2 * i).squaredNorm() + cp.epsilon);
    f.segment<2>(2 * i) += (r / cp.traction_bound[i]) * pressures.segment<2>(2 * i);
  }
  return f;
}

Eigen::MatrixXd contact_jacobian(const ContactProblem& cp, const Eigen::VectorXd& pressures) {
  if (pressures.size() != cp.dimension())
    throw std::invalid_argument("contact_jacobian: wrong number of unknowns");
  const Eigen::VectorXd s = slip(cp, pressures);
  Eigen::MatrixXd jac = cp.influence;
  // d/dp [r_I p_I / g_I] = (p_I s_I' B_I) / (g_I r_I) + (r_I / g_I) E_I.
  for (int i = 0; i < cp.n_elements; ++i) {
    const auto s_i = s.segment<2>(2 * i);
    const auto p_i = pressures.segment<2>(2 * i);
    const double g = cp.traction_bound[i];
    const double r = std::sqrt(s_i.squaredNorm() + cp.epsilon);
    const Eigen::RowVectorXd dr = (s_i.transpose() * cp.influence.middleRows<2>(2 * i)) / r;
    jac.middleRows<2>(2 * i) += (p_i / g) * dr;
    jac.block<2, 2>(2 * i, 2 * i) += Eigen::Matrix2d::Identity() * (r / g);
  }
  return jac;
}

Problem as_problem(const ContactProblem& cp) {
  auto shared = std::make_shared<const ContactProblem>(cp);
  Problem problem;
  problem.label = "contact:" + std::to_string(cp.n_elements) + ":" +
                  std::string(to_string(cp.regime)) + ":" + std::to_string(cp.seed);
  problem.dimension = cp.dimension();
  problem.residual = [shared](const Eigen::VectorXd& p) { return contact_residual(*shared, p); };
  problem.jacobian = [shared](const Eigen::VectorXd& p) { return contact_jacobian(*shared, p); };
  problem.initial_point = Eigen::VectorXd::Zero(cp.dimension());
  return problem;
}

void write_contact_problem(std::ostream& out, const ContactProblem& cp) {
  out << "specres-contact-problem 1\n";
  out << "n_elements " << cp.n_elements << '\n';
  out << "rows " << cp.rows << '\n';
  out << "cols " << cp.cols << '\n';
  out << "spacing " << format_double(cp.spacing) << '\n';
  out << "regime " << to_string(cp.regime) << '\n';
  out << "seed " << cp.seed << '\n';
  out << "epsilon " << format_double(cp.epsilon) << '\n';
  out << "influence " << cp.influence.rows() << ' ' << cp.influence.cols() << '\n';
  for (Eigen::Index i = 0; i < cp.influence.rows(); ++i) {
    for (Eigen::Index j = 0; j < cp.influence.cols(); ++j)
      out << (j ? " " : "") << format_double(cp.influence(i, j));
    out << '\n';
  }
  write_vector(out, "creep", cp.creep);
  write_vector(out, "traction_bound", cp.traction_bound);
  write_vector(out, "friction", cp.friction);
  write_vector(out, "normal_pressure", cp.normal_pressure);
}

ContactProblem read_contact_problem(std::istream& in) {
  ContactProblem cp;
  if (read_value<int>(in, "specres-contact-problem") != 1)
    throw std::runtime_error("contact problem file: unsupported version");
  cp.n_elements = read_value<int>(in, "n_elements");
  if (cp.n_elements < 1) throw std::runtime_error("contact problem file: n_elements must be >= 1");
  cp.rows = read_value<int>(in, "rows");
  cp.cols = read_value<int>(in, "cols");
  cp.spacing = read_value<double>(in, "spacing");
  const auto regime_name = read_value<std::string>(in, "regime");
  const auto regime = regime_from_string(regime_name);
  if (!regime) throw std::runtime_error("contact problem file: unknown regime '" + regime_name + "'");
  cp.regime = *regime;
  cp.seed = read_value<std::uint64_t>(in, "seed");
  cp.epsilon = read_value<double>(in, "epsilon");

  const Eigen::Index dim = cp.dimension();
  expect_key(in, "influence");
  Eigen::Index r = 0, c = 0;
  if (!(in >> r >> c) || r != dim || c != dim)
    throw std::runtime_error("contact problem file: influence matrix must be " +
                             std::to_string(dim) + "x" + std::to_string(dim));
  cp.influence.resize(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i)
    for (Eigen::Index j = 0; j < dim; ++j)
      if (!(in >> cp.influence(i, j)))
        throw std::runtime_error("contact problem file: truncated influence matrix");
  cp.creep = read_vector(in, "creep", dim);
  cp.traction_bound = read_vector(in, "traction_bound", cp.n_elements);
  cp.friction = read_vector(in, "friction", cp.n_elements);
  cp.normal_pressure = read_vector(in, "normal_pressure", cp.n_elements);
  if ((cp.traction_bound.array() <= 0.0).any())
    throw std::runtime_error("contact problem file: traction bound must be positive");
  return cp;
}

double density(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  return static_cast<double>((m.array() != 0.0).count()) / static_cast<double>(m.size());
}

bool lacks_diagonal_dominance(const Eigen::MatrixXd& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const double off = m.row(i).cwiseAbs().sum() - std::abs(m(i, i));
    if (off > std::abs(m(i, i))) return true;
  }
  return false;
}

}  // namespace specres::contact
