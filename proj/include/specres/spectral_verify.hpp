#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>

#include "specres/problem.hpp"
#include "specres/steplength.hpp"

namespace specres {

class InconsistentSecant : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class NonsymmetricJacobian : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Gauss-Legendre nodes and weights mapped to [0, 1] (Golub-Welsch).
template <typename Scalar>
std::pair<VectorX<Scalar>, VectorX<Scalar>> gauss_legendre_01(int nodes) {
  if (nodes < 1) throw std::invalid_argument("gauss_legendre_01: need at least one node");
  MatrixX<Scalar> jacobi = MatrixX<Scalar>::Zero(nodes, nodes);
  for (int k = 1; k < nodes; ++k) {
    using std::sqrt;
    const Scalar kk = static_cast<Scalar>(k);
    const Scalar b = kk / sqrt(Scalar(4) * kk * kk - Scalar(1));
    jacobi(k, k - 1) = b;
    jacobi(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> eig(jacobi);
  VectorX<Scalar> t = (eig.eigenvalues().array() + Scalar(1)) / Scalar(2);
  VectorX<Scalar> w = eig.eigenvectors().row(0).transpose().array().square();
  return {t, w};
}

/// G = int_0^1 J(x + t p) dt and its symmetric counterpart int_0^1 (J + J')/2 dt.
template <typename Scalar>
struct AverageMatrices {
  MatrixX<Scalar> G;
  MatrixX<Scalar> G_sym;
  int quadrature_nodes = 0;
  VectorX<Scalar> x;
  VectorX<Scalar> p;
};

template <typename Scalar>
AverageMatrices<Scalar> average_jacobian(const NonlinearProblem<Scalar>& problem,
                                         const VectorX<Scalar>& x, const VectorX<Scalar>& p,
                                         int nodes = 8) {
  if (!problem.has_jacobian())
    throw CapabilityError("average_jacobian: problem '" + problem.label +
                          "' has no analytic Jacobian");
  const auto [t, w] = gauss_legendre_01<Scalar>(nodes);
  const Eigen::Index n = problem.dimension;
  AverageMatrices<Scalar> out;
  out.G = MatrixX<Scalar>::Zero(n, n);
  out.G_sym = MatrixX<Scalar>::Zero(n, n);
  out.quadrature_nodes = nodes;
  out.x = x;
  out.p = p;
  for (int i = 0; i < nodes; ++i) {
    const MatrixX<Scalar> jac = problem.jacobian(VectorX<Scalar>(x + t[i] * p));
    out.G += w[i] * jac;
    out.G_sym += (w[i] / Scalar(2)) * (jac + jac.transpose());
  }
  return out;
}

/// q(M, p) = p'Mp / p'p.
template <typename DerivedM, typename DerivedP>
typename DerivedM::Scalar rayleigh_quotient(const Eigen::MatrixBase<DerivedM>& m,
                                            const Eigen::MatrixBase<DerivedP>& p) {
  return p.dot(m * p) / p.squaredNorm();
}

/// Fixes eigenvector signs so the largest-magnitude entry of each column is positive.
template <typename Scalar>
void normalize_eigenvector_signs(MatrixX<Scalar>& vectors) {
  for (Eigen::Index j = 0; j < vectors.cols(); ++j) {
    Eigen::Index imax = 0;
    vectors.col(j).cwiseAbs().maxCoeff(&imax);
    if (vectors(imax, j) < Scalar(0)) vectors.col(j) = -vectors.col(j);
  }
}

template <typename Scalar>
struct SymmetricSpectrum {
  VectorX<Scalar> values;   // ascending
  MatrixX<Scalar> vectors;  // orthonormal, sign-normalized columns
};

template <typename Scalar>
SymmetricSpectrum<Scalar> symmetric_spectrum(const MatrixX<Scalar>& m) {
  const MatrixX<Scalar> sym = (m + m.transpose()) / Scalar(2);
  Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> eig(sym);
  if (eig.info() != Eigen::Success)
    throw std::runtime_error("symmetric eigensolver did not converge");
  SymmetricSpectrum<Scalar> out{eig.eigenvalues(), eig.eigenvectors()};
  normalize_eigenvector_signs(out.vectors);
  return out;
}

template <typename Scalar>
struct RayleighReport {
  Scalar q_GS{};
  Scalar q_GtG{};
  Scalar gs_eigen_min{};
  Scalar gs_eigen_max{};
  Scalar gtg_eigen_min{};
  Scalar gtg_eigen_max{};
};

template <typename Scalar>
RayleighReport<Scalar> rayleigh_report(const AverageMatrices<Scalar>& m,
                                       const VectorX<Scalar>& p) {
  const MatrixX<Scalar> gtg = m.G.transpose() * m.G;
  const auto gs = symmetric_spectrum(m.G_sym);
  const auto tt = symmetric_spectrum(gtg);
  RayleighReport<Scalar> r;
  r.q_GS = rayleigh_quotient(m.G_sym, p);
  r.q_GtG = rayleigh_quotient(gtg, p);
  r.gs_eigen_min = gs.values.minCoeff();
  r.gs_eigen_max = gs.values.maxCoeff();
  r.gtg_eigen_min = tt.values.minCoeff();
  r.gtg_eigen_max = tt.values.maxCoeff();
  return r;
}

/// One verified relation: name, both sides, signed slack and verdict.
template <typename Scalar>
struct InequalityCheck {
  std::string name;
  Scalar lhs{};
  Scalar rhs{};
  Scalar slack{};
  bool pass = false;
};

template <typename Scalar>
struct VerificationReport {
  std::string case_label;
  bool assumption1_failed = false;
  std::vector<InequalityCheck<Scalar>> checks;

  std::size_t violations() const {
    return static_cast<std::size_t>(
        std::count_if(checks.begin(), checks.end(), [](const auto& c) { return !c.pass; }));
  }
  bool passed() const { return violations() == 0; }

  // lhs <= rhs up to a relative tolerance.
  void less_equal(std::string name, Scalar lhs, Scalar rhs, Scalar rel_tol) {
    using std::abs;
    const Scalar slack = rhs - lhs;
    const Scalar scale = std::max({abs(lhs), abs(rhs), std::numeric_limits<Scalar>::min()});
    checks.push_back({std::move(name), lhs, rhs, slack, slack >= -rel_tol * scale});
  }
  // lhs < rhs exactly.
  void strictly_less(std::string name, Scalar lhs, Scalar rhs) {
    checks.push_back({std::move(name), lhs, rhs, rhs - lhs, lhs < rhs});
  }
  // |lhs - rhs| <= rel_tol * max(|lhs|, |rhs|).
  void equal(std::string name, Scalar lhs, Scalar rhs, Scalar rel_tol) {
    using std::abs;
    const Scalar gap = abs(lhs - rhs);
    const Scalar scale = std::max({abs(lhs), abs(rhs), std::numeric_limits<Scalar>::min()});
    checks.push_back({std::move(name), lhs, rhs, -gap, gap <= rel_tol * scale});
  }
  // |lhs - rhs| <= abs_tol.
  void near(std::string name, Scalar lhs, Scalar rhs, Scalar abs_tol) {
    using std::abs;
    const Scalar gap = abs(lhs - rhs);
    checks.push_back({std::move(name), lhs, rhs, -gap, gap <= abs_tol});
  }
};

/// One line per relation: name lhs rhs slack PASS|FAIL.
template <typename Scalar>
void write_report(std::ostream& out, const VerificationReport<Scalar>& report) {
  const auto flags = out.flags();
  const auto precision = out.precision();
  out << std::setprecision(17);
  if (!report.case_label.empty()) out << "# case " << report.case_label << '\n';
  if (report.assumption1_failed) out << "# assumption-1 failure: p'y = 0, steplengths undefined\n";
  for (const auto& c : report.checks)
    out << c.name << ' ' << c.lhs << ' ' << c.rhs << ' ' << c.slack << ' '
        << (c.pass ? "PASS" : "FAIL") << '\n';
  out.flags(flags);
  out.precision(precision);
}

/// Sign/ordering relations between the raw steplengths and the cosine identity
/// beta_2 = beta_1 cos^2(phi). Needs no Jacobian.
template <typename Scalar>
VerificationReport<Scalar> check_secant_pair(const VectorX<Scalar>& p, const VectorX<Scalar>& y,
                                             Scalar rel_tol) {
  VerificationReport<Scalar> report;
  const auto b1 = raw_beta1(p, y);
  const auto b2 = raw_beta2(p, y);
  if (!b1 || !b2) {
    report.assumption1_failed = true;
    return report;
  }
  using std::abs;
  report.strictly_less("P1.same_sign", Scalar(0), *b1 * *b2);
  report.less_equal("P1.abs_beta2_le_abs_beta1", abs(*b2), abs(*b1), rel_tol);
  if (*b1 < Scalar(0)) {
    report.less_equal("P2.beta1_le_beta2", *b1, *b2, rel_tol);
    report.strictly_less("P2.beta2_lt_0", *b2, Scalar(0));
  } else {
    report.strictly_less("P2.0_lt_beta2", Scalar(0), *b2);
    report.less_equal("P2.beta2_le_beta1", *b2, *b1, rel_tol);
  }
  const Scalar cos_phi = p.dot(y) / (p.norm() * y.norm());
  report.equal("cos.beta2_eq_beta1_cos2", *b2, *b1 * cos_phi * cos_phi, rel_tol);
  return report;
}

/// Secant-pair relations plus the Rayleigh-quotient forms
/// beta_1 = 1/q(G_S, p), beta_2 = q(G_S, p)/q(G'G, p).
///
/// Throws InconsistentSecant when y is not G p to within `secant_tol` (relative).
template <typename Scalar>
VerificationReport<Scalar> check_lemma1(const VectorX<Scalar>& p, const VectorX<Scalar>& y,
                                        const AverageMatrices<Scalar>& m,
                                        Scalar rel_tol = Scalar(1e-8),
                                        Scalar secant_tol = Scalar(1e-8)) {
  const Scalar secant_gap = (y - m.G * p).norm();
  if (secant_gap > secant_tol * std::max(Scalar(1), y.norm()))
    throw InconsistentSecant("check_lemma1: y differs from G p by " + std::to_string(double(secant_gap)));

  VerificationReport<Scalar> report = check_secant_pair(p, y, rel_tol);
  if (report.assumption1_failed) return report;
  if (p.dot(y) == Scalar(0)) {
    report.assumption1_failed = true;
    return report;
  }
  const Scalar b1 = *raw_beta1(p, y);
  const Scalar b2 = *raw_beta2(p, y);
  const Scalar q_gs = rayleigh_quotient(m.G_sym, p);
  const Scalar q_gtg = rayleigh_quotient(MatrixX<Scalar>(m.G.transpose() * m.G), p);
  report.equal("P3.beta1_eq_inv_qGS", b1, Scalar(1) / q_gs, rel_tol);
  report.equal("P3.beta2_eq_qGS_over_qGtG", b2, q_gs / q_gtg, rel_tol);
  return report;
}

namespace detail {

template <typename Scalar>
bool is_symmetric(const MatrixX<Scalar>& m, Scalar tol) {
  return (m - m.transpose()).norm() <= tol * (Scalar(1) + m.norm());
}

// Case (ii) bound chains for a matrix whose symmetric part is positive definite.
template <typename Scalar>
void append_case_ii(VerificationReport<Scalar>& r, Scalar b1, Scalar b2, Scalar gs_min,
                    Scalar gs_max, Scalar gtg_min, Scalar gtg_max, Scalar tol,
                    const std::string& prefix) {
  r.strictly_less(prefix + "positive.beta1", Scalar(0), b1);
  r.strictly_less(prefix + "positive.beta2", Scalar(0), b2);
  r.less_equal(prefix + "bGspd.inv_lmax_GS_le_beta1", Scalar(1) / gs_max, b1, tol);
  r.less_equal(prefix + "bGspd.beta2_le_beta1", b2, b1, tol);
  r.less_equal(prefix + "bGspd.beta1_le_inv_lmin_GS", b1, Scalar(1) / gs_min, tol);
  r.less_equal(prefix + "bGspd2.lmin_GS_over_lmax_GtG_le_beta2", gs_min / gtg_max, b2, tol);
  r.less_equal(prefix + "bGspd2.beta2_le_lmax_GS_over_lmin_GtG", b2, gs_max / gtg_min, tol);
  r.less_equal(prefix + "bGspd2.beta2_le_beta1", b2, b1, tol);
}

}  // namespace detail

/// Steplength bound chains for the case detected from the spectrum of G_S:
/// (i) G symmetric positive definite, (ii) G_S positive definite,
/// (iii) G_S indefinite with G nonsingular. A negative definite G_S is checked
/// as case (ii) on -G. Steplengths are formed from y = G p.
template <typename Scalar>
VerificationReport<Scalar> check_lemma2_bounds(const AverageMatrices<Scalar>& m,
                                               const VectorX<Scalar>& p,
                                               Scalar tol = Scalar(1e-10)) {
  VerificationReport<Scalar> r;
  const VectorX<Scalar> y = m.G * p;
  const auto raw1 = raw_beta1(p, y);
  const auto raw2 = raw_beta2(p, y);
  if (!raw1 || !raw2 || *raw2 == Scalar(0)) {
    r.case_label = "undefined";
    r.assumption1_failed = true;
    return r;
  }
  const Scalar b1 = *raw1;
  const Scalar b2 = *raw2;

  const auto gs = symmetric_spectrum(m.G_sym);
  const auto gtg = symmetric_spectrum(MatrixX<Scalar>(m.G.transpose() * m.G));
  const Scalar gs_min = gs.values.minCoeff();
  const Scalar gs_max = gs.values.maxCoeff();
  const Scalar gtg_min = gtg.values.minCoeff();
  const Scalar gtg_max = gtg.values.maxCoeff();
  using std::abs;
  const Scalar spread = Scalar(1e-12) * (Scalar(1) + std::max(abs(gs_min), abs(gs_max)));

  const bool positive_definite = gs_min > Scalar(1e-12) * (Scalar(1) + abs(gs_max));
  const bool negative_definite = gs_max < -Scalar(1e-12) * (Scalar(1) + abs(gs_min));
  const bool indefinite = gs_min < -spread && spread < gs_max;
  const bool nonsingular = gtg_min > Scalar(1e-24) * gtg_max && gtg_min > Scalar(0);

  if (positive_definite) {
    if (detail::is_symmetric(m.G, Scalar(1e-12))) {
      r.case_label = "i";
      // For symmetric G the spectrum of G is the spectrum of G_S.
      r.strictly_less("i.positive.beta2", Scalar(0), b2);
      r.less_equal("bJpd.inv_lmax_G_le_beta2", Scalar(1) / gs_max, b2, tol);
      r.less_equal("bJpd.beta2_le_beta1", b2, b1, tol);
      r.less_equal("bJpd.beta1_le_inv_lmin_G", b1, Scalar(1) / gs_min, tol);
    } else {
      r.case_label = "ii";
    }
    detail::append_case_ii(r, b1, b2, gs_min, gs_max, gtg_min, gtg_max, tol, "ii.");
  } else if (negative_definite) {
    r.case_label = "ii-negated";
    // -G has G_S spectrum {-lambda}, same G'G, and steplengths -beta.
    detail::append_case_ii(r, -b1, -b2, -gs_max, -gs_min, gtg_min, gtg_max, tol, "ii-neg.");
  } else if (indefinite && nonsingular) {
    r.case_label = "iii";
    if (b1 < Scalar(0)) {
      r.less_equal("bb1indef.beta1_le_inv_lmin_GS", b1, Scalar(1) / gs_min, tol);
      r.less_equal("bb1indef.beta1_le_beta2", b1, b2, tol);
    } else {
      r.less_equal("bb1indef.inv_lmax_GS_le_beta1", Scalar(1) / gs_max, b1, tol);
      r.less_equal("bb1indef.beta2_le_beta1", b2, b1, tol);
    }
    if (b2 > Scalar(0)) {
      r.strictly_less("bb2indef.0_lt_beta2", Scalar(0), b2);
      r.less_equal("bb2indef.beta2_le_lmax_GS_over_lmin_GtG", b2, gs_max / gtg_min, tol);
      r.less_equal("bb2indef.beta2_le_beta1", b2, b1, tol);
    } else {
      // Mirror of bb2indef: q_S >= lambda_min(G_S) < 0 and q_T >= lambda_min(G'G) give
      // beta_2 >= lambda_min(G_S)/lambda_min(G'G). Dividing by lambda_max(G'G) instead
      // does not bound beta_2 (G = diag(-1, 10), p = e_1 gives beta_2 = -1 < -0.01).
      r.less_equal("bb2indef2.lmin_GS_over_lmin_GtG_le_beta2", gs_min / gtg_min, b2, tol);
      r.less_equal("bb2indef2.beta1_le_beta2", b1, b2, tol);
      r.strictly_less("bb2indef2.beta2_lt_0", b2, Scalar(0));
    }
  } else {
    r.case_label = "none";
  }
  return r;
}

template <typename Scalar>
struct Lemma3Report {
  VerificationReport<Scalar> report;
  VectorX<Scalar> eigenvalues;
  VectorX<Scalar> mu_k;
  VectorX<Scalar> mu_next;
  VectorX<Scalar> factors;  // 1 - beta lambda_i
};

/// Takes the step p = -beta F_k, evaluates F_{k+1}, and checks the eigencomponent
/// recurrence mu_{k+1} = mu_k (1 - beta lambda_i(G_k)) together with the
/// annihilation / contraction classification of each component.
template <typename Scalar>
Lemma3Report<Scalar> check_lemma3_recurrence(const NonlinearProblem<Scalar>& problem,
                                             const VectorX<Scalar>& x_k, Scalar beta_k,
                                             int nodes = 8, Scalar tol = Scalar(1e-8)) {
  EvalCounter counter;
  const VectorX<Scalar> f_k = evaluate(problem, x_k, counter);
  const VectorX<Scalar> p = -beta_k * f_k;
  const VectorX<Scalar> f_next = evaluate(problem, VectorX<Scalar>(x_k + p), counter);

  const auto [t, w] = gauss_legendre_01<Scalar>(nodes);
  for (Eigen::Index i = 0; i < t.size(); ++i) {
    const MatrixX<Scalar> jac = evaluate_jacobian(problem, VectorX<Scalar>(x_k + t[i] * p), counter);
    if ((jac - jac.transpose()).norm() > Scalar(1e-10) * (Scalar(1) + jac.norm()))
      throw NonsymmetricJacobian("check_lemma3_recurrence: Jacobian of '" + problem.label +
                                 "' is not symmetric on the segment");
  }

  const AverageMatrices<Scalar> m = average_jacobian(problem, x_k, p, nodes);
  const SymmetricSpectrum<Scalar> spec = symmetric_spectrum(m.G);

  Lemma3Report<Scalar> out;
  out.eigenvalues = spec.values;
  out.mu_k = spec.vectors.transpose() * f_k;
  out.mu_next = spec.vectors.transpose() * f_next;
  out.factors = (Scalar(1) - beta_k * spec.values.array()).matrix();
  out.report.case_label = "symmetric";

  const Scalar scale = tol * (f_k.norm() + f_next.norm());
  using std::abs;
  for (Eigen::Index i = 0; i < spec.values.size(); ++i) {
    const std::string idx = std::to_string(i);
    const Scalar predicted = out.mu_k[i] * out.factors[i];
    out.report.near("recurrence.mu" + idx, out.mu_next[i], predicted, scale);
    const Scalar beta_lambda = beta_k * spec.values[i];
    if (abs(beta_lambda - Scalar(1)) <= Scalar(1e-12)) {
      out.report.near("a.annihilated.mu" + idx, abs(out.mu_next[i]), Scalar(0), scale);
    } else if (Scalar(0) < beta_lambda && beta_lambda < Scalar(2)) {
      out.report.less_equal("b.contracted.mu" + idx, abs(out.mu_next[i]) - scale,
                            abs(out.mu_k[i]), Scalar(0));
    } else {
      out.report.less_equal("b.not_contracted.mu" + idx, abs(out.mu_k[i]),
                            abs(out.mu_next[i]) + scale, Scalar(0));
    }
  }
  return out;
}

/// Closed or open interval of signed step scales gamma*beta; empty when lo > hi.
template <typename Scalar>
struct StepInterval {
  Scalar lo{};
  Scalar hi{};
  bool closed = true;
  bool empty() const { return closed ? lo > hi : !(lo < hi); }
  bool contains(Scalar s) const { return closed ? (lo <= s && s <= hi) : (lo < s && s < hi); }
};

template <typename Scalar>
struct Theorem1Intervals {
  StepInterval<Scalar> descent_minus;  // ||F_{k+1}|| < ||F_k|| along p_- = -gamma beta F_k
  StepInterval<Scalar> normdes_minus;  // ||F_{k+1}|| <= (1 + eta_k)||F_k|| along p_-
  StepInterval<Scalar> descent_plus;
  StepInterval<Scalar> normdes_plus;
  Scalar q_GS{};
  Scalar q_GtG{};
  Scalar delta{};
  int sign_case = 0;  // sign of q(G_S, F_k); 0 means no strict-descent interval
};

/// Ranges of gamma*beta giving strict descent or approximate norm descent for
/// both trial directions, from ||F_{k+1}||^2 = ||F_k||^2 (1 -+ 2 s q_S + s^2 q_T).
template <typename Scalar>
Theorem1Intervals<Scalar> theorem1_intervals(const AverageMatrices<Scalar>& m,
                                             const VectorX<Scalar>& f_k, Scalar eta_k) {
  if (!(f_k.squaredNorm() > Scalar(0)))
    throw std::invalid_argument("theorem1_intervals: F_k must be nonzero");
  Theorem1Intervals<Scalar> out;
  out.q_GS = rayleigh_quotient(m.G_sym, f_k);
  out.q_GtG = (m.G * f_k).squaredNorm() / f_k.squaredNorm();
  if (!(out.q_GtG > Scalar(0)))
    throw std::invalid_argument("theorem1_intervals: G F_k must be nonzero");
  using std::sqrt;
  out.delta = out.q_GS * out.q_GS + (eta_k * eta_k + Scalar(2) * eta_k) * out.q_GtG;
  const Scalar root = sqrt(out.delta);
  const Scalar qs = out.q_GS;
  const Scalar qt = out.q_GtG;

  out.normdes_minus = {(qs - root) / qt, (qs + root) / qt, true};
  out.normdes_plus = {(-qs - root) / qt, (-qs + root) / qt, true};

  out.sign_case = qs > Scalar(0) ? 1 : (qs < Scalar(0) ? -1 : 0);
  const Scalar edge = Scalar(2) * qs / qt;
  if (out.sign_case == 0) {
    out.descent_minus = {Scalar(0), Scalar(0), false};
    out.descent_plus = {Scalar(0), Scalar(0), false};
  } else {
    out.descent_minus = {std::min(Scalar(0), edge), std::max(Scalar(0), edge), false};
    out.descent_plus = {std::min(Scalar(0), -edge), std::max(Scalar(0), -edge), false};
  }
  return out;
}

}  // namespace specres
