#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "specres/spectral_suite.hpp"
#include "specres/spectral_verify.hpp"
#include "specres/test_problems.hpp"

using namespace specres;

namespace {

Problem linear_with_jacobian(const Eigen::MatrixXd& a) {
  return problems::linear("lin", a, Eigen::VectorXd::Zero(a.rows()));
}

Problem square_first() {
  Problem p;
  p.label = "square-first";
  p.dimension = 2;
  p.residual = [](const Eigen::VectorXd& x) {
    return Eigen::VectorXd(Eigen::Vector2d(x[0] * x[0], x[1]));
  };
  p.jacobian = [](const Eigen::VectorXd& x) {
    Eigen::MatrixXd j(2, 2);
    j << 2 * x[0], 0, 0, 1;
    return j;
  };
  p.initial_point = Eigen::Vector2d::Zero();
  return p;
}

AverageMatrices<double> exact(const Eigen::MatrixXd& g, const Eigen::VectorXd& p) {
  AverageMatrices<double> m;
  m.G = g;
  m.G_sym = (g + g.transpose()) / 2;
  m.quadrature_nodes = 1;
  m.x = Eigen::VectorXd::Zero(p.size());
  m.p = p;
  return m;
}

bool has_check(const VerificationReport<double>& r, const std::string& name) {
  for (const auto& c : r.checks)
    if (c.name == name) return true;
  return false;
}

}  // namespace

TEST_CASE("Gauss-Legendre rule integrates polynomials of degree 2n-1 exactly") {
  for (int n = 1; n <= 6; ++n) {
    const auto [t, w] = gauss_legendre_01<double>(n);
    CHECK(w.sum() == doctest::Approx(1.0).epsilon(1e-14));
    const int deg = 2 * n - 1;
    const double integral = (t.array().pow(deg) * w.array()).sum();
    CHECK(integral == doctest::Approx(1.0 / (deg + 1)).epsilon(1e-13));
  }
  CHECK_THROWS_AS(gauss_legendre_01<double>(0), std::invalid_argument);
}

TEST_CASE("average Jacobian of a linear map is the matrix") {
  Eigen::MatrixXd a(3, 3);
  a << 2, 1, 0, -1, 3, 4, 0.5, 0, 1;
  const Problem lin = linear_with_jacobian(a);
  for (int nodes : {1, 3, 8}) {
    const auto m = average_jacobian(lin, Eigen::VectorXd(Eigen::Vector3d(1, -2, 3)),
                                    Eigen::VectorXd(Eigen::Vector3d(0.1, 0.2, -0.5)), nodes);
    CHECK((m.G - a).norm() <= 1e-14 * a.norm());
    CHECK((m.G_sym - (m.G + m.G.transpose()) / 2).norm() <= 1e-12);
  }
}

TEST_CASE("average Jacobian along a segment of (x1^2, x2)") {
  const Problem q = square_first();
  for (int nodes : {1, 2, 8}) {
    const auto m = average_jacobian(q, Eigen::VectorXd(Eigen::Vector2d(0, 0)),
                                    Eigen::VectorXd(Eigen::Vector2d(1, 0)), nodes);
    CHECK((m.G - Eigen::Matrix2d::Identity()).norm() <= 1e-14);
  }
}

TEST_CASE("average Jacobian needs an analytic Jacobian") {
  Problem p = square_first();
  p.jacobian = nullptr;
  CHECK_THROWS_AS(average_jacobian(p, Eigen::VectorXd(Eigen::Vector2d(0, 0)),
                                   Eigen::VectorXd(Eigen::Vector2d(1, 0))),
                  CapabilityError);
}

TEST_CASE("secant-pair relations: on diag(2,4)") {
  const Eigen::Matrix2d a = Eigen::Vector2d(2, 4).asDiagonal();
  const Eigen::VectorXd p = Eigen::Vector2d(1, 1);
  const Eigen::VectorXd y = a * p;
  const auto m = exact(a, p);
  const auto r = check_lemma1(p, y, m);
  CHECK(r.passed());
  CHECK(rayleigh_quotient(a, p) == doctest::Approx(3.0));
  CHECK(rayleigh_quotient(Eigen::Matrix2d(a.transpose() * a), p) == doctest::Approx(10.0));
  CHECK(*raw_beta1(p, y) == doctest::Approx(1.0 / 3.0));
  CHECK(*raw_beta2(p, y) == doctest::Approx(0.3));
}

TEST_CASE("secant-pair relations: flags the skew-symmetric case") {
  Eigen::Matrix2d a;
  a << 0, 1, -1, 0;
  const Eigen::VectorXd p = Eigen::Vector2d(1, 0);
  const auto r = check_lemma1(p, Eigen::VectorXd(a * p), exact(a, p));
  CHECK(r.assumption1_failed);
  CHECK(r.checks.empty());
}

TEST_CASE("secant-pair relations: rejects inconsistent secant pairs") {
  const Eigen::Matrix2d a = Eigen::Vector2d(2, 4).asDiagonal();
  const Eigen::VectorXd p = Eigen::Vector2d(1, 1);
  CHECK_THROWS_AS(check_lemma1(p, Eigen::VectorXd(Eigen::Vector2d(5, 5)), exact(a, p)),
                  InconsistentSecant);
}

TEST_CASE("secant-pair relations: sign relations for symmetric positive definite matrices") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g;
  for (int t = 0; t < 100; ++t) {
    Eigen::MatrixXd b(4, 4);
    for (int i = 0; i < 16; ++i) b.data()[i] = g(rng);
    const Eigen::MatrixXd a = b * b.transpose() + 0.1 * Eigen::MatrixXd::Identity(4, 4);
    Eigen::VectorXd p(4);
    for (int i = 0; i < 4; ++i) p[i] = g(rng);
    const Eigen::VectorXd y = a * p;
    CHECK(*raw_beta1(p, y) > 0);
    CHECK(*raw_beta2(p, y) > 0);
    CHECK(check_lemma1(p, y, exact(a, p)).passed());
  }
}

TEST_CASE("bound chains: case (i) on diag(1,10)") {
  const Eigen::Matrix2d a = Eigen::Vector2d(1, 10).asDiagonal();
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g;
  for (int t = 0; t < 50; ++t) {
    const Eigen::VectorXd p = Eigen::Vector2d(g(rng), g(rng));
    const auto r = check_lemma2_bounds(exact(a, p), p);
    CHECK(r.case_label == "i");
    CHECK(r.passed());
    const Eigen::VectorXd y = a * p;
    const double b1 = *raw_beta1(p, y), b2 = *raw_beta2(p, y);
    CHECK(0.1 <= b2 * (1 + 1e-14));
    CHECK(b2 <= b1 * (1 + 1e-14));
    CHECK(b1 <= 1.0 + 1e-14);
  }
}

TEST_CASE("bound chains: case (ii) on nonsymmetric matrices with SPD symmetric part") {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> g;
  for (int t = 0; t < 100; ++t) {
    const int n = 2 + t % 9;
    Eigen::MatrixXd b(n, n), k(n, n);
    for (int i = 0; i < n * n; ++i) {
      b.data()[i] = g(rng);
      k.data()[i] = g(rng);
    }
    const Eigen::MatrixXd a = b * b.transpose() + 0.5 * Eigen::MatrixXd::Identity(n, n) +
                              (k - k.transpose());
    Eigen::VectorXd p(n);
    for (int i = 0; i < n; ++i) p[i] = g(rng);
    const auto r = check_lemma2_bounds(exact(a, p), p);
    CHECK(r.case_label == "ii");
    CHECK(r.passed());
  }
}

TEST_CASE("bound chains: case (iii) on diag(1,-1)") {
  const Eigen::Matrix2d a = Eigen::Vector2d(1, -1).asDiagonal();
  const Eigen::VectorXd p = Eigen::Vector2d(1, 0);
  const auto r = check_lemma2_bounds(exact(a, p), p);
  CHECK(r.case_label == "iii");
  CHECK(r.passed());
  CHECK(has_check(r, "bb1indef.inv_lmax_GS_le_beta1"));
  CHECK(*raw_beta1(p, Eigen::VectorXd(a * p)) == 1.0);
}

TEST_CASE("negative BB2 lower bound uses the smallest eigenvalue of G'G") {
  // G = diag(-1, 10), p = e1: beta2 = -1, while lmin(G_S)/lmax(G'G) = -0.01.
  const Eigen::Matrix2d a = Eigen::Vector2d(-1, 10).asDiagonal();
  const Eigen::VectorXd p = Eigen::Vector2d(1, 0);
  const auto r = check_lemma2_bounds(exact(a, p), p);
  CHECK(r.case_label == "iii");
  CHECK(r.passed());
  const double b2 = *raw_beta2(p, Eigen::VectorXd(a * p));
  CHECK(b2 == -1.0);
  CHECK(b2 < -1.0 / 100.0);
  CHECK(-1.0 / 1.0 <= b2);
}

TEST_CASE("eigencomponent recurrence on diag(1,3)") {
  const Problem lin = linear_with_jacobian(Eigen::Vector2d(1, 3).asDiagonal());
  const auto out = check_lemma3_recurrence(lin, Eigen::VectorXd(Eigen::Vector2d(1, 1)), 0.5);
  CHECK(out.report.passed());
  CHECK(out.eigenvalues[0] == doctest::Approx(1.0));
  CHECK(out.eigenvalues[1] == doctest::Approx(3.0));
  CHECK(out.mu_k[0] == doctest::Approx(1.0));
  CHECK(out.mu_k[1] == doctest::Approx(3.0));
  CHECK(out.mu_next[0] == doctest::Approx(0.5));
  CHECK(out.mu_next[1] == doctest::Approx(-1.5));
  CHECK(out.factors[0] == doctest::Approx(0.5));
  CHECK(out.factors[1] == doctest::Approx(-0.5));
}

TEST_CASE("eigencomponent recurrence: annihilation and the contraction boundary") {
  const Problem lin = linear_with_jacobian(Eigen::Vector2d(1, 4).asDiagonal());
  const Eigen::VectorXd x = Eigen::Vector2d(1, 1);
  const auto kill = check_lemma3_recurrence(lin, x, 0.25);
  CHECK(kill.report.passed());
  CHECK(std::abs(kill.mu_next[1]) <= 1e-15);
  CHECK(has_check(kill.report, "a.annihilated.mu1"));

  const auto edge = check_lemma3_recurrence(lin, x, 0.5);
  CHECK(edge.report.passed());
  CHECK(std::abs(edge.mu_next[1]) == doctest::Approx(std::abs(edge.mu_k[1])));
}

TEST_CASE("eigencomponent recurrence requires a symmetric Jacobian") {
  Eigen::Matrix2d a;
  a << 1, 2, 0, 1;
  const Problem lin = linear_with_jacobian(a);
  CHECK_THROWS_AS(check_lemma3_recurrence(lin, Eigen::VectorXd(Eigen::Vector2d(1, 1)), 0.5),
                  NonsymmetricJacobian);
}

TEST_CASE("step intervals for G = I") {
  const Eigen::VectorXd f = Eigen::Vector3d(1, -2, 0.5);
  const auto m = exact(Eigen::Matrix3d::Identity(), f);
  const auto t0 = theorem1_intervals(m, f, 0.0);
  CHECK(t0.sign_case == 1);
  CHECK(t0.descent_minus.lo == 0.0);
  CHECK(t0.descent_minus.hi == doctest::Approx(2.0));
  CHECK_FALSE(t0.descent_minus.contains(0.0));
  CHECK(t0.descent_minus.contains(1.0));

  const auto t3 = theorem1_intervals(m, f, 3.0);
  CHECK(t3.delta == doctest::Approx(16.0));
  CHECK(t3.normdes_minus.lo == doctest::Approx(-3.0));
  CHECK(t3.normdes_minus.hi == doctest::Approx(5.0));
  CHECK(t3.normdes_plus.lo == doctest::Approx(-5.0));
  CHECK(t3.normdes_plus.hi == doctest::Approx(3.0));
}

TEST_CASE("step intervals agree with direct residual evaluation") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(-6.0, 6.0);
  for (int t = 0; t < 40; ++t) {
    const int n = 2 + t % 6;
    Eigen::MatrixXd b(n, n);
    for (int i = 0; i < n * n; ++i) b.data()[i] = g(rng);
    const Eigen::MatrixXd a = (b + b.transpose()) / 2;
    Eigen::VectorXd f(n);
    for (int i = 0; i < n; ++i) f[i] = g(rng);
    const double eta = 0.05;
    const auto iv = theorem1_intervals(exact(a, f), f, eta);
    for (int s = 0; s < 200; ++s) {
      const double gb = u(rng);
      const double minus = (f - gb * a * f).norm();
      const double plus = (f + gb * a * f).norm();
      const double fn = f.norm();
      // Stay clear of the endpoints where rounding decides.
      auto clear = [&](const StepInterval<double>& i) {
        return std::abs(gb - i.lo) > 1e-9 && std::abs(gb - i.hi) > 1e-9;
      };
      if (clear(iv.normdes_minus)) CHECK(iv.normdes_minus.contains(gb) == (minus <= (1 + eta) * fn));
      if (clear(iv.normdes_plus)) CHECK(iv.normdes_plus.contains(gb) == (plus <= (1 + eta) * fn));
      if (clear(iv.descent_minus)) CHECK(iv.descent_minus.contains(gb) == (minus < fn));
      if (clear(iv.descent_plus)) CHECK(iv.descent_plus.contains(gb) == (plus < fn));
    }
  }
}

TEST_CASE("a zero Rayleigh quotient gives no strict-descent interval") {
  Eigen::Matrix2d a;
  a << 0, 1, -1, 0;
  const Eigen::VectorXd f = Eigen::Vector2d(1, 0);
  const auto iv = theorem1_intervals(exact(a, f), f, 0.1);
  CHECK(iv.sign_case == 0);
  CHECK(iv.descent_minus.empty());
  CHECK(iv.descent_plus.empty());
  CHECK(iv.delta >= 0.0);
  CHECK_THROWS_AS(theorem1_intervals(exact(a, f), Eigen::VectorXd(Eigen::Vector2d::Zero()), 0.1),
                  std::invalid_argument);
}

TEST_CASE("eigenvector signs are normalized") {
  Eigen::Matrix3d a;
  a << 2, -1, 0, -1, 2, -1, 0, -1, 2;
  const auto spec = symmetric_spectrum<double>(a);
  for (int j = 0; j < 3; ++j) {
    Eigen::Index imax = 0;
    spec.vectors.col(j).cwiseAbs().maxCoeff(&imax);
    CHECK(spec.vectors(imax, j) > 0);
  }
  CHECK(spec.values[0] <= spec.values[1]);
}

TEST_CASE("Rayleigh quotients lie between extreme eigenvalues") {
  std::mt19937_64 rng(10);
  std::normal_distribution<double> g;
  for (int t = 0; t < 100; ++t) {
    Eigen::MatrixXd a(5, 5);
    for (int i = 0; i < 25; ++i) a.data()[i] = g(rng);
    Eigen::VectorXd p(5);
    for (int i = 0; i < 5; ++i) p[i] = g(rng);
    const auto r = rayleigh_report(exact(a, p), p);
    CHECK(r.gs_eigen_min <= r.q_GS + 1e-12);
    CHECK(r.q_GS <= r.gs_eigen_max + 1e-12);
    CHECK(r.gtg_eigen_min <= r.q_GtG + 1e-12);
    CHECK(r.q_GtG <= r.gtg_eigen_max * (1 + 1e-12));
  }
}

TEST_CASE("report lines carry name, sides, slack and verdict") {
  VerificationReport<double> r;
  r.less_equal("a_le_b", 1.0, 2.0, 0.0);
  r.strictly_less("c_lt_d", 3.0, 3.0);
  std::ostringstream out;
  write_report(out, r);
  CHECK(out.str() == "a_le_b 1 2 1 PASS\nc_lt_d 3 3 0 FAIL\n");
  CHECK(r.violations() == 1);
}

TEST_CASE("randomized suites pass") {
  CHECK(verify::lemma1_suite(200, 3).passed());
  CHECK(verify::lemma2_suite(20, 3).passed());
  CHECK(verify::lemma3_suite(40, 3).passed());
  CHECK(verify::theorem1_suite(20, 3).passed());
  const auto s = verify::lemma2_suite(5, 9);
  std::ostringstream out;
  verify::write_summary(out, s);
  CHECK(out.str().find("PASS") != std::string::npos);
  CHECK(s.instances == 15);
}
