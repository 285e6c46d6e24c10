#include <doctest.h>

#include <cmath>
#include <random>

#include "specres/contact.hpp"
#include "specres/newton_tr.hpp"
#include "specres/srand.hpp"
#include "specres/test_problems.hpp"

using namespace specres;

TEST_CASE("SPD linear systems converge within three iterations") {
  for (double cond : {10.0, 1e3, 1e6}) {
    const Problem p = problems::linear_spd(20, cond);
    const Report r = solve_newton_tr(p, TrustRegionConfig<double>{});
    CAPTURE(cond);
    CHECK(r.status == SolverStatus::Converged);
    CHECK(r.iterations <= 3);
    CHECK(r.f_norm <= 1e-6);
    // One F(x0), then per accepted iteration n Jacobian columns and one trial.
    CHECK(r.f_evals == 1 + r.iterations * 21);
  }
}

TEST_CASE("zero initial residual converges with one evaluation") {
  const Problem p = problems::linear("zero", Eigen::Matrix2d::Identity(), Eigen::Vector2d::Zero());
  const Report r = solve_newton_tr(p, TrustRegionConfig<double>{});
  CHECK(r.status == SolverStatus::Converged);
  CHECK(r.f_evals == 1);
  CHECK(r.iterations == 0);
}

TEST_CASE("residual norm decreases across accepted steps") {
  for (const Problem& p : {problems::trigonometric(10), problems::exponential1(10),
                           problems::from_uri("contact:8:mixed:1")}) {
    const Report r = solve_newton_tr(p, TrustRegionConfig<double>{});
    CAPTURE(p.label);
    CHECK(r.status == SolverStatus::Converged);
    for (const auto& rec : r.trace) {
      CHECK(rec.f_norm_next < rec.f_norm);
      CHECK(rec.gamma <= 1 + 1e-12);
      CHECK(rec.condition == AcceptedCondition::TrustRegion);
    }
  }
}

TEST_CASE("dogleg step stays inside the radius") {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> g;
  for (int t = 0; t < 200; ++t) {
    Eigen::MatrixXd j(5, 5);
    Eigen::VectorXd f(5);
    for (int i = 0; i < 25; ++i) j.data()[i] = g(rng);
    for (int i = 0; i < 5; ++i) f[i] = g(rng);
    const double radius = std::pow(10.0, g(rng));
    const auto step = dogleg_step(j, f, radius);
    CHECK(step.step.norm() <= radius + 1e-12);
    CHECK((f + j * step.step).norm() <= f.norm() + 1e-12);
  }
}

TEST_CASE("dogleg takes the Newton step when it fits") {
  Eigen::MatrixXd j(2, 2);
  j << 2, 1, 0, 3;
  const Eigen::VectorXd f = Eigen::Vector2d(1, -1);
  const auto step = dogleg_step(j, f, 10.0);
  CHECK(step.newton);
  CHECK((j * step.step + f).norm() <= 1e-14);
}

TEST_CASE("rank-deficient model falls back to the Cauchy step") {
  Eigen::MatrixXd j(2, 2);
  j << 1, 1, 1, 1;
  const Eigen::VectorXd f = Eigen::Vector2d(1, 2);
  const auto step = dogleg_step(j, f, 100.0);
  CHECK_FALSE(step.newton);
  const Eigen::VectorXd grad = j.transpose() * f;
  CHECK(std::abs(step.step.normalized().dot(-grad.normalized()) - 1) <= 1e-12);
  const double t = grad.squaredNorm() / (j * grad).squaredNorm();
  CHECK((step.step + t * grad).norm() <= 1e-12);
}

TEST_CASE("first step on a linear system is the Newton step to FD accuracy") {
  const Problem p = problems::linear_nonsymmetric(8);
  EvalCounter counter;
  const Eigen::MatrixXd a = evaluate_jacobian(p, p.initial_point, counter);
  const Eigen::VectorXd f0 = evaluate(p, p.initial_point, counter);
  const Eigen::VectorXd exact = -a.lu().solve(f0);
  const Eigen::MatrixXd fd = fd_jacobian(p, p.initial_point, f0, default_fd_step(p.initial_point), counter);
  const auto step = dogleg_step(fd, f0, 1e3);
  CHECK(step.newton);
  CHECK((step.step - exact).norm() <= 1e-6 * exact.norm());
}

TEST_CASE("contact problem with 16 unknowns: converges, Jacobian cost dominates") {
  const Problem p = problems::from_uri("contact:8:mixed:1");
  const Report newton = solve_newton_tr(p, TrustRegionConfig<double>{});
  SolverConfig<double> config;
  config.rule = rules::DABBm;
  const Report srand = solve(p, config);
  REQUIRE(newton.status == SolverStatus::Converged);
  REQUIRE(srand.status == SolverStatus::Converged);
  const double newton_per_iter = double(newton.f_evals) / double(newton.iterations);
  const double srand_per_iter = double(srand.f_evals) / double(srand.iterations);
  CHECK(newton_per_iter >= 16.0);
  CHECK(newton_per_iter >= 16.0 / 10.0 * srand_per_iter);
}

TEST_CASE("budgets and configuration checks") {
  TrustRegionConfig<double> config;
  config.max_iters = 1;
  const Report r = solve_newton_tr(problems::trigonometric(10), config);
  CHECK(r.status == SolverStatus::FailIter);
  CHECK(r.iterations == 1);

  TrustRegionConfig<double> fe;
  fe.max_fevals = 15;
  CHECK(solve_newton_tr(problems::trigonometric(20), fe).status == SolverStatus::FailFevals);

  TrustRegionConfig<double> bad;
  bad.shrink_factor = 1.5;
  CHECK_THROWS_AS(solve_newton_tr(problems::trigonometric(3), bad), std::invalid_argument);
  TrustRegionConfig<double> order;
  order.expand_threshold = 0.1;
  CHECK_THROWS_AS(order.validate(), std::invalid_argument);
}
