#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>

#include <Eigen/Dense>

#include "specres/problem.hpp"
#include "specres/srand.hpp"

namespace specres {

template <typename Scalar>
struct TrustRegionConfig {
  Scalar initial_radius = Scalar(1);
  Scalar max_radius = Scalar(1e10);
  Scalar shrink_threshold = Scalar(0.25);
  Scalar expand_threshold = Scalar(0.75);
  Scalar accept_threshold = Scalar(1e-4);
  Scalar shrink_factor = Scalar(0.25);
  Scalar expand_factor = Scalar(2);
  Scalar tol = Scalar(1e-6);
  std::size_t max_iters = 1000;
  std::size_t max_fevals = 100000;
  Scalar fd_step = Scalar(0);  // 0 selects default_fd_step(x) at each Jacobian

  void validate() const {
    if (!(Scalar(0) < initial_radius && initial_radius <= max_radius))
      throw std::invalid_argument("TrustRegionConfig: need 0 < initial_radius <= max_radius");
    if (!(Scalar(0) < shrink_factor && shrink_factor < Scalar(1) && expand_factor > Scalar(1)))
      throw std::invalid_argument("TrustRegionConfig: need 0 < shrink < 1 < expand");
    if (!(Scalar(0) <= accept_threshold && accept_threshold < shrink_threshold &&
          shrink_threshold < expand_threshold && expand_threshold < Scalar(1)))
      throw std::invalid_argument("TrustRegionConfig: thresholds must be ordered in [0,1)");
    if (!(tol >= Scalar(0))) throw std::invalid_argument("TrustRegionConfig: tol must be >= 0");
    if (fd_step < Scalar(0)) throw std::invalid_argument("TrustRegionConfig: fd_step < 0");
  }
};

template <typename Scalar>
struct DoglegStep {
  VectorX<Scalar> step;
  bool newton = false;  // full Gauss-Newton step taken
};

/// Dogleg minimizer of |f + J s|^2 over |s| <= radius. Falls back to the
/// Cauchy point when J is rank deficient.
template <typename Scalar>
DoglegStep<Scalar> dogleg_step(const MatrixX<Scalar>& jac, const VectorX<Scalar>& f,
                               Scalar radius) {
  using std::sqrt;
  DoglegStep<Scalar> out;
  Eigen::ColPivHouseholderQR<MatrixX<Scalar>> qr(jac);
  const bool full_rank = qr.rank() == jac.cols();
  VectorX<Scalar> newton;
  if (full_rank) {
    newton = -qr.solve(f);
    if (newton.allFinite() && newton.norm() <= radius) {
      out.step = std::move(newton);
      out.newton = true;
      return out;
    }
  }

  const VectorX<Scalar> g = jac.transpose() * f;
  const Scalar g_norm = g.norm();
  if (g_norm == Scalar(0)) {
    out.step = VectorX<Scalar>::Zero(f.size());
    return out;
  }
  const Scalar jg_sq = (jac * g).squaredNorm();
  const Scalar cauchy_scale = jg_sq > Scalar(0) ? g_norm * g_norm / jg_sq
                                                : std::numeric_limits<Scalar>::infinity();
  if (cauchy_scale * g_norm >= radius) {
    out.step = -(radius / g_norm) * g;
    return out;
  }
  const VectorX<Scalar> cauchy = -cauchy_scale * g;
  if (!full_rank || !newton.allFinite()) {
    out.step = cauchy;
    return out;
  }
  // Largest t in [0,1] with |cauchy + t (newton - cauchy)| = radius.
  const VectorX<Scalar> d = newton - cauchy;
  const Scalar a = d.squaredNorm();
  const Scalar b = Scalar(2) * cauchy.dot(d);
  const Scalar c = cauchy.squaredNorm() - radius * radius;
  const Scalar disc = b * b - Scalar(4) * a * c;
  Scalar t = a > Scalar(0) ? (-b + sqrt(disc > Scalar(0) ? disc : Scalar(0))) / (Scalar(2) * a)
                           : Scalar(0);
  if (t < Scalar(0)) t = Scalar(0);
  if (t > Scalar(1)) t = Scalar(1);
  out.step = cauchy + t * d;
  return out;
}

/// Dogleg trust-region method on 1/2 |F|^2 with a forward-difference Jacobian.
///
/// The Jacobian is rebuilt after every accepted step (n residual calls) and
/// reused across rejected trials. Trace rows store the radius in `beta`, the
/// step-to-radius ratio in `gamma` and the number of rejected trials in
/// `backtracks`.
template <typename Scalar>
SolverReport<Scalar> solve_newton_tr(const NonlinearProblem<Scalar>& problem,
                                     const TrustRegionConfig<Scalar>& config) {
  config.validate();
  SolverReport<Scalar> report;
  EvalCounter counter;

  VectorX<Scalar> x = problem.initial_point;
  VectorX<Scalar> f = evaluate(problem, x, counter);
  Scalar f_norm = f.norm();

  auto finish = [&](SolverStatus status) {
    report.status = status;
    report.x = x;
    report.f_norm = f_norm;
    report.f_evals = counter.f_evals;
    report.jac_evals = counter.jac_evals;
    return report;
  };

  if (f_norm <= config.tol) return finish(SolverStatus::Converged);

  const Eigen::Index n = problem.dimension;
  Scalar radius = config.initial_radius;
  for (std::size_t k = 0;; ++k) {
    if (report.iterations >= config.max_iters) return finish(SolverStatus::FailIter);
    if (counter.f_evals + static_cast<std::size_t>(n) > config.max_fevals)
      return finish(SolverStatus::FailFevals);

    const Scalar h = config.fd_step > Scalar(0) ? config.fd_step : default_fd_step(x);
    const MatrixX<Scalar> jac = fd_jacobian(problem, x, f, h, counter);

    std::size_t rejected = 0;
    while (true) {
      const DoglegStep<Scalar> dl = dogleg_step(jac, f, radius);
      const Scalar step_norm = dl.step.norm();
      const Scalar predicted =
          Scalar(0.5) * (f.squaredNorm() - (f + jac * dl.step).squaredNorm());
      if (!(predicted > Scalar(0)) || step_norm == Scalar(0))
        return finish(SolverStatus::FailStagnation);
      if (counter.f_evals >= config.max_fevals) return finish(SolverStatus::FailFevals);

      VectorX<Scalar> x_trial = x + dl.step;
      VectorX<Scalar> f_trial;
      Scalar ratio = -std::numeric_limits<Scalar>::infinity();
      try {
        f_trial = evaluate(problem, x_trial, counter);
        const Scalar actual = Scalar(0.5) * (f.squaredNorm() - f_trial.squaredNorm());
        ratio = actual / predicted;
      } catch (const EvaluationError&) {
      }

      const Scalar radius_used = radius;
      if (ratio < config.shrink_threshold) {
        radius = config.shrink_factor * step_norm;
      } else if (ratio > config.expand_threshold && step_norm >= Scalar(0.99) * radius) {
        radius = config.expand_factor * radius;
        if (radius > config.max_radius) radius = config.max_radius;
      }

      if (ratio > config.accept_threshold) {
        IterationRecord<Scalar> record;
        record.k = k;
        record.beta = radius_used;
        record.gamma = step_norm / radius_used;
        record.sign = +1;
        record.backtracks = rejected;
        record.f_norm = f_norm;
        record.f_norm_next = f_trial.norm();
        record.condition = AcceptedCondition::TrustRegion;
        report.trace.push_back(record);
        ++report.iterations;

        x = std::move(x_trial);
        f = std::move(f_trial);
        f_norm = record.f_norm_next;
        if (f_norm <= config.tol) return finish(SolverStatus::Converged);
        break;
      }

      ++rejected;
      using std::abs;
      const Scalar x_scale = Scalar(1) + x.template lpNorm<Eigen::Infinity>();
      if (radius <= std::numeric_limits<Scalar>::epsilon() * x_scale)
        return finish(SolverStatus::FailStagnation);
    }
  }
}

}  // namespace specres
