#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "specres/problem.hpp"
#include "specres/steplength.hpp"

namespace specres {

enum class SolverStatus {
  Converged,
  FailIter,
  FailFevals,
  FailBacktracks,
  FailStagnation,
  Crashed,  // set only by the benchmark harness when a run throws
};

std::string_view to_string(SolverStatus status);

/// Failure flag used in benchmark tables: it, fmax, sigma, incr.
std::string_view failure_flag(SolverStatus status);

enum class AcceptedCondition { Lin1, Lin2, TrustRegion };

std::string_view to_string(AcceptedCondition condition);

template <typename Scalar>
struct SolverConfig {
  using Eta = std::function<Scalar(std::size_t k, Scalar f0_norm)>;

  Scalar beta_min = Scalar(1e-10);
  Scalar beta_max = Scalar(1e10);
  Scalar rho = Scalar(1e-4);
  Scalar sigma = Scalar(0.5);
  // eta_k = 0.99^k (100 + ||F_0||^2), summable.
  Eta eta = [](std::size_t k, Scalar f0_norm) {
    using std::pow;
    return pow(Scalar(0.99), static_cast<Scalar>(k)) * (Scalar(100) + f0_norm * f0_norm);
  };
  std::size_t max_iters = 100000;
  std::size_t max_fevals = 100000;
  std::size_t max_backtracks = 40;
  std::size_t stagnation_window = 50;
  Scalar tol = Scalar(1e-6);
  RuleKind rule = rules::BB1;
  Scalar beta0 = Scalar(1);

  void validate() const {
    if (!(Scalar(0) < beta_min && beta_min < beta_max))
      throw std::invalid_argument("SolverConfig: need 0 < beta_min < beta_max");
    if (!(Scalar(0) < rho && rho < Scalar(1)))
      throw std::invalid_argument("SolverConfig: rho must lie in (0,1)");
    if (!(Scalar(0) < sigma && sigma < Scalar(1)))
      throw std::invalid_argument("SolverConfig: sigma must lie in (0,1)");
    if (!(tol >= Scalar(0))) throw std::invalid_argument("SolverConfig: tol must be >= 0");
    if (!eta) throw std::invalid_argument("SolverConfig: eta sequence missing");
  }
};

template <typename Scalar>
struct IterationRecord {
  std::size_t k = 0;
  Scalar beta{};
  Scalar gamma{};
  int sign = -1;  // -1 for p_-, +1 for p_+
  std::size_t backtracks = 0;
  Scalar f_norm{};       // ||F_k||
  Scalar f_norm_next{};  // ||F_{k+1}||
  Scalar eta{};
  AcceptedCondition condition = AcceptedCondition::Lin1;
  bool fallback_beta = false;  // beta came from the undefined-steplength fallback
};

template <typename Scalar>
struct SolverReport {
  SolverStatus status = SolverStatus::FailIter;
  VectorX<Scalar> x;
  Scalar f_norm{};
  std::size_t f_evals = 0;
  std::size_t jac_evals = 0;
  std::size_t iterations = 0;
  std::vector<IterationRecord<Scalar>> trace;
};

using Report = SolverReport<double>;

/// ||F(x_k + p)|| <= (1 - rho (1 + gamma)) ||F_k||.
template <typename Scalar>
bool check_lin1(Scalar f_trial, Scalar f_curr, Scalar gamma, Scalar rho) {
  return f_trial <= (Scalar(1) - rho * (Scalar(1) + gamma)) * f_curr;
}

/// ||F(x_k + p)|| <= (1 + eta_k - rho gamma) ||F_k||.
template <typename Scalar>
bool check_lin2(Scalar f_trial, Scalar f_curr, Scalar gamma, Scalar rho, Scalar eta_k) {
  return f_trial <= (Scalar(1) + eta_k - rho * gamma) * f_curr;
}

enum class LinesearchOutcome { Accepted, BacktracksExhausted, FevalsExhausted };

template <typename Scalar>
struct LinesearchResult {
  LinesearchOutcome outcome = LinesearchOutcome::BacktracksExhausted;
  VectorX<Scalar> step;
  VectorX<Scalar> f_next;
  Scalar f_next_norm{};
  Scalar gamma{};
  int sign = -1;
  std::size_t backtracks = 0;
  AcceptedCondition condition = AcceptedCondition::Lin1;
};

/// Double-direction backtracking along -+ beta F_k.
///
/// At each gamma the cascade is: p_- against lin1, p_+ against lin1, p_-
/// against lin2, p_+ against lin2, then gamma <- sigma gamma. F(x_k + p_+) is
/// evaluated only when p_- fails lin1, and both trial residuals are reused by
/// the lin2 tests.
template <typename Scalar>
LinesearchResult<Scalar> linesearch(const NonlinearProblem<Scalar>& problem,
                                    const VectorX<Scalar>& x_k, const VectorX<Scalar>& f_k,
                                    Scalar beta_k, Scalar eta_k, const SolverConfig<Scalar>& config,
                                    EvalCounter& counter) {
  const Scalar f_norm = f_k.norm();
  if (!(f_norm > Scalar(0))) throw std::invalid_argument("linesearch: ||F_k|| must be positive");
  if (beta_k == Scalar(0)) throw std::invalid_argument("linesearch: beta_k must be nonzero");

  LinesearchResult<Scalar> result;
  Scalar gamma(1);
  for (std::size_t bt = 0;; ++bt) {
    auto accept = [&](VectorX<Scalar> step, VectorX<Scalar> f_next, Scalar f_next_norm, int sign,
                      AcceptedCondition condition) {
      result.outcome = LinesearchOutcome::Accepted;
      result.step = std::move(step);
      result.f_next = std::move(f_next);
      result.f_next_norm = f_next_norm;
      result.gamma = gamma;
      result.sign = sign;
      result.backtracks = bt;
      result.condition = condition;
      return result;
    };

    const Scalar scale = gamma * beta_k;

    if (counter.f_evals >= config.max_fevals) {
      result.outcome = LinesearchOutcome::FevalsExhausted;
      result.backtracks = bt;
      return result;
    }
    VectorX<Scalar> step_minus = (-scale) * f_k;
    VectorX<Scalar> f_minus = evaluate(problem, VectorX<Scalar>(x_k + step_minus), counter);
    const Scalar n_minus = f_minus.norm();
    if (check_lin1(n_minus, f_norm, gamma, config.rho))
      return accept(std::move(step_minus), std::move(f_minus), n_minus, -1,
                    AcceptedCondition::Lin1);

    if (counter.f_evals >= config.max_fevals) {
      result.outcome = LinesearchOutcome::FevalsExhausted;
      result.backtracks = bt;
      return result;
    }
    VectorX<Scalar> step_plus = scale * f_k;
    VectorX<Scalar> f_plus = evaluate(problem, VectorX<Scalar>(x_k + step_plus), counter);
    const Scalar n_plus = f_plus.norm();
    if (check_lin1(n_plus, f_norm, gamma, config.rho))
      return accept(std::move(step_plus), std::move(f_plus), n_plus, +1, AcceptedCondition::Lin1);

    if (check_lin2(n_minus, f_norm, gamma, config.rho, eta_k))
      return accept(std::move(step_minus), std::move(f_minus), n_minus, -1,
                    AcceptedCondition::Lin2);
    if (check_lin2(n_plus, f_norm, gamma, config.rho, eta_k))
      return accept(std::move(step_plus), std::move(f_plus), n_plus, +1, AcceptedCondition::Lin2);

    if (bt == config.max_backtracks) {
      result.outcome = LinesearchOutcome::BacktracksExhausted;
      result.backtracks = bt;
      return result;
    }
    gamma *= config.sigma;
  }
}

/// Spectral residual approximate norm descent iteration.
template <typename Scalar>
SolverReport<Scalar> solve(const NonlinearProblem<Scalar>& problem,
                           const SolverConfig<Scalar>& config) {
  config.validate();
  SolverReport<Scalar> report;
  EvalCounter counter;

  VectorX<Scalar> x = problem.initial_point;
  VectorX<Scalar> f = evaluate(problem, x, counter);
  Scalar f_norm = f.norm();
  const Scalar f0_norm = f_norm;

  auto finish = [&](SolverStatus status) {
    report.status = status;
    report.x = x;
    report.f_norm = f_norm;
    report.f_evals = counter.f_evals;
    report.jac_evals = counter.jac_evals;
    return report;
  };

  if (f_norm <= config.tol) return finish(SolverStatus::Converged);

  Scalar beta = threshold(config.beta0, config.beta_min, config.beta_max);
  bool beta_from_fallback = false;
  SteplengthState<Scalar> state(config.rule, config.beta_min, config.beta_max, beta);
  Scalar best_norm = f_norm;
  std::size_t without_improvement = 0;

  for (std::size_t k = 0;; ++k) {
    if (report.iterations >= config.max_iters) return finish(SolverStatus::FailIter);

    const Scalar eta_k = config.eta(k, f0_norm);
    LinesearchResult<Scalar> ls = linesearch(problem, x, f, beta, eta_k, config, counter);
    if (ls.outcome == LinesearchOutcome::FevalsExhausted) return finish(SolverStatus::FailFevals);
    if (ls.outcome == LinesearchOutcome::BacktracksExhausted)
      return finish(SolverStatus::FailBacktracks);

    IterationRecord<Scalar> record;
    record.k = k;
    record.beta = beta;
    record.gamma = ls.gamma;
    record.sign = ls.sign;
    record.backtracks = ls.backtracks;
    record.f_norm = f_norm;
    record.f_norm_next = ls.f_next_norm;
    record.eta = eta_k;
    record.condition = ls.condition;
    record.fallback_beta = beta_from_fallback;
    report.trace.push_back(record);
    ++report.iterations;

    x += ls.step;
    VectorX<Scalar> y = ls.f_next - f;
    f = std::move(ls.f_next);
    f_norm = ls.f_next_norm;

    if (f_norm <= config.tol) return finish(SolverStatus::Converged);

    if (f_norm < best_norm) {
      best_norm = f_norm;
      without_improvement = 0;
    } else if (++without_improvement >= config.stagnation_window) {
      return finish(SolverStatus::FailStagnation);
    }

    state.k = k + 1;
    state.previous_beta = beta;
    state.record_iteration(std::move(ls.step), std::move(y), f_norm, ls.backtracks);
    const BetaSelection<Scalar> next = select_beta(config.rule, state);
    beta = next.beta;
    beta_from_fallback = next.fallback_used;
  }
}

/// Writes the trace as CSV: k,beta,gamma,sign,bt,f_norm,cond.
void write_trace_csv(std::ostream& out, const std::vector<IterationRecord<double>>& trace);

}  // namespace specres
