#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <deque>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "specres/problem.hpp"

namespace specres {

// Raw spectral steplengths from the secant pair (p, y) = (x_k - x_{k-1}, F_k - F_{k-1}).

/// p'p / p'y, or nullopt when p'y == 0.
template <typename DerivedP, typename DerivedY>
std::optional<typename DerivedP::Scalar> raw_beta1(const Eigen::MatrixBase<DerivedP>& p,
                                                   const Eigen::MatrixBase<DerivedY>& y) {
  using Scalar = typename DerivedP::Scalar;
  const Scalar py = p.dot(y);
  if (py == Scalar(0)) return std::nullopt;
  return p.squaredNorm() / py;
}

/// p'y / y'y, or nullopt when y == 0.
template <typename DerivedP, typename DerivedY>
std::optional<typename DerivedP::Scalar> raw_beta2(const Eigen::MatrixBase<DerivedP>& p,
                                                   const Eigen::MatrixBase<DerivedY>& y) {
  using Scalar = typename DerivedP::Scalar;
  const Scalar yy = y.squaredNorm();
  if (yy == Scalar(0)) return std::nullopt;
  return p.dot(y) / yy;
}

class ZeroSteplength : public std::domain_error {
public:
  ZeroSteplength() : std::domain_error("threshold: zero steplength carries no sign") {}
};

/// Projects |beta| onto [beta_min, beta_max] and restores the sign of beta.
template <typename Scalar>
Scalar threshold(Scalar beta, Scalar beta_min, Scalar beta_max) {
  if (beta == Scalar(0)) throw ZeroSteplength();
  using std::abs;
  const Scalar magnitude = std::min(beta_max, std::max(beta_min, abs(beta)));
  return beta < Scalar(0) ? -magnitude : magnitude;
}

template <typename Scalar>
bool in_bounds(Scalar beta, Scalar beta_min, Scalar beta_max) {
  using std::abs;
  const Scalar a = abs(beta);
  return beta_min <= a && a <= beta_max;
}

enum class RuleFamily { BB1, BB2, ALT, ABB, ABBm, DABBm };

/// One steplength selection rule with its parameters.
struct RuleKind {
  RuleFamily family = RuleFamily::BB1;
  double tau = 0.0;   // ratio threshold, ABB* and DABBm
  std::size_t m = 0;  // memory of the smallest BB2 value, ABBm* and DABBm
  std::size_t w = 0;  // backtrack window, DABBm
  std::string_view name = "BB1";
};

namespace rules {
inline constexpr RuleKind BB1{RuleFamily::BB1, 0.0, 0, 0, "BB1"};
inline constexpr RuleKind BB2{RuleFamily::BB2, 0.0, 0, 0, "BB2"};
inline constexpr RuleKind ALT{RuleFamily::ALT, 0.0, 0, 0, "ALT"};
inline constexpr RuleKind ABB01{RuleFamily::ABB, 0.1, 0, 0, "ABB01"};
inline constexpr RuleKind ABB08{RuleFamily::ABB, 0.8, 0, 0, "ABB08"};
inline constexpr RuleKind ABBm01{RuleFamily::ABBm, 0.1, 5, 0, "ABBm01"};
inline constexpr RuleKind ABBm08{RuleFamily::ABBm, 0.8, 5, 0, "ABBm08"};
inline constexpr RuleKind DABBm{RuleFamily::DABBm, 0.8, 5, 20, "DABBm"};
}  // namespace rules

inline constexpr std::array<RuleKind, 8> all_rules{rules::BB1,    rules::BB2,    rules::ALT,
                                                   rules::ABB01,  rules::ABB08,  rules::ABBm01,
                                                   rules::ABBm08, rules::DABBm};

/// Case-insensitive lookup of a rule label.
inline std::optional<RuleKind> rule_from_name(std::string_view name) {
  auto lower = [](std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
  };
  const std::string wanted = lower(name);
  for (const RuleKind& rule : all_rules)
    if (lower(rule.name) == wanted) return rule;
  return std::nullopt;
}

inline std::string rule_names() {
  std::string out;
  for (const RuleKind& rule : all_rules) {
    if (!out.empty()) out += ", ";
    out += rule.name;
  }
  return out;
}

/// History feeding the selection of beta_k.
///
/// `k` is the index of the steplength being selected (k >= 1); `p_prev` and
/// `y_prev` belong to the iteration that just completed. The two ring buffers
/// hold at most m+1 thresholded BB2 values and w+1 backtrack counts.
template <typename Scalar>
struct SteplengthState {
  using Vector = VectorX<Scalar>;

  SteplengthState(const RuleKind& rule, Scalar beta_min_, Scalar beta_max_, Scalar beta0)
      : beta_min(beta_min_),
        beta_max(beta_max_),
        previous_beta(beta0),
        beta2_capacity(rule.m + 1),
        backtrack_capacity(rule.w + 1) {
    if (!(Scalar(0) < beta_min && beta_min < beta_max))
      throw std::invalid_argument("steplength bounds must satisfy 0 < beta_min < beta_max");
  }

  Vector p_prev;
  Vector y_prev;
  std::size_t k = 1;
  Scalar beta_min;
  Scalar beta_max;
  Scalar current_f_norm = Scalar(0);
  Scalar previous_beta;
  std::deque<Scalar> tilde_beta2_history;
  std::deque<std::size_t> backtrack_history;
  std::size_t beta2_capacity;
  std::size_t backtrack_capacity;

  /// Records a completed iteration: step, residual change, new ||F||, backtracks used.
  void record_iteration(Vector p, Vector y, Scalar f_norm, std::size_t backtracks) {
    p_prev = std::move(p);
    y_prev = std::move(y);
    current_f_norm = f_norm;
    backtrack_history.push_back(backtracks);
    while (backtrack_history.size() > backtrack_capacity) backtrack_history.pop_front();
  }

  void push_tilde_beta2(Scalar value) {
    tilde_beta2_history.push_back(value);
    while (tilde_beta2_history.size() > beta2_capacity) tilde_beta2_history.pop_front();
  }

  std::size_t max_recent_backtracks() const {
    if (backtrack_history.empty()) return 0;
    return *std::max_element(backtrack_history.begin(), backtrack_history.end());
  }
};

template <typename Scalar>
struct BetaSelection {
  Scalar beta;
  bool fallback_used = false;
};

/// tau_k = min{tau, ||F_k||^(1/(2+bt^2))}.
template <typename Scalar>
Scalar dynamic_threshold(Scalar tau, Scalar f_norm, std::size_t max_backtracks) {
  using std::pow;
  const Scalar bt = static_cast<Scalar>(max_backtracks);
  return std::min(tau, pow(f_norm, Scalar(1) / (Scalar(2) + bt * bt)));
}

namespace detail {

// Shared case table of the adaptive rules: both raw values in range -> ratio
// test on the raw values; exactly one in range -> that one; otherwise ratio
// test on the thresholded values.
template <typename Scalar, typename Choose>
Scalar adaptive_case_table(Scalar b1, Scalar b2, Scalar lo, Scalar hi, Choose choose) {
  const bool in1 = in_bounds(b1, lo, hi);
  const bool in2 = in_bounds(b2, lo, hi);
  if (in1 && in2) return choose(b1, b2);
  if (in1) return b1;
  if (in2) return b2;
  return choose(threshold(b1, lo, hi), threshold(b2, lo, hi));
}

template <typename Scalar>
Scalar in_range_or_threshold(Scalar b, Scalar lo, Scalar hi) {
  return in_bounds(b, lo, hi) ? b : threshold(b, lo, hi);
}

}  // namespace detail

/// Selects beta_k for the given rule and updates the BB2 memory.
///
/// When p'y == 0 neither raw steplength is usable (beta_1 is undefined and
/// beta_2 is zero or undefined); the previous beta is reused and the result
/// is flagged.
template <typename Scalar>
BetaSelection<Scalar> select_beta(const RuleKind& rule, SteplengthState<Scalar>& state) {
  const Scalar lo = state.beta_min;
  const Scalar hi = state.beta_max;
  const std::optional<Scalar> raw1 = raw_beta1(state.p_prev, state.y_prev);
  const std::optional<Scalar> raw2 = raw_beta2(state.p_prev, state.y_prev);

  if (!raw1 || !raw2 || *raw2 == Scalar(0)) {
    return {state.previous_beta, true};
  }
  const Scalar b1 = *raw1;
  const Scalar b2 = *raw2;
  state.push_tilde_beta2(detail::in_range_or_threshold(b2, lo, hi));

  auto smallest_tilde_beta2 = [&state] {
    using std::abs;
    return *std::min_element(state.tilde_beta2_history.begin(), state.tilde_beta2_history.end(),
                             [](Scalar a, Scalar b) { return abs(a) < abs(b); });
  };

  Scalar beta{};
  switch (rule.family) {
    case RuleFamily::BB1:
      beta = detail::in_range_or_threshold(b1, lo, hi);
      break;
    case RuleFamily::BB2:
      beta = detail::in_range_or_threshold(b2, lo, hi);
      break;
    case RuleFamily::ALT: {
      const bool odd = state.k % 2 == 1;
      const Scalar alt = odd ? b1 : b2;
      const bool in1 = in_bounds(b1, lo, hi);
      const bool in2 = in_bounds(b2, lo, hi);
      if (in_bounds(alt, lo, hi))
        beta = alt;
      else if (!odd && in1 && !in2)
        beta = b1;
      else if (odd && in2 && !in1)
        beta = b2;
      else
        beta = threshold(alt, lo, hi);
      break;
    }
    case RuleFamily::ABB: {
      const Scalar tau = static_cast<Scalar>(rule.tau);
      beta = detail::adaptive_case_table(
          b1, b2, lo, hi, [tau](Scalar xi1, Scalar xi2) { return xi2 / xi1 < tau ? xi2 : xi1; });
      break;
    }
    case RuleFamily::ABBm:
    case RuleFamily::DABBm: {
      Scalar tau = static_cast<Scalar>(rule.tau);
      if (rule.family == RuleFamily::DABBm)
        tau = dynamic_threshold(tau, state.current_f_norm, state.max_recent_backtracks());
      beta = detail::adaptive_case_table(b1, b2, lo, hi, [&](Scalar xi1, Scalar xi2) {
        return xi2 / xi1 < tau ? smallest_tilde_beta2() : xi1;
      });
      break;
    }
  }
  return {beta, false};
}

}  // namespace specres
