#include "specres/srand.hpp"

#include <cstdio>

namespace specres {

std::string_view to_string(SolverStatus status) {
  switch (status) {
    case SolverStatus::Converged: return "Converged";
    case SolverStatus::FailIter: return "FailIter";
    case SolverStatus::FailFevals: return "FailFevals";
    case SolverStatus::FailBacktracks: return "FailBacktracks";
    case SolverStatus::FailStagnation: return "FailStagnation";
    case SolverStatus::Crashed: return "Crashed";
  }
  return "unknown";
}

std::string_view failure_flag(SolverStatus status) {
  switch (status) {
    case SolverStatus::Converged: return "";
    case SolverStatus::FailIter: return "it";
    case SolverStatus::FailFevals: return "fmax";
    case SolverStatus::FailBacktracks: return "sigma";
    case SolverStatus::FailStagnation: return "incr";
    case SolverStatus::Crashed: return "crash";
  }
  return "?";
}

std::string_view to_string(AcceptedCondition condition) {
  switch (condition) {
    case AcceptedCondition::Lin1: return "lin1";
    case AcceptedCondition::Lin2: return "lin2";
    case AcceptedCondition::TrustRegion: return "tr";
  }
  return "unknown";
}

void write_trace_csv(std::ostream& out, const std::vector<IterationRecord<double>>& trace) {
  out << "k,beta,gamma,sign,bt,f_norm,cond\n";
  char buf[256];
  for (const auto& r : trace) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%c,%zu,%.17g,", r.k, r.beta, r.gamma,
                  r.sign < 0 ? '-' : '+', r.backtracks, r.f_norm);
    out << buf << to_string(r.condition) << '\n';
  }
}

}  // namespace specres
