#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "specres/problem.hpp"
#include "specres/srand.hpp"
#include "specres/steplength.hpp"

namespace specres::bench {

enum class SolverKind { Srand, NewtonTR };

struct SolverSpec {
  std::string id;
  SolverKind kind = SolverKind::Srand;
  RuleKind rule = rules::BB1;
};

SolverSpec srand_solver(const RuleKind& rule);
SolverSpec newton_solver();

/// The eight steplength rules, optionally followed by the Newton baseline.
std::vector<SolverSpec> default_solvers(bool include_newton = true);

/// Rule label (case-insensitive) or "newton".
std::optional<SolverSpec> solver_from_name(std::string_view name);

struct RunResult {
  std::string solver;
  std::string problem;
  SolverStatus status = SolverStatus::Crashed;
  std::size_t f_evals = 0;
  std::size_t iterations = 0;
  double wall_ms = 0.0;
  double final_fnorm = 0.0;
  std::string error;  // exception message for Crashed runs
};

/// Runs one solve; exceptions become a Crashed result.
RunResult run_one(const Problem& problem, const SolverSpec& spec);

/// Every (problem, solver) pair, ordered problem-major in input order.
/// Results do not depend on `parallelism`; 0 uses the hardware concurrency.
std::vector<RunResult> run_grid(const std::vector<Problem>& problems,
                                const std::vector<SolverSpec>& solvers,
                                unsigned parallelism = 1);

/// Performance profile on f_evals. Failures cost infinity. A problem that no
/// solver solves has no finite best cost; its ratios are all infinite, so it
/// counts as unsolved for every solver and stays in the denominator.
struct ProfileTable {
  std::vector<std::string> solvers;
  std::vector<std::string> problems;
  Eigen::MatrixXd cost;    // problems x solvers
  Eigen::MatrixXd ratios;  // problems x solvers

  /// Fraction of problems with ratio <= tau for solver column s.
  double rho(std::size_t s, double tau) const;
  /// Sorted finite ratios of solver column s.
  std::vector<double> breakpoints(std::size_t s) const;
  /// Smallest power of two covering every finite ratio, at least 2, capped at 2^10.
  double tau_max() const;
  std::size_t solved(std::size_t s) const;
};

/// Throws std::invalid_argument on empty input or duplicate (solver, problem) cells.
ProfileTable performance_profile(const std::vector<RunResult>& results);

/// "98.3% (2 failures)".
std::string solved_summary(std::size_t solved, std::size_t total);

/// solver,problem,status,f_evals,wall_ms,final_fnorm. wall_ms is left empty
/// unless `timing` is set, so repeated runs give identical bytes.
void write_results_csv(std::ostream& out, const std::vector<RunResult>& results, bool timing);

/// Step curves of rho_s over tau in [1, tau_max] on a log2 axis.
void write_profile_svg(std::ostream& out, const ProfileTable& table);

/// Problems by solvers; each cell is f_evals or the failure flag.
void write_text_table(std::ostream& out, const ProfileTable& table,
                      const std::vector<RunResult>& results);

enum class ReportFormat { Csv, Svg, Text };

/// Writes one artifact; I/O failures throw std::runtime_error naming the path.
void emit_report(const std::filesystem::path& path, ReportFormat format,
                 const std::vector<RunResult>& results, bool timing = false);

}  // namespace specres::bench
