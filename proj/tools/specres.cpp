#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "specres/bench.hpp"
#include "specres/contact.hpp"
#include "specres/newton_tr.hpp"
#include "specres/spectral_suite.hpp"
#include "specres/srand.hpp"
#include "specres/steplength.hpp"
#include "specres/test_problems.hpp"

namespace fs = std::filesystem;
using namespace specres;

namespace {

constexpr int kUsageError = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SolveOptions {
  std::string rule = "BB1";
  std::string problem;
  std::string solver = "srand";
  double tol = 1e-6;
  std::string trace;
};

struct VerifyOptions {
  std::string suite = "lemmas";
  std::size_t instances = 0;
  std::uint64_t seed = 1;
};

struct GenOptions {
  int elements = 25;
  std::string regime = "mixed";
  std::uint64_t seed = 1;
  std::string out;
};

struct BenchOptions {
  std::string suite = "standard";
  std::string out;
  unsigned parallelism = 1;
  bool timing = false;
  std::uint64_t seed = 1;
  std::vector<std::string> solvers;
};

Problem load_problem(const std::string& handle) {
  try {
    return problems::from_uri(handle);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

int run_solve(const SolveOptions& opt) {
  const Problem problem = load_problem(opt.problem);
  Report report;
  if (opt.solver == "newton") {
    TrustRegionConfig<double> config;
    config.tol = opt.tol;
    report = solve_newton_tr(problem, config);
  } else {
    const auto rule = rule_from_name(opt.rule);
    if (!rule) throw UsageError("unknown rule '" + opt.rule + "'; valid rules: " + rule_names());
    SolverConfig<double> config;
    config.rule = *rule;
    config.tol = opt.tol;
    report = solve(problem, config);
  }

  std::printf("problem     %s\n", problem.label.c_str());
  std::printf("dimension   %lld\n", static_cast<long long>(problem.dimension));
  std::printf("solver      %s\n",
              opt.solver == "newton" ? "newton" : std::string(rule_from_name(opt.rule)->name).c_str());
  std::printf("status      %s\n", std::string(to_string(report.status)).c_str());
  std::printf("iterations  %zu\n", report.iterations);
  std::printf("f_evals     %zu\n", report.f_evals);
  std::printf("final_fnorm %.6e\n", report.f_norm);

  if (!opt.trace.empty()) {
    std::ofstream out(opt.trace, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + opt.trace + "' for writing");
    write_trace_csv(out, report.trace);
    if (!out) throw std::runtime_error("write to '" + opt.trace + "' failed");
  }
  return 0;
}

int run_verify(const VerifyOptions& opt) {
  auto pick = [&](std::size_t fallback) { return opt.instances ? opt.instances : fallback; };
  std::vector<verify::SuiteSummary> summaries;
  const bool all = opt.suite == "lemmas";
  if (all || opt.suite == "lemma1") summaries.push_back(verify::lemma1_suite(pick(1000), opt.seed));
  if (all || opt.suite == "lemma2") summaries.push_back(verify::lemma2_suite(pick(100), opt.seed));
  if (all || opt.suite == "lemma3") summaries.push_back(verify::lemma3_suite(pick(200), opt.seed));
  if (all || opt.suite == "theorem1")
    summaries.push_back(verify::theorem1_suite(pick(100), opt.seed));

  bool ok = true;
  for (const auto& s : summaries) {
    verify::write_summary(std::cout, s);
    ok = ok && s.passed();
  }
  return ok ? 0 : 1;
}

int run_gen(const GenOptions& opt) {
  const auto regime = contact::regime_from_string(opt.regime);
  if (!regime) throw UsageError("unknown regime '" + opt.regime + "'");
  const auto cp = contact::build_contact_problem(opt.elements, *regime, opt.seed);
  std::ofstream out(opt.out, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + opt.out + "' for writing");
  contact::write_contact_problem(out, cp);
  if (!out) throw std::runtime_error("write to '" + opt.out + "' failed");
  std::printf("wrote %s (%d elements, %s, seed %llu)\n", opt.out.c_str(), opt.elements,
              std::string(contact::to_string(*regime)).c_str(),
              static_cast<unsigned long long>(opt.seed));
  return 0;
}

int run_bench(const BenchOptions& opt) {
  std::vector<Problem> suite;
  if (opt.suite == "standard") {
    suite = problems::standard_suite(opt.seed);
  } else if (opt.suite == "contact") {
    suite = problems::contact_suite(opt.seed);
  } else {
    throw UsageError("unknown suite '" + opt.suite + "'");
  }

  std::vector<bench::SolverSpec> solvers;
  if (opt.solvers.empty()) {
    solvers = bench::default_solvers();
  } else {
    for (const auto& name : opt.solvers) {
      const auto spec = bench::solver_from_name(name);
      if (!spec)
        throw UsageError("unknown solver '" + name + "'; valid: " + rule_names() + ", newton");
      solvers.push_back(*spec);
    }
  }

  const fs::path dir(opt.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create '" + dir.string() + "': " + ec.message());

  const auto results = bench::run_grid(suite, solvers, opt.parallelism);
  bench::emit_report(dir / "results.csv", bench::ReportFormat::Csv, results, opt.timing);
  bench::emit_report(dir / "profile.svg", bench::ReportFormat::Svg, results);
  bench::emit_report(dir / "table.txt", bench::ReportFormat::Text, results);

  std::size_t crashed = 0;
  for (const auto& r : results) {
    if (r.status != SolverStatus::Crashed) continue;
    ++crashed;
    std::fprintf(stderr, "crashed: %s on %s: %s\n", r.solver.c_str(), r.problem.c_str(),
                 r.error.c_str());
  }
  const auto table = bench::performance_profile(results);
  for (std::size_t s = 0; s < table.solvers.size(); ++s)
    std::printf("%-8s solved %s\n", table.solvers[s].c_str(),
                bench::solved_summary(table.solved(s), table.problems.size()).c_str());
  std::printf("wrote %s, %s, %s\n", (dir / "results.csv").string().c_str(),
              (dir / "profile.svg").string().c_str(), (dir / "table.txt").string().c_str());
  return crashed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral residual solver for nonlinear systems"};
  app.require_subcommand(1);

  SolveOptions solve_opt;
  auto* solve_cmd = app.add_subcommand("solve", "Run one solve and print the report");
  const CLI::Validator known_rule(
      [](std::string& name) {
        return rule_from_name(name) ? std::string()
                                    : "unknown rule '" + name + "'; valid rules: " + rule_names();
      },
      "RULE");
  solve_cmd->add_option("--rule", solve_opt.rule, "Steplength rule: " + rule_names())
      ->check(known_rule)
      ->capture_default_str();
  solve_cmd->add_option("--problem", solve_opt.problem, "Problem handle or serialized file")
      ->required();
  solve_cmd->add_option("--solver", solve_opt.solver, "srand or newton")
      ->check(CLI::IsMember({"srand", "newton"}))
      ->capture_default_str();
  solve_cmd->add_option("--tol", solve_opt.tol, "Stopping tolerance on ||F||")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  solve_cmd->add_option("--trace", solve_opt.trace, "Write the iteration trace as CSV");

  VerifyOptions verify_opt;
  auto* verify_cmd = app.add_subcommand("verify", "Run the randomized spectral checks");
  verify_cmd->add_option("--suite", verify_opt.suite, "lemma1, lemma2, lemma3, theorem1 or lemmas")
      ->check(CLI::IsMember({"lemma1", "lemma2", "lemma3", "theorem1", "lemmas"}))
      ->capture_default_str();
  verify_cmd->add_option("--instances", verify_opt.instances,
                         "Instances per suite (per case for lemma2); 0 uses the defaults");
  verify_cmd->add_option("--seed", verify_opt.seed, "Random seed")
      ->envname("SPECRES_SEED")
      ->capture_default_str();

  GenOptions gen_opt;
  auto* gen_cmd = app.add_subcommand("gen", "Write a serialized contact problem");
  gen_cmd->add_option("--elements", gen_opt.elements, "Number of contact elements")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  gen_cmd->add_option("--regime", gen_opt.regime, "adhesion-heavy, mixed or slip-heavy")
      ->capture_default_str();
  gen_cmd->add_option("--seed", gen_opt.seed, "Random seed")
      ->envname("SPECRES_SEED")
      ->capture_default_str();
  gen_cmd->add_option("--out", gen_opt.out, "Output file")->required();

  BenchOptions bench_opt;
  auto* bench_cmd = app.add_subcommand("bench", "Run a solver grid and write CSV, SVG and text");
  bench_cmd->add_option("--suite", bench_opt.suite, "standard or contact")->capture_default_str();
  bench_cmd->add_option("--out", bench_opt.out, "Output directory")->required();
  bench_cmd->add_option("--parallelism", bench_opt.parallelism, "Worker threads; 0 uses all cores")
      ->capture_default_str();
  bench_cmd->add_option("--solvers", bench_opt.solvers,
                        "Subset of solvers (rule labels or newton); default all");
  bench_cmd->add_flag("--timing", bench_opt.timing, "Record wall time in the CSV");
  bench_cmd->add_option("--seed", bench_opt.seed, "Seed for the generated problems")
      ->envname("SPECRES_SEED")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }

  try {
    if (solve_cmd->parsed()) return run_solve(solve_opt);
    if (verify_cmd->parsed()) return run_verify(verify_opt);
    if (gen_cmd->parsed()) return run_gen(gen_opt);
    if (bench_cmd->parsed()) return run_bench(bench_opt);
  } catch (const UsageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsageError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return kUsageError;
}
