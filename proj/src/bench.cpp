#include "specres/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "specres/newton_tr.hpp"

namespace specres::bench {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string format_g(const char* fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

}  // namespace

SolverSpec srand_solver(const RuleKind& rule) {
  return {std::string(rule.name), SolverKind::Srand, rule};
}

SolverSpec newton_solver() { return {"newton", SolverKind::NewtonTR, rules::BB1}; }

std::vector<SolverSpec> default_solvers(bool include_newton) {
  std::vector<SolverSpec> out;
  for (const auto& rule : all_rules) out.push_back(srand_solver(rule));
  if (include_newton) out.push_back(newton_solver());
  return out;
}

std::optional<SolverSpec> solver_from_name(std::string_view name) {
  std::string lower(name);
  for (char& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (lower == "newton") return newton_solver();
  if (auto rule = rule_from_name(name)) return srand_solver(*rule);
  return std::nullopt;
}

RunResult run_one(const Problem& problem, const SolverSpec& spec) {
  RunResult r;
  r.solver = spec.id;
  r.problem = problem.label;
  const auto start = std::chrono::steady_clock::now();
  try {
    Report report;
    if (spec.kind == SolverKind::Srand) {
      SolverConfig<double> config;
      config.rule = spec.rule;
      report = solve(problem, config);
    } else {
      report = solve_newton_tr(problem, TrustRegionConfig<double>{});
    }
    r.status = report.status;
    r.f_evals = report.f_evals;
    r.iterations = report.iterations;
    r.final_fnorm = report.f_norm;
  } catch (const std::exception& e) {
    r.status = SolverStatus::Crashed;
    r.final_fnorm = std::numeric_limits<double>::quiet_NaN();
    r.error = e.what();
  }
  r.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return r;
}

std::vector<RunResult> run_grid(const std::vector<Problem>& problems,
                                const std::vector<SolverSpec>& solvers, unsigned parallelism) {
  if (problems.empty() || solvers.empty())
    throw std::invalid_argument("run_grid: need at least one problem and one solver");
  const std::size_t cells = problems.size() * solvers.size();
  std::vector<RunResult> results(cells);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cells; i = next++)
      results[i] = run_one(problems[i / solvers.size()], solvers[i % solvers.size()]);
  };

  if (parallelism == 0) parallelism = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t threads = std::min<std::size_t>(parallelism, cells);
  if (threads <= 1) {
    worker();
    return results;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  return results;
}

double ProfileTable::rho(std::size_t s, double tau) const {
  if (problems.empty()) return 0.0;
  std::size_t count = 0;
  for (Eigen::Index p = 0; p < ratios.rows(); ++p)
    if (ratios(p, static_cast<Eigen::Index>(s)) <= tau) ++count;
  return static_cast<double>(count) / static_cast<double>(problems.size());
}

std::vector<double> ProfileTable::breakpoints(std::size_t s) const {
  std::vector<double> out;
  for (Eigen::Index p = 0; p < ratios.rows(); ++p) {
    const double r = ratios(p, static_cast<Eigen::Index>(s));
    if (std::isfinite(r)) out.push_back(r);
  }
  std::sort(out.begin(), out.end());
  return out;
}

double ProfileTable::tau_max() const {
  double worst = 1.0;
  for (Eigen::Index i = 0; i < ratios.size(); ++i)
    if (std::isfinite(ratios.data()[i])) worst = std::max(worst, ratios.data()[i]);
  double tau = 2.0;
  while (tau < worst && tau < 1024.0) tau *= 2.0;
  return tau;
}

std::size_t ProfileTable::solved(std::size_t s) const {
  std::size_t count = 0;
  for (Eigen::Index p = 0; p < cost.rows(); ++p)
    if (std::isfinite(cost(p, static_cast<Eigen::Index>(s)))) ++count;
  return count;
}

ProfileTable performance_profile(const std::vector<RunResult>& results) {
  if (results.empty()) throw std::invalid_argument("performance_profile: no results");
  ProfileTable table;
  std::map<std::string, std::size_t> solver_index;
  std::map<std::string, std::size_t> problem_index;
  for (const auto& r : results) {
    if (solver_index.emplace(r.solver, table.solvers.size()).second)
      table.solvers.push_back(r.solver);
    if (problem_index.emplace(r.problem, table.problems.size()).second)
      table.problems.push_back(r.problem);
  }
  const auto np = static_cast<Eigen::Index>(table.problems.size());
  const auto ns = static_cast<Eigen::Index>(table.solvers.size());
  table.cost = Eigen::MatrixXd::Constant(np, ns, kInf);
  Eigen::MatrixXi seen = Eigen::MatrixXi::Zero(np, ns);
  for (const auto& r : results) {
    const auto p = static_cast<Eigen::Index>(problem_index[r.problem]);
    const auto s = static_cast<Eigen::Index>(solver_index[r.solver]);
    if (seen(p, s)++)
      throw std::invalid_argument("performance_profile: duplicate result for " + r.solver +
                                  " on " + r.problem);
    if (r.status == SolverStatus::Converged) table.cost(p, s) = static_cast<double>(r.f_evals);
  }
  table.ratios = Eigen::MatrixXd::Constant(np, ns, kInf);
  for (Eigen::Index p = 0; p < np; ++p) {
    const double best = table.cost.row(p).minCoeff();
    if (!std::isfinite(best)) continue;
    for (Eigen::Index s = 0; s < ns; ++s)
      if (std::isfinite(table.cost(p, s))) table.ratios(p, s) = table.cost(p, s) / best;
  }
  return table;
}

std::string solved_summary(std::size_t solved, std::size_t total) {
  const double pct = total == 0 ? 0.0 : 100.0 * static_cast<double>(solved) / total;
  const std::size_t failures = total - solved;
  return format_g("%.1f%%", pct) + " (" + std::to_string(failures) +
         (failures == 1 ? " failure)" : " failures)");
}

void write_results_csv(std::ostream& out, const std::vector<RunResult>& results, bool timing) {
  out << "solver,problem,status,f_evals,wall_ms,final_fnorm\n";
  for (const auto& r : results) {
    out << r.solver << ',' << r.problem << ',' << to_string(r.status) << ',' << r.f_evals << ','
        << (timing ? format_g("%.3f", r.wall_ms) : std::string()) << ','
        << format_g("%.6e", r.final_fnorm) << '\n';
  }
}

namespace {

constexpr double kWidth = 720, kHeight = 440;
constexpr double kLeft = 60, kRight = 170, kTop = 20, kBottom = 50;
constexpr const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

void write_profile_svg(std::ostream& out, const ProfileTable& table) {
  const double tau_max = table.tau_max();
  const double log_max = std::log2(tau_max);
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  auto px = [&](double tau) { return kLeft + plot_w * std::log2(tau) / log_max; };
  auto py = [&](double rho) { return kTop + plot_h * (1.0 - rho); };
  auto fmt = [](double v) { return format_g("%.2f", v); };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<g stroke=\"#dddddd\" stroke-width=\"1\">\n";
  for (int e = 0; e <= static_cast<int>(log_max); ++e) {
    const double x = px(std::ldexp(1.0, e));
    out << "<line x1=\"" << fmt(x) << "\" y1=\"" << fmt(py(0)) << "\" x2=\"" << fmt(x)
        << "\" y2=\"" << fmt(py(1)) << "\"/>\n";
  }
  for (int i = 0; i <= 10; ++i) {
    const double y = py(i / 10.0);
    out << "<line x1=\"" << fmt(px(1)) << "\" y1=\"" << fmt(y) << "\" x2=\"" << fmt(px(tau_max))
        << "\" y2=\"" << fmt(y) << "\"/>\n";
  }
  out << "</g>\n";
  out << "<g font-family=\"sans-serif\" font-size=\"12\" fill=\"black\">\n";
  for (int e = 0; e <= static_cast<int>(log_max); ++e)
    out << "<text x=\"" << fmt(px(std::ldexp(1.0, e))) << "\" y=\"" << fmt(py(0) + 16)
        << "\" text-anchor=\"middle\">" << e << "</text>\n";
  for (int i = 0; i <= 10; i += 2)
    out << "<text x=\"" << fmt(kLeft - 6) << "\" y=\"" << fmt(py(i / 10.0) + 4)
        << "\" text-anchor=\"end\">" << format_g("%.1f", i / 10.0) << "</text>\n";
  out << "<text x=\"" << fmt(kLeft + plot_w / 2) << "\" y=\"" << fmt(kHeight - 10)
      << "\" text-anchor=\"middle\">log2(tau)</text>\n";
  out << "<text x=\"14\" y=\"" << fmt(kTop + plot_h / 2) << "\" text-anchor=\"middle\" "
      << "transform=\"rotate(-90 14 " << fmt(kTop + plot_h / 2) << ")\">rho(tau)</text>\n";
  out << "</g>\n";

  for (std::size_t s = 0; s < table.solvers.size(); ++s) {
    const char* color = kPalette[s % std::size(kPalette)];
    std::vector<std::pair<double, double>> vertices;
    double level = table.rho(s, 1.0);
    vertices.emplace_back(1.0, level);
    for (double r : table.breakpoints(s)) {
      if (r <= 1.0) continue;
      if (r > tau_max) break;
      const double next = table.rho(s, r);
      if (next == level) continue;
      vertices.emplace_back(r, level);
      vertices.emplace_back(r, next);
      level = next;
    }
    if (vertices.back().first < tau_max) vertices.emplace_back(tau_max, level);

    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" "
        << "data-solver=\"" << xml_escape(table.solvers[s]) << "\" points=\"";
    for (std::size_t i = 0; i < vertices.size(); ++i)
      out << (i ? " " : "") << fmt(px(vertices[i].first)) << ',' << fmt(py(vertices[i].second));
    out << "\"/>\n";
    const double ly = kTop + 16.0 * static_cast<double>(s) + 8;
    out << "<line x1=\"" << fmt(kWidth - kRight + 12) << "\" y1=\"" << fmt(ly) << "\" x2=\""
        << fmt(kWidth - kRight + 36) << "\" y2=\"" << fmt(ly) << "\" stroke=\"" << color
        << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << fmt(kWidth - kRight + 42) << "\" y=\"" << fmt(ly + 4)
        << "\" font-family=\"sans-serif\" font-size=\"12\">" << xml_escape(table.solvers[s])
        << "</text>\n";
  }
  out << "</svg>\n";
}

void write_text_table(std::ostream& out, const ProfileTable& table,
                      const std::vector<RunResult>& results) {
  std::map<std::pair<std::string, std::string>, const RunResult*> cell;
  for (const auto& r : results) cell[{r.problem, r.solver}] = &r;

  std::size_t name_width = 7;
  for (const auto& p : table.problems) name_width = std::max(name_width, p.size());
  std::size_t col_width = 7;
  for (const auto& s : table.solvers) col_width = std::max(col_width, s.size());

  out << std::left << std::setw(static_cast<int>(name_width)) << "problem";
  for (const auto& s : table.solvers) out << "  " << std::right << std::setw(static_cast<int>(col_width)) << s;
  out << '\n';
  for (const auto& p : table.problems) {
    out << std::left << std::setw(static_cast<int>(name_width)) << p;
    for (const auto& s : table.solvers) {
      std::string text = "-";
      if (auto it = cell.find({p, s}); it != cell.end()) {
        const RunResult& r = *it->second;
        text = r.status == SolverStatus::Converged ? std::to_string(r.f_evals)
                                                   : std::string(failure_flag(r.status));
      }
      out << "  " << std::right << std::setw(static_cast<int>(col_width)) << text;
    }
    out << '\n';
  }
  out << '\n';
  for (std::size_t s = 0; s < table.solvers.size(); ++s)
    out << std::left << std::setw(static_cast<int>(col_width)) << table.solvers[s]
        << "  solved " << solved_summary(table.solved(s), table.problems.size()) << '\n';
  out << "flags: it = iteration limit, fmax = evaluation limit, sigma = backtracking "
         "exhausted, incr = residual not reduced, crash = exception\n";
}

void emit_report(const std::filesystem::path& path, ReportFormat format,
                 const std::vector<RunResult>& results, bool timing) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  switch (format) {
    case ReportFormat::Csv: write_results_csv(out, results, timing); break;
    case ReportFormat::Svg: write_profile_svg(out, performance_profile(results)); break;
    case ReportFormat::Text: {
      const ProfileTable table = performance_profile(results);
      write_text_table(out, table, results);
      break;
    }
  }
  out.flush();
  if (!out) throw std::runtime_error("write to '" + path.string() + "' failed");
}

}  // namespace specres::bench
