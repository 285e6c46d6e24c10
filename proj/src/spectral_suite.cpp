#include "specres/spectral_suite.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>

#include "specres/spectral_verify.hpp"
#include "specres/test_problems.hpp"

namespace specres::verify {

namespace {

constexpr std::size_t kMaxRecordedFailures = 20;

using Rng = std::mt19937_64;

Eigen::VectorXd gaussian_vector(Eigen::Index n, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = normal(rng);
  return v;
}

Eigen::MatrixXd gaussian_matrix(Eigen::Index n, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i) m(i, j) = normal(rng);
  return m;
}

Eigen::MatrixXd orthogonal(Eigen::Index n, Rng& rng) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(gaussian_matrix(n, rng));
  return qr.householderQ();
}

Eigen::MatrixXd with_spectrum(const Eigen::VectorXd& lambda, Rng& rng) {
  const Eigen::MatrixXd q = orthogonal(lambda.size(), rng);
  const Eigen::MatrixXd a = q * lambda.asDiagonal() * q.transpose();
  return (a + a.transpose()) / 2.0;
}

Eigen::MatrixXd skew(Eigen::Index n, double scale, Rng& rng) {
  const Eigen::MatrixXd r = gaussian_matrix(n, rng);
  return scale / std::sqrt(static_cast<double>(n)) * (r - r.transpose()) / 2.0;
}

Eigen::Index random_dimension(Rng& rng) {
  return std::uniform_int_distribution<Eigen::Index>(2, 10)(rng);
}

// Eigenvalues with magnitudes log-uniform in [lo, hi]; `negatives` of them flipped.
Eigen::VectorXd random_spectrum(Eigen::Index n, double lo, double hi, Eigen::Index negatives,
                                Rng& rng) {
  std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
  Eigen::VectorXd lambda(n);
  for (Eigen::Index i = 0; i < n; ++i) lambda[i] = std::exp(u(rng)) * (i < negatives ? -1.0 : 1.0);
  return lambda;
}

AverageMatrices<double> exact_average(const Eigen::MatrixXd& a, const Eigen::VectorXd& x,
                                      const Eigen::VectorXd& p) {
  AverageMatrices<double> m;
  m.G = a;
  m.G_sym = (a + a.transpose()) / 2.0;
  m.quadrature_nodes = 0;
  m.x = x;
  m.p = p;
  return m;
}

void absorb(SuiteSummary& summary, const VerificationReport<double>& report,
            const std::string& context) {
  summary.checks += report.checks.size();
  for (const auto& c : report.checks) {
    if (c.pass) continue;
    ++summary.violations;
    std::ostringstream line;
    line << std::setprecision(17) << context << ' ' << c.name << ' ' << c.lhs << ' ' << c.rhs
         << ' ' << c.slack << " FAIL";
    summary.add_failure(line.str());
  }
}

void record(SuiteSummary& summary, bool ok, const std::string& what) {
  ++summary.checks;
  if (ok) return;
  ++summary.violations;
  summary.add_failure(what + " FAIL");
}

std::string context_label(const char* kind, std::size_t instance) {
  return std::string(kind) + "#" + std::to_string(instance);
}

}  // namespace

void SuiteSummary::add_failure(std::string line) {
  if (failures.size() < kMaxRecordedFailures) failures.push_back(std::move(line));
}

SuiteSummary lemma1_suite(std::size_t instances, std::uint64_t seed, double rel_tol) {
  SuiteSummary summary;
  summary.name = "lemma1";
  Rng rng(seed);
  std::bernoulli_distribution correlated(0.5);
  while (summary.instances < instances) {
    const Eigen::Index n = random_dimension(rng);
    const Eigen::VectorXd p = gaussian_vector(n, rng);
    // Half of the pairs come from y = A p for a random matrix, half are unrelated.
    const Eigen::VectorXd y = correlated(rng) ? Eigen::VectorXd(gaussian_matrix(n, rng) * p)
                                              : gaussian_vector(n, rng);
    if (p.dot(y) == 0.0) {
      ++summary.skipped;
      continue;
    }
    const std::string ctx = context_label("pair", summary.instances);
    absorb(summary, check_secant_pair<double>(p, y, rel_tol), ctx);
    ++summary.instances;
  }
  return summary;
}

SuiteSummary lemma2_suite(std::size_t per_case, std::uint64_t seed, double tol) {
  SuiteSummary summary;
  summary.name = "lemma2";
  Rng rng(seed);
  std::bernoulli_distribution coin(0.5);
  for (const char* expected : {"i", "ii", "iii"}) {
    for (std::size_t done = 0; done < per_case;) {
      const Eigen::Index n = random_dimension(rng);
      Eigen::MatrixXd a;
      const std::string want = expected;
      if (want == "i") {
        a = with_spectrum(random_spectrum(n, 1e-2, 10.0, 0, rng), rng);
      } else if (want == "ii") {
        a = with_spectrum(random_spectrum(n, 1e-1, 10.0, 0, rng), rng) + skew(n, 2.0, rng);
      } else {
        const Eigen::Index negatives = std::uniform_int_distribution<Eigen::Index>(1, n - 1)(rng);
        a = with_spectrum(random_spectrum(n, 1e-1, 10.0, negatives, rng), rng);
        if (coin(rng)) a += skew(n, 0.5, rng);
      }
      const Eigen::VectorXd x = gaussian_vector(n, rng);
      const Eigen::VectorXd p = gaussian_vector(n, rng);
      const auto m = exact_average(a, x, p);
      const auto report = check_lemma2_bounds<double>(m, p, tol);
      if (report.assumption1_failed) {
        ++summary.skipped;
        continue;
      }
      const std::string ctx = context_label(expected, done);
      record(summary, report.case_label == want,
             ctx + " case_detected=" + report.case_label + " expected=" + want);
      absorb(summary, report, ctx);

      // Rayleigh sandwich for both quotients.
      const auto rq = rayleigh_report(m, p);
      VerificationReport<double> sandwich;
      sandwich.less_equal("sandwich.lmin_GS_le_qGS", rq.gs_eigen_min, rq.q_GS, tol);
      sandwich.less_equal("sandwich.qGS_le_lmax_GS", rq.q_GS, rq.gs_eigen_max, tol);
      sandwich.less_equal("sandwich.lmin_GtG_le_qGtG", rq.gtg_eigen_min, rq.q_GtG, tol);
      sandwich.less_equal("sandwich.qGtG_le_lmax_GtG", rq.q_GtG, rq.gtg_eigen_max, tol);
      absorb(summary, sandwich, ctx);
      ++done;
      ++summary.instances;
    }
  }
  return summary;
}

SuiteSummary lemma3_suite(std::size_t instances, std::uint64_t seed, double tol) {
  SuiteSummary summary;
  summary.name = "lemma3";
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t i = 0; i < instances; ++i) {
    const Eigen::Index n = random_dimension(rng);
    const Eigen::Index negatives = std::uniform_int_distribution<Eigen::Index>(0, n / 2)(rng);
    const Eigen::VectorXd lambda = random_spectrum(n, 0.1, 10.0, negatives, rng);
    const Eigen::MatrixXd a = with_spectrum(lambda, rng);
    const Eigen::VectorXd b = gaussian_vector(n, rng);
    const Eigen::VectorXd x = gaussian_vector(n, rng);

    Problem problem;
    double beta = 0.0;
    if (i % 2 == 0) {
      problem = problems::linear("lemma3-linear", a, b);
      // Every fourth instance hits an eigenvalue exactly to exercise annihilation.
      if (i % 4 == 0) {
        const Eigen::Index j = std::uniform_int_distribution<Eigen::Index>(0, n - 1)(rng);
        beta = 1.0 / symmetric_spectrum<double>(a).values[j];
      } else {
        beta = (unit(rng) < 0.5 ? -1.0 : 1.0) * (0.05 + 0.5 * unit(rng));
      }
    } else {
      const Eigen::VectorXd c = 0.2 * gaussian_vector(n, rng);
      problem = problems::quadratic_symmetric(a, b, c, x);
      beta = (unit(rng) < 0.5 ? -1.0 : 1.0) * (0.01 + 0.1 * unit(rng));
    }
    const auto result = check_lemma3_recurrence<double>(problem, x, beta, 8, tol);
    absorb(summary, result.report, context_label(i % 2 == 0 ? "linear" : "quadratic", i));
    ++summary.instances;
  }
  return summary;
}

namespace {

// ||F(x + direction * s F_k)|| by direct evaluation.
double trial_norm(const Problem& problem, const Eigen::VectorXd& x, const Eigen::VectorXd& f,
                  double direction, double s) {
  return problem.residual(x + direction * s * f).norm();
}

// Root of g on [inside, outside] with g(inside) < 0 <= g(outside).
template <typename G>
double bisect(G g, double inside, double outside) {
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (inside + outside);
    if (mid == inside || mid == outside) break;
    (g(mid) < 0.0 ? inside : outside) = mid;
  }
  return 0.5 * (inside + outside);
}

}  // namespace

SuiteSummary theorem1_suite(std::size_t instances, std::uint64_t seed, std::size_t samples,
                            double endpoint_tol) {
  SuiteSummary summary;
  summary.name = "theorem1";
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> log_eta(std::log(1e-3), std::log(10.0));

  for (std::size_t inst = 0; inst < instances; ++inst) {
    const Eigen::Index n = random_dimension(rng);
    const Eigen::Index negatives = std::uniform_int_distribution<Eigen::Index>(0, n - 1)(rng);
    const Eigen::MatrixXd a = with_spectrum(random_spectrum(n, 0.1, 10.0, negatives, rng), rng);
    const Problem problem = problems::linear("theorem1", a, gaussian_vector(n, rng));
    const Eigen::VectorXd x = gaussian_vector(n, rng);
    const Eigen::VectorXd f = problem.residual(x);
    const double f_norm = f.norm();
    const double eta = std::exp(log_eta(rng));

    const auto m = exact_average(a, x, f);
    const auto iv = theorem1_intervals<double>(m, f, eta);
    if (iv.sign_case == 0) {
      ++summary.skipped;
      continue;
    }
    const std::string ctx = context_label("system", inst);

    struct Target {
      const char* name;
      StepInterval<double> interval;
      double direction;  // -1 for p_-, +1 for p_+
      double bound;      // strict descent uses bound 1 with strict inequality
      bool strict;
    };
    const Target targets[] = {
        {"normdes_minus", iv.normdes_minus, -1.0, 1.0 + eta, false},
        {"normdes_plus", iv.normdes_plus, +1.0, 1.0 + eta, false},
        {"descent_minus", iv.descent_minus, -1.0, 1.0, true},
        {"descent_plus", iv.descent_plus, +1.0, 1.0, true},
    };

    for (const auto& t : targets) {
      const double width = t.interval.hi - t.interval.lo;
      auto holds = [&](double s) {
        const double r = trial_norm(problem, x, f, t.direction, s);
        return t.strict ? r < t.bound * f_norm : r <= t.bound * f_norm;
      };
      for (std::size_t k = 0; k < samples; ++k) {
        const bool inside = k % 2 == 0;
        double s;
        if (inside) {
          s = t.interval.lo + width * (0.01 + 0.98 * unit(rng));
        } else {
          const double offset = width * (0.01 + 2.0 * unit(rng));
          s = unit(rng) < 0.5 ? t.interval.lo - offset : t.interval.hi + offset;
        }
        std::ostringstream what;
        what << std::setprecision(17) << ctx << ' ' << t.name << (inside ? ".inside" : ".outside")
             << " s=" << s << " interval=[" << t.interval.lo << ',' << t.interval.hi << ']';
        record(summary, holds(s) == inside, what.str());
      }

      // Endpoints: the nonzero ends are where the evaluated norm meets the bound.
      auto gap = [&](double s) {
        return trial_norm(problem, x, f, t.direction, s) - t.bound * f_norm;
      };
      const double mid = 0.5 * (t.interval.lo + t.interval.hi);
      for (double end : {t.interval.lo, t.interval.hi}) {
        if (t.strict && end == 0.0) continue;
        const double at_end = trial_norm(problem, x, f, t.direction, end);
        std::ostringstream what;
        what << std::setprecision(17) << ctx << ' ' << t.name << ".endpoint s=" << end;
        record(summary,
               std::abs(at_end - t.bound * f_norm) <= endpoint_tol * t.bound * f_norm,
               what.str() + " norm=" + std::to_string(at_end));
        const double beyond = end + (end > mid ? 1.0 : -1.0) * width;
        const double root = bisect(gap, mid, beyond);
        record(summary, std::abs(root - end) <= endpoint_tol * std::abs(end),
               what.str() + " bisection=" + std::to_string(root));
      }
    }
    ++summary.instances;
  }
  return summary;
}

void write_summary(std::ostream& out, const SuiteSummary& summary) {
  out << summary.name << ": instances=" << summary.instances << " checks=" << summary.checks
      << " violations=" << summary.violations << " skipped=" << summary.skipped << ' '
      << (summary.passed() ? "PASS" : "FAIL") << '\n';
  for (const auto& line : summary.failures) out << "  " << line << '\n';
}

}  // namespace specres::verify
