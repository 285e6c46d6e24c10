#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace specres::verify {

/// Aggregate outcome of a randomized verification suite.
struct SuiteSummary {
  std::string name;
  std::size_t instances = 0;
  std::size_t checks = 0;
  std::size_t violations = 0;
  std::size_t skipped = 0;            // instances where the relations are undefined
  std::vector<std::string> failures;  // first few failing relations, report-line format

  bool passed() const { return violations == 0; }
  void add_failure(std::string line);
};

/// Sign, ordering and cosine relations on random secant pairs (p, y), p'y != 0.
SuiteSummary lemma1_suite(std::size_t instances, std::uint64_t seed, double rel_tol = 1e-12);

/// Bound chains on random linear systems, `per_case` instances for each of the
/// cases (i), (ii), (iii); n in {2..10}, G taken exactly from the matrix.
SuiteSummary lemma2_suite(std::size_t per_case, std::uint64_t seed, double tol = 1e-10);

/// Eigencomponent recurrence on symmetric linear and degree-2 polynomial systems.
SuiteSummary lemma3_suite(std::size_t instances, std::uint64_t seed, double tol = 1e-8);

/// Samples gamma*beta inside and outside the returned intervals on symmetric
/// linear systems and compares with directly evaluated residual norms; also
/// locates each interval endpoint by bisection on the evaluated norm.
SuiteSummary theorem1_suite(std::size_t instances, std::uint64_t seed, std::size_t samples = 50,
                            double endpoint_tol = 1e-8);

void write_summary(std::ostream& out, const SuiteSummary& summary);

}  // namespace specres::verify
