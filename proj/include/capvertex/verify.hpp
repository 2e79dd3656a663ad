#pragma once

// Named verification recipes. Each criterion reports every measured
// quantity next to its threshold; a criterion passes when all checks pass.

#include <cstdint>
#include <string>
#include <vector>

namespace capvertex {

struct Check {
  std::string quantity;
  double measured = 0.0;
  std::string comparison;  // "<", "<=", ">", ">=", "=="
  double threshold = 0.0;

  bool pass() const;
};

struct CriterionOutcome {
  int id = 0;
  std::string title;
  std::string oracle;  // what the measured values are compared against
  double time_limit_s = 0.0;
  std::vector<Check> checks;

  bool pass() const;
};

struct VerifyOutcome {
  std::string scenario;
  std::vector<CriterionOutcome> criteria;

  bool pass() const;
};

/// theorem1-wedge, theorem3-trihedral, theorem4-cylinder, counterexample-v4,
/// wente, formulas.
const std::vector<std::string>& suite_names();

/// Criterion ids run by a suite. Throws DomainError for an unknown suite.
std::vector<int> suite_criteria(const std::string& suite);

/// Runs one criterion (1 to 13). All sampling is driven by `seed`.
CriterionOutcome run_criterion(int id, std::uint64_t seed);

/// Throws DomainError for an unknown suite.
std::vector<VerifyOutcome> verify_suite(const std::string& suite, std::uint64_t seed);

/// Timings are not serialized, so equal inputs give equal bytes.
std::string to_json(const std::vector<VerifyOutcome>& outcomes, const std::string& suite,
                    std::uint64_t seed);

}  // namespace capvertex
