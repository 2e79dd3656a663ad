#pragma once

#include <stdexcept>
#include <string>

namespace capvertex {

/// Input outside the documented domain of an operation.
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

/// Two independent evaluations of the same quantity disagree.
struct ConsistencyError : std::logic_error {
  using std::logic_error::logic_error;
};

/// The requested configuration admits no solution of the requested kind.
struct NoSolution : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NonConvergence : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IncompatibleData : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct MeshDegeneration : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Configuration file violates its schema; `line` is 1-based, 0 if unknown.
struct ConfigError : std::runtime_error {
  ConfigError(const std::string& what, int line_no = 0)
      : std::runtime_error(what), line(line_no) {}
  int line;
};

}  // namespace capvertex
