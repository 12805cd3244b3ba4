#pragma once

#include <stdexcept>
#include <string>

namespace mglab {

// Bad caller-supplied data: shapes, ranges, non-finite entries.
struct InputError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A numeric routine failed to converge or produced an unusable result.
struct SolverError : std::runtime_error {
  SolverError(const std::string& what, long iterations_arg)
      : std::runtime_error(what), iterations(iterations_arg) {}
  long iterations = 0;
};

// Invalid experiment configuration (schema, exhausted schedules, ...).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A runtime identity or inequality that must hold exactly was violated.
struct AuditError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace mglab
