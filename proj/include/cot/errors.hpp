#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace cot {

// Input violated a documented precondition or file-format contract.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// The transportation solver failed to converge within its pivot budget,
// or a post-solve certification check failed.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, std::int64_t iterations)
      : std::runtime_error(what), iterations_(iterations) {}

  std::int64_t iterations() const { return iterations_; }

 private:
  std::int64_t iterations_;
};

// A regression/correlation fit has no defined answer (e.g. zero variance).
class UndefinedFitError : public ValidationError {
 public:
  explicit UndefinedFitError(const std::string& what) : ValidationError(what) {}
};

// The brute-force oracle refused an instance it cannot handle exactly.
class OracleRefusal : public ValidationError {
 public:
  explicit OracleRefusal(const std::string& what) : ValidationError(what) {}
};

}  // namespace cot
