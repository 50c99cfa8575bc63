#pragma once

#include <stdexcept>
#include <string>

namespace missa {

enum class ErrorCode {
  InvalidMatrix,
  NegativeEntry,
  RowSumViolation,
  SingularSolve,
  NoConvergence,
  InvalidDistribution,
  InvalidParameters,
  InvalidNeighbors,
  InvalidProblem,
  InvalidConfig,
  UnknownMethod,
  UnknownTest,
  InvalidSpec,
  DegenerateFit,
  IoError,
  ParseError,
};

const char* to_string(ErrorCode code);

// Every failure raised by the library carries a stable code so the CLI can
// print a machine-readable line.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class RowSumError : public Error {
 public:
  // row is 1-based; deviation is (row sum - 1).
  RowSumError(int row, double deviation);

  int row() const noexcept { return row_; }
  double deviation() const noexcept { return deviation_; }

 private:
  int row_;
  double deviation_;
};

}  // namespace missa
