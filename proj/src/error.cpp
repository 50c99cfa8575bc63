#include "missa/error.hpp"

#include <sstream>

namespace missa {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidMatrix: return "InvalidMatrix";
    case ErrorCode::NegativeEntry: return "NegativeEntry";
    case ErrorCode::RowSumViolation: return "RowSumViolation";
    case ErrorCode::SingularSolve: return "SingularSolve";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::InvalidDistribution: return "InvalidDistribution";
    case ErrorCode::InvalidParameters: return "InvalidParameters";
    case ErrorCode::InvalidNeighbors: return "InvalidNeighbors";
    case ErrorCode::InvalidProblem: return "InvalidProblem";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::UnknownMethod: return "UnknownMethod";
    case ErrorCode::UnknownTest: return "UnknownTest";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::DegenerateFit: return "DegenerateFit";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

namespace {
std::string row_sum_message(int row, double deviation) {
  std::ostringstream os;
  os << "row " << row << " sums to 1 " << (deviation >= 0 ? "+ " : "- ")
     << (deviation >= 0 ? deviation : -deviation);
  return os.str();
}
}  // namespace

RowSumError::RowSumError(int row, double deviation)
    : Error(ErrorCode::RowSumViolation, row_sum_message(row, deviation)),
      row_(row),
      deviation_(deviation) {}

}  // namespace missa
