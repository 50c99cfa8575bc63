#pragma once

// Text, JSON and CSV formats. All user-facing state indices are 1-based.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "missa/experiment.hpp"
#include "missa/markov.hpp"
#include "missa/optimizer.hpp"
#include "missa/problem.hpp"

namespace missa::io {

using json = nlohmann::json;

// "m" followed by m rows of m numbers. Throws Error{ParseError}.
Matrix read_matrix(std::istream& in);
Matrix read_matrix_file(const std::filesystem::path& path);
void write_matrix(std::ostream& out, const Matrix& p);

// Whitespace-separated probabilities.
Vector read_distribution(std::istream& in);
Vector read_distribution_file(const std::filesystem::path& path);

// {classes: [[...]], periods: [...], transient: [...], delta: n}
json decomposition_to_json(const ChainDecomposition& d);

// {n, rows: [{i, entries: [[j, a_ij], ...]}], b, lower, upper}
ConvexSumProblem problem_from_json(const json& j);
json problem_to_json(const ConvexSumProblem& problem);

// Matrix given inline as "matrix" or by path as "matrix_file"; problem
// likewise as "problem" or "problem_file". Relative paths resolve against
// base_dir. Weights default to weights_from_chains.
RunConfig run_config_from_json(const json& j, const std::filesystem::path& base_dir = {});
json run_config_to_json(const RunConfig& config);

// Header k,f,best_f,lambda,states; states are '|'-joined 1-based.
void write_trace_csv(std::ostream& out, const Trace& trace);
std::vector<TraceRecord> read_trace_csv(std::istream& in);

json summary_to_json(const SuiteSummary& summary);
json decay_to_json(const DecayReport& report);

std::string format_double(double value);  // shortest round-trip form
json read_json_file(const std::filesystem::path& path);

}  // namespace missa::io
