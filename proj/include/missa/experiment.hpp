#pragma once

// The 7-agent sparse l1 study: problem data, method/noise configurations,
// multi-seed suites and the matrix-power decay diagnostic.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "missa/optimizer.hpp"

namespace missa {

enum class Method { M1, M2, M3, M4 };
enum class Regime { Diminishing, Constant };

Method parse_method(const std::string& name);  // "m1".."m4", case-insensitive
const char* to_string(Method method);
Regime parse_regime(const std::string& name);  // "diminishing" | "constant"
const char* to_string(Regime regime);

namespace study {

// 7 x 20 sparse system matrix.
Matrix system_matrix();
Box feasible_box();
// Two recurrent classes {1..4} (period 2) and {5,6,7} (aperiodic).
TransitionMatrix transition_matrix();
// 9-agent illustration: classes {1..4} (period 2), {5,6,7} (period 3) and
// transient {8, 9}.
TransitionMatrix illustration_matrix();
// Neighbor sets of the equal-probability baseline (0-based).
std::vector<StateSet> neighbor_sets();

// Noise model of tests 1..6. Throws Error{UnknownTest}.
NoiseModel noise_for_test(int test);

struct StepsizeDefaults {
  double a;
  double xi;
  double lambda;  // constant regime
};
StepsizeDefaults stepsize_defaults(Method method);

}  // namespace study

struct ExperimentOptions {
  Regime regime = Regime::Diminishing;
  std::optional<double> a;
  std::optional<double> xi;
  std::optional<double> lambda;
  long budget = 100000;
  long stride = 1;
  std::uint64_t seed = 0;
  // Overrides the noise scale of the scaled tests (3..6).
  std::optional<double> noise_scale;
};

// Fully populated configuration for one method and noise test. The objective
// weights are always those of the two-chain MISSA setup, so all methods
// minimize the same f.
RunConfig build_experiment(Method method, int test, const ExperimentOptions& options = {});

inline const std::vector<double> kCrossingThresholds{1e-2, 1e-3, 1e-4, 1e-6};

struct ExperimentSpec {
  Method method = Method::M1;
  int test = 1;
  ExperimentOptions options;
  std::vector<std::uint64_t> seeds;
  std::filesystem::path output_dir;  // empty: keep everything in memory
  int threads = 1;                   // OpenMP threads across seeds
};

struct SeedResult {
  std::uint64_t seed = 0;
  std::vector<long> first_crossing;  // parallel to kCrossingThresholds
  double best_f = 0.0;
  long best_k = 0;
  double final_f = 0.0;
  double tail_best_f = 0.0;
  double ns_per_iteration = 0.0;
  double realized_subgradient_bound = 0.0;
  std::filesystem::path trace_file;
};

struct CrossingStats {
  double threshold = 0.0;
  int crossed = 0;
  // Over all seeds with never-crossed counted as +inf.
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
};

struct SuiteSummary {
  Method method = Method::M1;
  int test = 1;
  Regime regime = Regime::Diminishing;
  long budget = 0;
  int chains = 0;
  std::vector<SeedResult> seeds;
  std::vector<CrossingStats> crossings;
  double median_best_f = 0.0;
  double median_tail_best_f = 0.0;
  double mean_ns_per_iteration = 0.0;
  std::vector<std::string> warnings;
};

// Runs one trace per seed, writing trace_seed<seed>.csv and summary.json to
// output_dir when set. Throws Error{InvalidSpec} or Error{IoError}.
SuiteSummary run_suite(const ExperimentSpec& spec);

// Linear-interpolation quantile (q in [0,1]) of an unsorted sample.
double quantile(std::vector<double> values, double q);

struct DecayFit {
  double alpha_hat = 0.0;
  double beta_hat = 0.0;
  double rmse = 0.0;
  int k_first = 0;
  int k_last = 0;
  int points = 0;
};

struct DecayReport {
  int delta = 1;
  std::vector<double> norms;  // ||P^{delta k} - Delta||_inf, k = 1..k_max
  DecayFit matrix_fit;
  std::vector<double> transient_mass;  // max_i in T Prob(s(delta k) in T)
  std::optional<DecayFit> transient_fit;
};

// Least-squares fit of log(value) = log(alpha) - beta k over values above
// 1e-14. Throws Error{DegenerateFit} with fewer than two usable points.
DecayFit fit_log_linear(const std::vector<double>& values);

// Requires k_max >= 5 (Error{InvalidParameters}).
DecayReport decay_diagnostic(const TransitionMatrix& p, int k_max);

}  // namespace missa
