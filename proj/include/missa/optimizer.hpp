#pragma once

// Markovian incremental stochastic subgradient iteration: every chain picks
// a component through its own Markov trajectory, takes a noisy subgradient
// step from the common iterate, and the steps are averaged and projected.

#include <cstdint>
#include <string>
#include <vector>

#include "missa/markov.hpp"
#include "missa/problem.hpp"

namespace missa {

class StepsizeSchedule {
 public:
  enum class Kind { DiminishingBlock, Constant };

  // lambda_k = a / (floor(k / delta) + 1)^xi. Requires a > 0, 2/3 < xi <= 1,
  // delta >= 1; throws Error{InvalidParameters}.
  static StepsizeSchedule diminishing_block(double a, double xi, int delta);
  // Requires lambda > 0.
  static StepsizeSchedule constant(double lambda);

  double at(long k) const;

  Kind kind() const noexcept { return kind_; }
  double a() const noexcept { return a_; }
  double xi() const noexcept { return xi_; }
  int delta() const noexcept { return delta_; }
  double lambda() const noexcept { return lambda_; }

 private:
  StepsizeSchedule() = default;

  Kind kind_ = Kind::Constant;
  double a_ = 0.0;
  double xi_ = 1.0;
  int delta_ = 1;
  double lambda_ = 0.0;
};

double stepsize(const StepsizeSchedule& schedule, long k);

struct ChainSpec {
  Vector initial;
  std::uint64_t seed = 0;
};

struct RunConfig {
  ConvexSumProblem problem;
  TransitionMatrix transitions;
  ChainDecomposition decomposition;
  std::vector<ChainSpec> chains;
  StepsizeSchedule schedule;
  NoiseModel noise;
  Vector x0;
  long budget = 1;
  long stride = 1;
  // Per-component multiplier on the subgradient; empty means all ones.
  Vector subgradient_scale;
  // Objective levels whose first crossing f(x^k) < level is recorded.
  std::vector<double> thresholds;
  // 1 runs the serial kernel; > 1 runs chain subiterations on OpenMP threads.
  int threads = 1;
};

// Decomposes P and validates everything. Throws Error{InvalidConfig} (or the
// underlying markov/problem errors).
RunConfig make_run_config(ConvexSumProblem problem, TransitionMatrix transitions,
                          std::vector<ChainSpec> chains, StepsizeSchedule schedule,
                          NoiseModel noise, Vector x0, long budget);

void validate(const RunConfig& config);

struct TraceRecord {
  long k = 0;
  double f = 0.0;
  double best_f = 0.0;
  double lambda = 0.0;
  std::vector<int> states;  // 0-based s_l(k), one per chain

  bool operator==(const TraceRecord&) const = default;
};

struct Trace {
  std::vector<TraceRecord> records;
  Vector final_x;
  Vector best_x;
  double best_f = 0.0;
  long best_k = 0;
  std::vector<long> first_crossing;  // -1 when never crossed
  // min f(x^k) over the last tenth of the run, k >= budget - budget / 10.
  double tail_best_f = 0.0;
  double wall_ns = 0.0;
  double ns_per_iteration = 0.0;
  double realized_subgradient_bound = 0.0;
  std::vector<std::string> warnings;
};

// One chain's private working set.
struct Lane {
  ChainState chain;
  RandomStream noise_stream;
  Vector subgradient;
  Vector noise;
  Vector iterate;
  double max_subgradient_norm = 0.0;
};

// Iterate plus all chain lanes.
class MissaState {
 public:
  explicit MissaState(const RunConfig& config);

  const Vector& x() const noexcept { return x_; }
  std::vector<int> states() const;
  std::vector<Lane>& lanes() noexcept { return lanes_; }
  double max_subgradient_norm() const;

 private:
  friend void missa_step(MissaState&, const RunConfig&, long, double);
  friend void missa_step_parallel(MissaState&, const RunConfig&, long, double, int);
  friend Trace run(const RunConfig&);

  Vector x_;
  Vector average_;
  std::vector<Lane> lanes_;
};

// Advances the lane's chain and forms x - lambda (g_{s(k+1)}(x) + eps^{k+1}).
void subiterate(Lane& lane, const Vector& x, const RunConfig& config, long k,
                double lambda);

// One full iteration k -> k+1 with the given stepsize. Serial reference.
void missa_step(MissaState& state, const RunConfig& config, long k, double lambda);

// Same iteration with subiterations on an OpenMP team. Bitwise identical to
// missa_step for any thread count.
void missa_step_parallel(MissaState& state, const RunConfig& config, long k,
                         double lambda, int threads);

// Runs config.budget iterations. Records k = 0, every stride-th iterate and
// the final one; best-so-far is tracked on every iteration.
Trace run(const RunConfig& config);

enum class BaselineKind { Cyclic, UniformRandom, EqualProbability };

struct Baseline {
  TransitionMatrix transitions;
  Vector initial;
};

// neighbors (0-based) is required for EqualProbability only.
// Throws Error{InvalidNeighbors}.
Baseline make_baseline(BaselineKind kind, int m,
                       const std::vector<StateSet>& neighbors = {});

}  // namespace missa
