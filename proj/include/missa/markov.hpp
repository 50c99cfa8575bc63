#pragma once

// Finite time-homogeneous Markov chains: validation, class structure,
// Cesaro and power limits, and seeded trajectory sampling.
//
// States are 0-based everywhere in this API. Text/JSON I/O converts to the
// 1-based labels users see.

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "missa/rng.hpp"

namespace missa {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using StateSet = std::vector<int>;

inline constexpr double kStochasticTolerance = 1e-12;
inline constexpr double kFixedPointTolerance = 1e-10;

// Validated row-stochastic square matrix. Only obtainable through
// validate_stochastic, so holding one is proof of validity.
class TransitionMatrix {
 public:
  int size() const noexcept { return static_cast<int>(p_.rows()); }
  const Matrix& matrix() const noexcept { return p_; }
  double operator()(int i, int j) const { return p_(i, j); }

  // Inverse-CDF lookup: smallest j with u < F_i(j); u in [0, 1).
  int sample_row(int row, double u) const;

  // Successors of state i (support of row i), ascending.
  std::span<const int> successors(int i) const {
    return {support_.data() + support_offsets_[i],
            support_.data() + support_offsets_[i + 1]};
  }

  friend TransitionMatrix validate_stochastic(const Matrix& raw);

 private:
  explicit TransitionMatrix(Matrix p);

  Matrix p_;
  std::vector<double> cumulative_;  // row-major prefix sums
  std::vector<int> support_;
  std::vector<int> support_offsets_;
};

// Throws Error{InvalidMatrix} for non-square/empty/non-finite input,
// Error{NegativeEntry}, or RowSumError (1-based row, signed deviation).
TransitionMatrix validate_stochastic(const Matrix& raw);

// Structural part of the decomposition (no limit matrices yet).
struct ChainStructure {
  std::vector<StateSet> classes;  // recurrent classes, sorted by min state
  std::vector<int> class_periods;
  StateSet transient;
  int global_period = 1;
};

struct ChainDecomposition {
  std::vector<StateSet> classes;
  std::vector<int> class_periods;
  StateSet transient;
  int global_period = 1;
  Matrix cesaro;       // P_delta
  Matrix power_limit;  // lim_k P^{delta k}

  int state_count() const noexcept { return static_cast<int>(cesaro.rows()); }
  // Class index of a state, or -1 if transient.
  int class_of(int state) const;
  ChainStructure structure() const {
    return {classes, class_periods, transient, global_period};
  }
};

// Strongly connected components of the support graph in discovery order.
std::vector<StateSet> strongly_connected_components(const TransitionMatrix& p);

// Period of a closed communicating class via BFS levels:
// gcd over in-class edges (i -> j) of level(i) + 1 - level(j).
int class_period(const TransitionMatrix& p, const StateSet& members);

ChainStructure classify(const TransitionMatrix& p);

// Stationary distribution of the chain restricted to a closed class.
// Returned vector is indexed like `members`. Throws SingularSolve.
Vector class_stationary(const TransitionMatrix& p, const StateSet& members);

// Exact Cesaro limit from class stationary vectors and absorption
// probabilities. Throws Error{SingularSolve}.
Matrix cesaro_limit(const ChainStructure& s, const TransitionMatrix& p);

// (1/horizon) * sum_{j < horizon} P^j by direct power accumulation.
// Independent check for cesaro_limit; not used by the library itself.
Matrix cesaro_limit_oracle(const TransitionMatrix& p, long horizon);

struct PowerLimitOptions {
  double tolerance = kStochasticTolerance;
  int max_squarings = 64;
};

// Delta = lim P^{delta k}, by repeated squaring of P^delta until the
// entrywise change is within tolerance. Throws Error{NoConvergence}.
Matrix power_limit(const ChainStructure& s, const TransitionMatrix& p,
                   PowerLimitOptions options = {});

ChainDecomposition decompose(const TransitionMatrix& p);

// Throws Error{InvalidDistribution} unless pi has length m, finite
// nonnegative entries and sums to 1 within kStochasticTolerance.
void validate_distribution(const Vector& pi, int m);

// (pi0)^T P_delta.
Vector limiting_distribution(const Vector& pi0, const ChainDecomposition& d);

Matrix matrix_power(const Matrix& p, long exponent);

// Recurrent classes (indices into d.classes) not reachable from the support
// of any of the given initial distributions.
std::vector<int> unreachable_classes(const TransitionMatrix& p,
                                     const ChainDecomposition& d,
                                     std::span<const Vector> initial);

// A single sampled trajectory. Owns its random stream; must not be stepped
// from two threads at once.
class ChainState {
 public:
  ChainState(int current, std::uint64_t seed, std::uint64_t chain_id)
      : current_(current),
        stream_(seed, chain_id, StreamPurpose::Transition) {}

  // Draws s(0) from pi0 with the chain's own stream.
  static ChainState from_distribution(const Vector& pi0, std::uint64_t seed,
                                      std::uint64_t chain_id);

  int current() const noexcept { return current_; }
  RandomStream& stream() noexcept { return stream_; }

 private:
  friend int step(ChainState& chain, const TransitionMatrix& p);

  int current_;
  RandomStream stream_;
};

// Advances the chain one transition and returns the new state.
int step(ChainState& chain, const TransitionMatrix& p);

}  // namespace missa
