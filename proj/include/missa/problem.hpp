#pragma once

// Convex-sum problems f(x) = sum_i w_i f_i(x) over a box.

#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "missa/markov.hpp"
#include "missa/rng.hpp"

namespace missa {

class Box {
 public:
  // Throws Error{InvalidProblem} on size mismatch, non-finite bounds or
  // lower_j > upper_j.
  Box(Vector lower, Vector upper);

  int dim() const noexcept { return static_cast<int>(lower_.size()); }
  const Vector& lower() const noexcept { return lower_; }
  const Vector& upper() const noexcept { return upper_; }
  Vector midpoint() const { return 0.5 * (lower_ + upper_); }
  bool contains(const Vector& x) const;

  // Euclidean projection (componentwise clamp), in place.
  void project_in_place(Vector& x) const;

 private:
  Vector lower_;
  Vector upper_;
};

Vector project(const Box& box, const Vector& x);

// Value/subgradient oracle of one convex summand.
class Component {
 public:
  virtual ~Component() = default;
  virtual double value(const Vector& x) const = 0;
  // Writes some g in the subdifferential at x into `out` (already sized n).
  virtual void subgradient(const Vector& x, Vector& out) const = 0;
  // Upper bound on ||g|| over all x, used to report the realized C.
  virtual double subgradient_bound() const = 0;
};

// f(x) = |a^T x - b|.
class L1Component final : public Component {
 public:
  L1Component(Vector row, double offset) : row_(std::move(row)), offset_(offset) {}

  const Vector& row() const noexcept { return row_; }
  double offset() const noexcept { return offset_; }

  double residual(const Vector& x) const { return row_.dot(x) - offset_; }
  double value(const Vector& x) const override;
  // a if residual > 0, -a if residual < 0, zero exactly at the kink.
  void subgradient(const Vector& x, Vector& out) const override;
  double subgradient_bound() const override { return row_.norm(); }

 private:
  Vector row_;
  double offset_;
};

double l1_value(const L1Component& component, const Vector& x);
Vector l1_subgradient(const L1Component& component, const Vector& x);

class ConvexSumProblem {
 public:
  // Weights default to uniform; replace them with set_weights.
  ConvexSumProblem(std::vector<std::shared_ptr<const Component>> components,
                   Box box);

  int dim() const noexcept { return box_.dim(); }
  int size() const noexcept { return static_cast<int>(components_.size()); }
  const Component& component(int i) const { return *components_[i]; }
  const Box& box() const noexcept { return box_; }
  const Vector& weights() const noexcept { return weights_; }

  // Throws Error{InvalidProblem} unless w is a probability vector of length m.
  void set_weights(Vector w);

  // Largest subgradient_bound over components.
  double subgradient_bound() const;

 private:
  std::vector<std::shared_ptr<const Component>> components_;
  Box box_;
  Vector weights_;
};

// Builds the |a_i^T x - b_i| problem from the rows of a.
ConvexSumProblem make_l1_problem(const Matrix& a, const Vector& b, Box box);

// Recovers (A, b) when every component is an L1Component; nullopt otherwise.
struct L1Data {
  Matrix a;
  Vector b;
};
std::optional<L1Data> l1_data(const ConvexSumProblem& problem);

double objective(const ConvexSumProblem& problem, const Vector& x);

// w_i = (1/M) sum_l [pi_l^inf]_i. Throws Error{InvalidDistribution}.
Vector weights_from_chains(std::span<const Vector> initial,
                           const ChainDecomposition& d);

struct NoiseModel {
  enum class Kind { Zero, UniformDecaying, UniformScaled, NormalScaled };

  Kind kind = Kind::Zero;
  double scale = 0.0;

  static NoiseModel zero() { return {}; }
  static NoiseModel uniform_decaying() { return {Kind::UniformDecaying, 1.0}; }
  static NoiseModel uniform_scaled(double c) { return {Kind::UniformScaled, c}; }
  static NoiseModel normal_scaled(double c) { return {Kind::NormalScaled, c}; }

  // Per-coordinate second-moment bound nu_k.
  double bound(long k) const;
  // True when sum_k nu_k / k^xi converges for every admissible xi.
  bool summable() const {
    return kind == Kind::Zero || kind == Kind::UniformDecaying;
  }
  bool is_zero() const { return kind == Kind::Zero; }
};

const char* to_string(NoiseModel::Kind kind);

// Fills `out` with an i.i.d. per-coordinate draw for iteration k (k >= 1).
void sample_noise(const NoiseModel& model, long k, RandomStream& stream,
                  Vector& out);
Vector sample_noise(const NoiseModel& model, long k, int n, RandomStream& stream);

}  // namespace missa
