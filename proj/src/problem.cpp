#include "missa/problem.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "missa/error.hpp"

namespace missa {

Box::Box(Vector lower, Vector upper)
    : lower_(std::move(lower)), upper_(std::move(upper)) {
  if (lower_.size() == 0 || lower_.size() != upper_.size()) {
    throw Error(ErrorCode::InvalidProblem, "box bounds must have equal, positive length");
  }
  if (!lower_.allFinite() || !upper_.allFinite()) {
    throw Error(ErrorCode::InvalidProblem, "box bounds must be finite");
  }
  for (Eigen::Index j = 0; j < lower_.size(); ++j) {
    if (lower_(j) > upper_(j)) {
      std::ostringstream os;
      os << "box coordinate " << j + 1 << " has lower " << lower_(j)
         << " > upper " << upper_(j);
      throw Error(ErrorCode::InvalidProblem, os.str());
    }
  }
}

bool Box::contains(const Vector& x) const {
  return x.size() == lower_.size() && (x.array() >= lower_.array()).all() &&
         (x.array() <= upper_.array()).all();
}

void Box::project_in_place(Vector& x) const {
  x = x.cwiseMax(lower_).cwiseMin(upper_);
}

Vector project(const Box& box, const Vector& x) {
  Vector out = x;
  box.project_in_place(out);
  return out;
}

double L1Component::value(const Vector& x) const { return std::abs(residual(x)); }

void L1Component::subgradient(const Vector& x, Vector& out) const {
  const double r = residual(x);
  if (r > 0.0) {
    out = row_;
  } else if (r < 0.0) {
    out = -row_;
  } else {
    out.setZero();
  }
}

double l1_value(const L1Component& component, const Vector& x) {
  return component.value(x);
}

Vector l1_subgradient(const L1Component& component, const Vector& x) {
  Vector g(x.size());
  component.subgradient(x, g);
  return g;
}

ConvexSumProblem::ConvexSumProblem(
    std::vector<std::shared_ptr<const Component>> components, Box box)
    : components_(std::move(components)), box_(std::move(box)) {
  if (components_.empty()) {
    throw Error(ErrorCode::InvalidProblem, "problem needs at least one component");
  }
  weights_ = Vector::Constant(size(), 1.0 / size());
}

void ConvexSumProblem::set_weights(Vector w) {
  if (w.size() != size() || !w.allFinite() || (w.array() < 0.0).any() ||
      std::abs(w.sum() - 1.0) > kStochasticTolerance) {
    throw Error(ErrorCode::InvalidProblem,
                "weights must be a probability vector with one entry per component");
  }
  weights_ = std::move(w);
}

double ConvexSumProblem::subgradient_bound() const {
  double bound = 0.0;
  for (const auto& c : components_) bound = std::max(bound, c->subgradient_bound());
  return bound;
}

ConvexSumProblem make_l1_problem(const Matrix& a, const Vector& b, Box box) {
  if (a.rows() != b.size() || a.cols() != box.dim()) {
    throw Error(ErrorCode::InvalidProblem, "A, b and box dimensions disagree");
  }
  std::vector<std::shared_ptr<const Component>> components;
  components.reserve(static_cast<std::size_t>(a.rows()));
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    components.push_back(std::make_shared<L1Component>(a.row(i).transpose(), b(i)));
  }
  return ConvexSumProblem(std::move(components), std::move(box));
}

std::optional<L1Data> l1_data(const ConvexSumProblem& problem) {
  L1Data out{Matrix(problem.size(), problem.dim()), Vector(problem.size())};
  for (int i = 0; i < problem.size(); ++i) {
    const auto* l1 = dynamic_cast<const L1Component*>(&problem.component(i));
    if (l1 == nullptr) return std::nullopt;
    out.a.row(i) = l1->row().transpose();
    out.b(i) = l1->offset();
  }
  return out;
}

double objective(const ConvexSumProblem& problem, const Vector& x) {
  double total = 0.0;
  const Vector& w = problem.weights();
  for (int i = 0; i < problem.size(); ++i) {
    if (w(i) != 0.0) total += w(i) * problem.component(i).value(x);
  }
  return total;
}

Vector weights_from_chains(std::span<const Vector> initial,
                           const ChainDecomposition& d) {
  if (initial.empty()) {
    throw Error(ErrorCode::InvalidDistribution, "need at least one initial distribution");
  }
  Vector w = Vector::Zero(d.state_count());
  for (const auto& pi0 : initial) w += limiting_distribution(pi0, d);
  w /= static_cast<double>(initial.size());
  for (int t : d.transient) w(t) = 0.0;
  return w / w.sum();
}

double NoiseModel::bound(long k) const {
  switch (kind) {
    case Kind::Zero: return 0.0;
    case Kind::UniformDecaying: return 1.0 / static_cast<double>(std::max(k, 1L));
    case Kind::UniformScaled:
    case Kind::NormalScaled: return scale;
  }
  return 0.0;
}

const char* to_string(NoiseModel::Kind kind) {
  switch (kind) {
    case NoiseModel::Kind::Zero: return "zero";
    case NoiseModel::Kind::UniformDecaying: return "uniform_decaying";
    case NoiseModel::Kind::UniformScaled: return "uniform_scaled";
    case NoiseModel::Kind::NormalScaled: return "normal_scaled";
  }
  return "unknown";
}

void sample_noise(const NoiseModel& model, long k, RandomStream& stream,
                  Vector& out) {
  switch (model.kind) {
    case NoiseModel::Kind::Zero:
      out.setZero();
      return;
    case NoiseModel::Kind::UniformDecaying: {
      const double width = 1.0 / static_cast<double>(std::max(k, 1L));
      for (Eigen::Index j = 0; j < out.size(); ++j) out(j) = width * stream.uniform();
      return;
    }
    case NoiseModel::Kind::UniformScaled:
      for (Eigen::Index j = 0; j < out.size(); ++j) out(j) = model.scale * stream.uniform();
      return;
    case NoiseModel::Kind::NormalScaled:
      for (Eigen::Index j = 0; j < out.size(); ++j) out(j) = model.scale * stream.normal();
      return;
  }
}

Vector sample_noise(const NoiseModel& model, long k, int n, RandomStream& stream) {
  Vector out(n);
  sample_noise(model, k, stream, out);
  return out;
}

}  // namespace missa
