#include "missa/markov.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <sstream>

#include "missa/error.hpp"

namespace missa {

TransitionMatrix::TransitionMatrix(Matrix p) : p_(std::move(p)) {
  const int m = size();
  cumulative_.resize(static_cast<std::size_t>(m) * m);
  support_offsets_.assign(m + 1, 0);
  for (int i = 0; i < m; ++i) {
    double acc = 0.0;
    for (int j = 0; j < m; ++j) {
      acc += p_(i, j);
      cumulative_[static_cast<std::size_t>(i) * m + j] = acc;
      if (p_(i, j) > 0.0) support_.push_back(j);
    }
    support_offsets_[i + 1] = static_cast<int>(support_.size());
  }
}

int TransitionMatrix::sample_row(int row, double u) const {
  const int m = size();
  const auto first = cumulative_.begin() + static_cast<std::ptrdiff_t>(row) * m;
  const auto last = first + m;
  const auto it = std::upper_bound(first, last, u);
  if (it == last) {
    // u landed in the rounding gap above the final prefix sum.
    return successors(row).back();
  }
  return static_cast<int>(it - first);
}

TransitionMatrix validate_stochastic(const Matrix& raw) {
  if (raw.rows() == 0 || raw.rows() != raw.cols()) {
    throw Error(ErrorCode::InvalidMatrix,
                "transition matrix must be square with m >= 1");
  }
  if (!raw.allFinite()) {
    throw Error(ErrorCode::InvalidMatrix, "transition matrix has non-finite entries");
  }
  for (Eigen::Index i = 0; i < raw.rows(); ++i) {
    for (Eigen::Index j = 0; j < raw.cols(); ++j) {
      if (raw(i, j) < 0.0) {
        std::ostringstream os;
        os << "entry (" << i + 1 << "," << j + 1 << ") is negative: " << raw(i, j);
        throw Error(ErrorCode::NegativeEntry, os.str());
      }
    }
    const double deviation = raw.row(i).sum() - 1.0;
    if (std::abs(deviation) > kStochasticTolerance) {
      throw RowSumError(static_cast<int>(i) + 1, deviation);
    }
  }
  return TransitionMatrix(raw);
}

std::vector<StateSet> strongly_connected_components(const TransitionMatrix& p) {
  // Iterative Tarjan.
  const int m = p.size();
  std::vector<int> index(m, -1), low(m, 0), on_stack(m, 0);
  std::vector<int> stack;
  std::vector<std::pair<int, std::size_t>> call;  // (vertex, next successor)
  std::vector<StateSet> components;
  int counter = 0;

  for (int root = 0; root < m; ++root) {
    if (index[root] != -1) continue;
    call.emplace_back(root, 0);
    index[root] = low[root] = counter++;
    stack.push_back(root);
    on_stack[root] = 1;
    while (!call.empty()) {
      auto& [v, next] = call.back();
      const auto succ = p.successors(v);
      if (next < succ.size()) {
        const int w = succ[next++];
        if (index[w] == -1) {
          index[w] = low[w] = counter++;
          stack.push_back(w);
          on_stack[w] = 1;
          call.emplace_back(w, 0);
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], index[w]);
        }
        continue;
      }
      const int done = v;
      call.pop_back();
      if (!call.empty()) {
        const int parent = call.back().first;
        low[parent] = std::min(low[parent], low[done]);
      }
      if (low[done] == index[done]) {
        StateSet component;
        int w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = 0;
          component.push_back(w);
        } while (w != done);
        std::sort(component.begin(), component.end());
        components.push_back(std::move(component));
      }
    }
  }
  return components;
}

int class_period(const TransitionMatrix& p, const StateSet& members) {
  const int m = p.size();
  std::vector<int> level(m, -1);
  std::vector<char> inside(m, 0);
  for (int s : members) inside[s] = 1;

  const int start = *std::min_element(members.begin(), members.end());
  std::queue<int> frontier;
  level[start] = 0;
  frontier.push(start);
  int period = 0;
  while (!frontier.empty()) {
    const int i = frontier.front();
    frontier.pop();
    for (int j : p.successors(i)) {
      if (!inside[j]) continue;
      if (level[j] == -1) {
        level[j] = level[i] + 1;
        frontier.push(j);
      } else {
        period = std::gcd(period, std::abs(level[i] + 1 - level[j]));
      }
    }
  }
  // Tree edges contribute 0 to the gcd; a class with only tree edges cannot
  // be strongly connected, so period > 0 for any genuine class.
  return period == 0 ? 1 : period;
}

ChainStructure classify(const TransitionMatrix& p) {
  const int m = p.size();
  auto components = strongly_connected_components(p);
  std::vector<int> component_of(m, -1);
  for (std::size_t c = 0; c < components.size(); ++c) {
    for (int s : components[c]) component_of[s] = static_cast<int>(c);
  }

  ChainStructure out;
  for (std::size_t c = 0; c < components.size(); ++c) {
    bool closed = true;
    for (int i : components[c]) {
      for (int j : p.successors(i)) {
        if (component_of[j] != static_cast<int>(c)) {
          closed = false;
          break;
        }
      }
      if (!closed) break;
    }
    if (closed) {
      out.classes.push_back(components[c]);
    } else {
      out.transient.insert(out.transient.end(), components[c].begin(),
                           components[c].end());
    }
  }
  std::sort(out.classes.begin(), out.classes.end(),
            [](const StateSet& a, const StateSet& b) { return a.front() < b.front(); });
  std::sort(out.transient.begin(), out.transient.end());

  out.global_period = 1;
  for (const auto& cls : out.classes) {
    const int period = class_period(p, cls);
    out.class_periods.push_back(period);
    out.global_period = std::lcm(out.global_period, period);
  }
  return out;
}

Vector class_stationary(const TransitionMatrix& p, const StateSet& members) {
  const auto k = static_cast<Eigen::Index>(members.size());
  Matrix system(k, k);
  for (Eigen::Index a = 0; a < k; ++a) {
    for (Eigen::Index b = 0; b < k; ++b) {
      system(a, b) = p(members[b], members[a]) - (a == b ? 1.0 : 0.0);
    }
  }
  system.row(k - 1).setOnes();
  Vector rhs = Vector::Zero(k);
  rhs(k - 1) = 1.0;

  Eigen::FullPivLU<Matrix> lu(system);
  if (!lu.isInvertible()) {
    throw Error(ErrorCode::SingularSolve,
                "stationary system of a recurrent class is singular");
  }
  Vector pi = lu.solve(rhs);
  if (!pi.allFinite() || (system * pi - rhs).cwiseAbs().maxCoeff() > kFixedPointTolerance) {
    throw Error(ErrorCode::SingularSolve, "stationary solve is ill-conditioned");
  }
  // Roundoff can leave tiny negatives on a valid probability vector.
  pi = pi.cwiseMax(0.0);
  return pi / pi.sum();
}

Matrix cesaro_limit(const ChainStructure& s, const TransitionMatrix& p) {
  const int m = p.size();
  Matrix limit = Matrix::Zero(m, m);
  std::vector<Vector> stationary;
  stationary.reserve(s.classes.size());
  for (const auto& cls : s.classes) {
    stationary.push_back(class_stationary(p, cls));
    const Vector& pi = stationary.back();
    for (int i : cls) {
      for (std::size_t c = 0; c < cls.size(); ++c) limit(i, cls[c]) = pi(c);
    }
  }
  if (s.transient.empty()) return limit;

  // Absorption probabilities: (I - T) A = [Q_1 1, ..., Q_N 1].
  const auto u = static_cast<Eigen::Index>(s.transient.size());
  const auto n_classes = static_cast<Eigen::Index>(s.classes.size());
  Matrix system = Matrix::Identity(u, u);
  Matrix rhs = Matrix::Zero(u, n_classes);
  for (Eigen::Index a = 0; a < u; ++a) {
    const int t = s.transient[a];
    for (Eigen::Index b = 0; b < u; ++b) system(a, b) -= p(t, s.transient[b]);
    for (Eigen::Index v = 0; v < n_classes; ++v) {
      for (int j : s.classes[v]) rhs(a, v) += p(t, j);
    }
  }
  Eigen::FullPivLU<Matrix> lu(system);
  if (!lu.isInvertible()) {
    throw Error(ErrorCode::SingularSolve, "absorption system is singular");
  }
  const Matrix absorption = lu.solve(rhs);
  if (!absorption.allFinite()) {
    throw Error(ErrorCode::SingularSolve, "absorption solve is ill-conditioned");
  }
  for (Eigen::Index a = 0; a < u; ++a) {
    for (Eigen::Index v = 0; v < n_classes; ++v) {
      const auto& cls = s.classes[v];
      for (std::size_t c = 0; c < cls.size(); ++c) {
        limit(s.transient[a], cls[c]) = absorption(a, v) * stationary[v](c);
      }
    }
  }
  return limit;
}

Matrix cesaro_limit_oracle(const TransitionMatrix& p, long horizon) {
  const int m = p.size();
  horizon = std::max(horizon, 1L);
  Matrix sum = Matrix::Zero(m, m);
  Matrix power = Matrix::Identity(m, m);
  Matrix next(m, m);
  for (long j = 0; j < horizon; ++j) {
    sum += power;
    next.noalias() = power * p.matrix();
    power.swap(next);
  }
  return sum / static_cast<double>(horizon);
}

Matrix matrix_power(const Matrix& p, long exponent) {
  Matrix result = Matrix::Identity(p.rows(), p.cols());
  Matrix base = p;
  while (exponent > 0) {
    if (exponent & 1) result = result * base;
    exponent >>= 1;
    if (exponent > 0) base = base * base;
  }
  return result;
}

Matrix power_limit(const ChainStructure& s, const TransitionMatrix& p,
                   PowerLimitOptions options) {
  Matrix current = matrix_power(p.matrix(), s.global_period);
  for (int iter = 0; iter < options.max_squarings; ++iter) {
    Matrix next = current * current;
    const double change = (next - current).cwiseAbs().maxCoeff();
    current.swap(next);
    if (change <= options.tolerance) return current;
  }
  std::ostringstream os;
  os << "P^delta did not reach a fixed point within " << options.max_squarings
     << " squarings";
  throw Error(ErrorCode::NoConvergence, os.str());
}

ChainDecomposition decompose(const TransitionMatrix& p) {
  ChainStructure s = classify(p);
  ChainDecomposition d;
  d.cesaro = cesaro_limit(s, p);
  d.power_limit = power_limit(s, p);
  d.classes = std::move(s.classes);
  d.class_periods = std::move(s.class_periods);
  d.transient = std::move(s.transient);
  d.global_period = s.global_period;
  return d;
}

int ChainDecomposition::class_of(int state) const {
  for (std::size_t v = 0; v < classes.size(); ++v) {
    if (std::binary_search(classes[v].begin(), classes[v].end(), state)) {
      return static_cast<int>(v);
    }
  }
  return -1;
}

void validate_distribution(const Vector& pi, int m) {
  if (pi.size() != m) {
    std::ostringstream os;
    os << "distribution has length " << pi.size() << ", expected " << m;
    throw Error(ErrorCode::InvalidDistribution, os.str());
  }
  if (!pi.allFinite() || (pi.array() < 0.0).any()) {
    throw Error(ErrorCode::InvalidDistribution,
                "distribution entries must be finite and nonnegative");
  }
  const double deviation = pi.sum() - 1.0;
  if (std::abs(deviation) > kStochasticTolerance) {
    std::ostringstream os;
    os << "distribution sums to 1 + " << deviation;
    throw Error(ErrorCode::InvalidDistribution, os.str());
  }
}

Vector limiting_distribution(const Vector& pi0, const ChainDecomposition& d) {
  validate_distribution(pi0, d.state_count());
  return d.cesaro.transpose() * pi0;
}

std::vector<int> unreachable_classes(const TransitionMatrix& p,
                                     const ChainDecomposition& d,
                                     std::span<const Vector> initial) {
  const int m = p.size();
  std::vector<char> seen(m, 0);
  std::vector<int> pending;
  for (const auto& pi : initial) {
    for (int i = 0; i < m && i < pi.size(); ++i) {
      if (pi(i) > 0.0 && !seen[i]) {
        seen[i] = 1;
        pending.push_back(i);
      }
    }
  }
  while (!pending.empty()) {
    const int i = pending.back();
    pending.pop_back();
    for (int j : p.successors(i)) {
      if (!seen[j]) {
        seen[j] = 1;
        pending.push_back(j);
      }
    }
  }
  std::vector<int> out;
  for (std::size_t v = 0; v < d.classes.size(); ++v) {
    if (!seen[d.classes[v].front()]) out.push_back(static_cast<int>(v));
  }
  return out;
}

ChainState ChainState::from_distribution(const Vector& pi0, std::uint64_t seed,
                                         std::uint64_t chain_id) {
  ChainState chain(0, seed, chain_id);
  const double u = chain.stream_.uniform();
  double acc = 0.0;
  int last_positive = 0;
  for (Eigen::Index i = 0; i < pi0.size(); ++i) {
    if (pi0(i) <= 0.0) continue;
    last_positive = static_cast<int>(i);
    acc += pi0(i);
    if (u < acc) {
      chain.current_ = static_cast<int>(i);
      return chain;
    }
  }
  chain.current_ = last_positive;
  return chain;
}

int step(ChainState& chain, const TransitionMatrix& p) {
  chain.current_ = p.sample_row(chain.current_, chain.stream_.uniform());
  return chain.current_;
}

}  // namespace missa
