#include "missa/optimizer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

#include <omp.h>

#include "missa/error.hpp"

namespace missa {

StepsizeSchedule StepsizeSchedule::diminishing_block(double a, double xi, int delta) {
  if (!(a > 0.0) || !std::isfinite(a)) {
    throw Error(ErrorCode::InvalidParameters, "diminishing stepsize needs a > 0");
  }
  if (!(xi > 2.0 / 3.0 && xi <= 1.0)) {
    throw Error(ErrorCode::InvalidParameters, "diminishing stepsize needs 2/3 < xi <= 1");
  }
  if (delta < 1) {
    throw Error(ErrorCode::InvalidParameters, "stepsize block length must be >= 1");
  }
  StepsizeSchedule s;
  s.kind_ = Kind::DiminishingBlock;
  s.a_ = a;
  s.xi_ = xi;
  s.delta_ = delta;
  return s;
}

StepsizeSchedule StepsizeSchedule::constant(double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw Error(ErrorCode::InvalidParameters, "constant stepsize needs lambda > 0");
  }
  StepsizeSchedule s;
  s.kind_ = Kind::Constant;
  s.lambda_ = lambda;
  return s;
}

double StepsizeSchedule::at(long k) const {
  if (kind_ == Kind::Constant) return lambda_;
  const long block = k / delta_;
  return a_ / std::pow(static_cast<double>(block + 1), xi_);
}

double stepsize(const StepsizeSchedule& schedule, long k) { return schedule.at(k); }

void validate(const RunConfig& c) {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidConfig, what); };
  const int m = c.transitions.size();
  if (c.problem.size() != m) fail("problem component count differs from chain state count");
  if (c.decomposition.state_count() != m) fail("decomposition does not match P");
  if (c.chains.empty()) fail("at least one chain is required");
  for (const auto& chain : c.chains) validate_distribution(chain.initial, m);
  if (c.x0.size() != c.problem.dim() || !c.problem.box().contains(c.x0)) {
    fail("x0 must lie in the feasible box");
  }
  if (c.budget < 1) fail("budget must be >= 1");
  if (c.stride < 1) fail("trace stride must be >= 1");
  if (c.subgradient_scale.size() != 0 &&
      (c.subgradient_scale.size() != m || !c.subgradient_scale.allFinite())) {
    fail("subgradient scale must have one finite entry per component");
  }
  if (c.threads < 1) fail("threads must be >= 1");
}

RunConfig make_run_config(ConvexSumProblem problem, TransitionMatrix transitions,
                          std::vector<ChainSpec> chains, StepsizeSchedule schedule,
                          NoiseModel noise, Vector x0, long budget) {
  ChainDecomposition d = decompose(transitions);
  RunConfig c{std::move(problem), std::move(transitions), std::move(d),
              std::move(chains),  schedule,                noise,
              std::move(x0),      budget};
  validate(c);
  return c;
}

MissaState::MissaState(const RunConfig& config) : x_(config.x0) {
  const int n = config.problem.dim();
  average_ = Vector::Zero(n);
  lanes_.reserve(config.chains.size());
  for (std::size_t l = 0; l < config.chains.size(); ++l) {
    const auto& spec = config.chains[l];
    lanes_.push_back(Lane{
        ChainState::from_distribution(spec.initial, spec.seed, l),
        RandomStream(spec.seed, l, StreamPurpose::Noise),
        Vector::Zero(n), Vector::Zero(n), Vector::Zero(n), 0.0});
  }
}

std::vector<int> MissaState::states() const {
  std::vector<int> out;
  out.reserve(lanes_.size());
  for (const auto& lane : lanes_) out.push_back(lane.chain.current());
  return out;
}

double MissaState::max_subgradient_norm() const {
  double c = 0.0;
  for (const auto& lane : lanes_) c = std::max(c, lane.max_subgradient_norm);
  return c;
}

void subiterate(Lane& lane, const Vector& x, const RunConfig& config, long k,
                double lambda) {
  const int s = step(lane.chain, config.transitions);
  config.problem.component(s).subgradient(x, lane.subgradient);
  if (config.subgradient_scale.size() != 0) {
    lane.subgradient *= config.subgradient_scale(s);
  }
  lane.max_subgradient_norm = std::max(lane.max_subgradient_norm, lane.subgradient.norm());
  if (config.noise.is_zero()) {
    lane.iterate = x - lambda * lane.subgradient;
  } else {
    sample_noise(config.noise, k + 1, lane.noise_stream, lane.noise);
    lane.iterate = x - lambda * (lane.subgradient + lane.noise);
  }
}

namespace {

// Fixed-order average and projection; shared by both kernels so the
// arithmetic is identical.
void combine(std::vector<Lane>& lanes, Vector& average, Vector& x, const Box& box) {
  average = lanes.front().iterate;
  for (std::size_t l = 1; l < lanes.size(); ++l) average += lanes[l].iterate;
  average /= static_cast<double>(lanes.size());
  x = average;
  box.project_in_place(x);
}

}  // namespace

void missa_step(MissaState& state, const RunConfig& config, long k, double lambda) {
  for (auto& lane : state.lanes_) subiterate(lane, state.x_, config, k, lambda);
  combine(state.lanes_, state.average_, state.x_, config.problem.box());
}

void missa_step_parallel(MissaState& state, const RunConfig& config, long k,
                         double lambda, int threads) {
  const auto lanes = static_cast<std::ptrdiff_t>(state.lanes_.size());
#pragma omp parallel for schedule(static) num_threads(threads) if (lanes > 1)
  for (std::ptrdiff_t l = 0; l < lanes; ++l) {
    subiterate(state.lanes_[static_cast<std::size_t>(l)], state.x_, config, k, lambda);
  }
  combine(state.lanes_, state.average_, state.x_, config.problem.box());
}

namespace {

class Recorder {
 public:
  Recorder(const RunConfig& config, Trace& trace) : config_(config), trace_(trace) {
    trace_.first_crossing.assign(config.thresholds.size(), -1);
    trace_.best_f = std::numeric_limits<double>::infinity();
    trace_.tail_best_f = std::numeric_limits<double>::infinity();
    tail_start_ = config.budget - config.budget / 10;
  }

  void observe(long k, const MissaState& state) {
    const double f = objective(config_.problem, state.x());
    if (f < trace_.best_f) {
      trace_.best_f = f;
      trace_.best_k = k;
      trace_.best_x = state.x();
    }
    if (k >= tail_start_) trace_.tail_best_f = std::min(trace_.tail_best_f, f);
    for (std::size_t t = 0; t < config_.thresholds.size(); ++t) {
      if (trace_.first_crossing[t] < 0 && f < config_.thresholds[t]) {
        trace_.first_crossing[t] = k;
      }
    }
    if (k % config_.stride == 0 || k == config_.budget) {
      trace_.records.push_back(
          {k, f, trace_.best_f, config_.schedule.at(k), state.states()});
    }
  }

 private:
  const RunConfig& config_;
  Trace& trace_;
  long tail_start_ = 0;
};

}  // namespace

Trace run(const RunConfig& config) {
  validate(config);
  Trace trace;
  {
    const auto missing = unreachable_classes(
        config.transitions, config.decomposition,
        [&] {
          std::vector<Vector> init;
          for (const auto& c : config.chains) init.push_back(c.initial);
          return init;
        }());
    for (int v : missing) {
      std::ostringstream os;
      os << "recurrent class " << v + 1
         << " is unreachable from every chain's initial support; its agents are never visited";
      trace.warnings.push_back(os.str());
    }
  }

  MissaState state(config);
  Recorder recorder(config, trace);
  const auto start = std::chrono::steady_clock::now();
  recorder.observe(0, state);

  const auto lanes = static_cast<std::ptrdiff_t>(state.lanes_.size());
  if (config.threads <= 1 || lanes <= 1) {
    for (long k = 0; k < config.budget; ++k) {
      missa_step(state, config, k, config.schedule.at(k));
      recorder.observe(k + 1, state);
    }
  } else {
    // One team for the whole run; the averaging step is the barrier.
#pragma omp parallel num_threads(config.threads)
    {
      for (long k = 0; k < config.budget; ++k) {
        const double lambda = config.schedule.at(k);
#pragma omp for schedule(static)
        for (std::ptrdiff_t l = 0; l < lanes; ++l) {
          subiterate(state.lanes_[static_cast<std::size_t>(l)], state.x_, config, k,
                     lambda);
        }
#pragma omp single
        {
          combine(state.lanes_, state.average_, state.x_, config.problem.box());
          recorder.observe(k + 1, state);
        }
      }
    }
  }

  const auto stop = std::chrono::steady_clock::now();
  trace.wall_ns = std::chrono::duration<double, std::nano>(stop - start).count();
  trace.ns_per_iteration = trace.wall_ns / static_cast<double>(config.budget);
  trace.final_x = state.x_;
  trace.realized_subgradient_bound = state.max_subgradient_norm();
  return trace;
}

Baseline make_baseline(BaselineKind kind, int m, const std::vector<StateSet>& neighbors) {
  if (m < 1) throw Error(ErrorCode::InvalidParameters, "baseline needs m >= 1");
  Matrix p = Matrix::Zero(m, m);
  Vector initial;
  switch (kind) {
    case BaselineKind::Cyclic:
      for (int i = 0; i < m; ++i) p(i, (i + 1) % m) = 1.0;
      initial = Vector::Unit(m, 0);
      break;
    case BaselineKind::UniformRandom:
      p.setConstant(1.0 / m);
      initial = Vector::Constant(m, 1.0 / m);
      break;
    case BaselineKind::EqualProbability: {
      if (static_cast<int>(neighbors.size()) != m) {
        throw Error(ErrorCode::InvalidNeighbors, "need one neighbor set per agent");
      }
      for (int i = 0; i < m; ++i) {
        const auto& ni = neighbors[i];
        if (static_cast<int>(ni.size()) > m - 1) {
          throw Error(ErrorCode::InvalidNeighbors, "neighbor set larger than m - 1");
        }
        for (int j : ni) {
          if (j == i) {
            throw Error(ErrorCode::InvalidNeighbors, "agent listed as its own neighbor");
          }
          if (j < 0 || j >= m) {
            throw Error(ErrorCode::InvalidNeighbors, "neighbor index out of range");
          }
          if (p(i, j) != 0.0) {
            throw Error(ErrorCode::InvalidNeighbors, "duplicate neighbor");
          }
          p(i, j) = 1.0 / m;
        }
        p(i, i) = 1.0 - static_cast<double>(ni.size()) / m;
      }
      initial = Vector::Constant(m, 1.0 / m);
      break;
    }
  }
  return Baseline{validate_stochastic(p), std::move(initial)};
}

}  // namespace missa
