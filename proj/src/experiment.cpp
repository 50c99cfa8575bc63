#include "missa/experiment.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "missa/error.hpp"
#include "missa/io.hpp"

namespace missa {

namespace {
std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}
}  // namespace

Method parse_method(const std::string& name) {
  const auto n = lower(name);
  if (n == "m1") return Method::M1;
  if (n == "m2") return Method::M2;
  if (n == "m3") return Method::M3;
  if (n == "m4") return Method::M4;
  throw Error(ErrorCode::UnknownMethod, "unknown method '" + name + "'");
}

const char* to_string(Method method) {
  switch (method) {
    case Method::M1: return "m1";
    case Method::M2: return "m2";
    case Method::M3: return "m3";
    case Method::M4: return "m4";
  }
  return "?";
}

Regime parse_regime(const std::string& name) {
  const auto n = lower(name);
  if (n == "diminishing") return Regime::Diminishing;
  if (n == "constant") return Regime::Constant;
  throw Error(ErrorCode::InvalidSpec, "unknown stepsize schedule '" + name + "'");
}

const char* to_string(Regime regime) {
  return regime == Regime::Diminishing ? "diminishing" : "constant";
}

namespace study {

Matrix system_matrix() {
  struct Entry {
    int i, j;
    double value;
  };
  // 1-based (row, column, value).
  static const Entry entries[] = {
      {1, 2, 0.5},   {1, 3, 0.1},   {1, 4, 0.2},   {1, 14, 0.25}, {1, 15, 0.1},
      {2, 6, 0.4},   {2, 7, 0.15},  {2, 12, 0.3},  {2, 16, 0.45}, {2, 19, 0.1},
      {2, 20, 0.2},  {3, 13, 0.02}, {3, 14, 0.06}, {4, 1, 0.12},  {4, 2, 0.21},
      {4, 3, 0.3},   {4, 7, 0.5},   {4, 13, 0.4},  {4, 14, 0.1},  {4, 15, 0.18},
      {4, 19, 0.1},  {4, 20, 0.14}, {5, 1, 0.8},   {5, 2, 0.4},   {5, 8, 1.2},
      {5, 9, 1.0},   {5, 10, 0.85}, {5, 17, 0.4},  {5, 18, 0.7},  {5, 19, 0.1},
      {6, 2, 0.25},  {6, 3, 0.34},  {6, 8, 0.45},  {6, 9, 0.35},  {6, 13, 0.18},
      {6, 14, 0.22}, {7, 13, 0.05}, {7, 14, 0.08},
  };
  Matrix a = Matrix::Zero(7, 20);
  for (const auto& e : entries) a(e.i - 1, e.j - 1) = e.value;
  return a;
}

Box feasible_box() {
  Vector l(20), u(20);
  l << -1, -0.5, -1.5, -1.3, 0, 0.1, 0.3, -0.2, -1.0, 0, -0.25, -0.1, 0.3, 0.1, 0,
      -1.1, 0.35, 0.15, 0, -0.45;
  u << 2.0, 1.5, 2.3, 3.0, 2.0, 1.8, 2.25, 1.7, 1.5, 2.0, 2.8, 1.75, 2.35, 1.95, 2.0,
      1.0, 2.5, 1.35, 2.0, 3.0;
  return Box(l, u);
}

TransitionMatrix transition_matrix() {
  Matrix p(7, 7);
  p << 0, 0, 0.2, 0.8, 0, 0, 0,  //
      0, 0, 0.15, 0.85, 0, 0, 0,  //
      0.4, 0.6, 0, 0, 0, 0, 0,    //
      0.5, 0.5, 0, 0, 0, 0, 0,    //
      0, 0, 0, 0, 0, 0.8, 0.2,    //
      0, 0, 0, 0, 0.8, 0, 0.2,    //
      0, 0, 0, 0, 0.6, 0.4, 0;
  return validate_stochastic(p);
}

TransitionMatrix illustration_matrix() {
  Matrix p(9, 9);
  p << 0, 0, 0.5, 0.5, 0, 0, 0, 0, 0,      //
      0, 0, 0.3, 0.7, 0, 0, 0, 0, 0,       //
      0.2, 0.8, 0, 0, 0, 0, 0, 0, 0,       //
      1, 0, 0, 0, 0, 0, 0, 0, 0,           //
      0, 0, 0, 0, 0, 0, 1, 0, 0,           //
      0, 0, 0, 0, 1, 0, 0, 0, 0,           //
      0, 0, 0, 0, 0, 1, 0, 0, 0,           //
      0, 0, 0.1, 0, 0, 0.2, 0, 0.7, 0,     //
      0.1, 0, 0, 0, 0, 0, 0.9, 0, 0;
  return validate_stochastic(p);
}

std::vector<StateSet> neighbor_sets() {
  return {{1, 2}, {0, 2, 6}, {0, 1, 5}, {4, 5}, {3}, {2, 3, 6}, {1, 5}};
}

NoiseModel noise_for_test(int test) {
  switch (test) {
    case 1: return NoiseModel::zero();
    case 2: return NoiseModel::uniform_decaying();
    case 3: return NoiseModel::uniform_scaled(0.1);
    case 4: return NoiseModel::uniform_scaled(0.01);
    case 5: return NoiseModel::normal_scaled(0.1);
    case 6: return NoiseModel::normal_scaled(0.01);
    default: break;
  }
  throw Error(ErrorCode::UnknownTest, "noise test must be in 1..6, got " + std::to_string(test));
}

StepsizeDefaults stepsize_defaults(Method method) {
  switch (method) {
    case Method::M1: return {2.0, 0.7, 5e-4};
    case Method::M2: return {2.0, 0.7, 1e-3};
    case Method::M3:
    case Method::M4: return {2.5, 0.667, 1e-3};
  }
  return {2.0, 0.7, 5e-4};
}

}  // namespace study

RunConfig build_experiment(Method method, int test, const ExperimentOptions& options) {
  NoiseModel noise = study::noise_for_test(test);
  if (options.noise_scale) {
    if (test < 3) {
      throw Error(ErrorCode::InvalidSpec, "noise scale override applies to tests 3..6 only");
    }
    noise.scale = *options.noise_scale;
  }

  const Matrix a = study::system_matrix();
  Box box = study::feasible_box();
  const Vector y = box.midpoint();
  const Vector b = a * y;
  Vector x0 = project(box, Vector::Zero(box.dim()));
  ConvexSumProblem problem = make_l1_problem(a, b, box);

  // Objective weights come from the two-chain setup for every method.
  const TransitionMatrix missa_p = study::transition_matrix();
  const ChainDecomposition missa_d = decompose(missa_p);
  const std::vector<Vector> missa_init{Vector::Unit(7, 0), Vector::Unit(7, 4)};
  const Vector weights = weights_from_chains(missa_init, missa_d);
  problem.set_weights(weights);

  std::optional<TransitionMatrix> p;
  std::vector<Vector> init;
  switch (method) {
    case Method::M1:
      p = missa_p;
      init = missa_init;
      break;
    case Method::M2: {
      auto base = make_baseline(BaselineKind::EqualProbability, 7, study::neighbor_sets());
      p = std::move(base.transitions);
      init = {Vector::Unit(7, 4)};
      break;
    }
    case Method::M3: {
      auto base = make_baseline(BaselineKind::Cyclic, 7);
      p = std::move(base.transitions);
      init = {base.initial};
      break;
    }
    case Method::M4: {
      auto base = make_baseline(BaselineKind::UniformRandom, 7);
      p = std::move(base.transitions);
      init = {base.initial};
      break;
    }
  }

  const auto defaults = study::stepsize_defaults(method);
  ChainDecomposition d = method == Method::M1 ? missa_d : decompose(*p);
  // Single-chain baselines use the classical block length 1.
  const int block = method == Method::M1 ? d.global_period : 1;
  StepsizeSchedule schedule =
      options.regime == Regime::Diminishing
          ? StepsizeSchedule::diminishing_block(options.a.value_or(defaults.a),
                                                options.xi.value_or(defaults.xi), block)
          : StepsizeSchedule::constant(options.lambda.value_or(defaults.lambda));

  std::vector<ChainSpec> chains;
  for (const auto& pi : init) chains.push_back({pi, options.seed});

  RunConfig config{std::move(problem), std::move(*p), std::move(d), std::move(chains),
                   schedule,           noise,         std::move(x0), options.budget};
  config.stride = options.stride;
  config.thresholds = kCrossingThresholds;
  // Single-chain baselines descend on w_i f_i.
  if (method != Method::M1) config.subgradient_scale = weights;
  validate(config);
  return config;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = static_cast<std::size_t>(std::ceil(pos));
  if (lo == hi || values[lo] == values[hi]) return values[lo];
  if (std::isinf(values[hi])) return values[hi];
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

SuiteSummary run_suite(const ExperimentSpec& spec) {
  if (spec.seeds.empty()) throw Error(ErrorCode::InvalidSpec, "seed list is empty");
  if (spec.threads < 1) throw Error(ErrorCode::InvalidSpec, "threads must be >= 1");

  if (!spec.output_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(spec.output_dir, ec);
    if (ec) {
      throw Error(ErrorCode::IoError,
                  "cannot create " + spec.output_dir.string() + ": " + ec.message());
    }
  }

  const RunConfig base = build_experiment(spec.method, spec.test, spec.options);
  SuiteSummary summary;
  summary.method = spec.method;
  summary.test = spec.test;
  summary.regime = spec.options.regime;
  summary.budget = spec.options.budget;
  summary.chains = static_cast<int>(base.chains.size());
  summary.seeds.resize(spec.seeds.size());

  std::vector<Trace> traces(spec.seeds.size());
  const auto count = static_cast<std::ptrdiff_t>(spec.seeds.size());
#pragma omp parallel for schedule(dynamic) num_threads(spec.threads)
  for (std::ptrdiff_t s = 0; s < count; ++s) {
    RunConfig config = base;
    for (auto& chain : config.chains) chain.seed = spec.seeds[static_cast<std::size_t>(s)];
    traces[static_cast<std::size_t>(s)] = run(config);
  }

  for (std::size_t s = 0; s < traces.size(); ++s) {
    const Trace& t = traces[s];
    SeedResult& r = summary.seeds[s];
    r.seed = spec.seeds[s];
    r.first_crossing = t.first_crossing;
    r.best_f = t.best_f;
    r.best_k = t.best_k;
    r.final_f = objective(base.problem, t.final_x);
    r.tail_best_f = t.tail_best_f;
    r.ns_per_iteration = t.ns_per_iteration;
    r.realized_subgradient_bound = t.realized_subgradient_bound;
    if (!spec.output_dir.empty()) {
      r.trace_file = spec.output_dir / ("trace_seed" + std::to_string(r.seed) + ".csv");
      std::ofstream out(r.trace_file);
      if (!out) throw Error(ErrorCode::IoError, "cannot write " + r.trace_file.string());
      io::write_trace_csv(out, t);
      if (!out) throw Error(ErrorCode::IoError, "failed writing " + r.trace_file.string());
    }
    if (s == 0) summary.warnings = t.warnings;
  }

  std::vector<double> best, tail, ns;
  for (const auto& r : summary.seeds) {
    best.push_back(r.best_f);
    tail.push_back(r.tail_best_f);
    ns.push_back(r.ns_per_iteration);
  }
  summary.median_best_f = quantile(best, 0.5);
  summary.median_tail_best_f = quantile(tail, 0.5);
  double ns_sum = 0.0;
  for (double v : ns) ns_sum += v;
  summary.mean_ns_per_iteration = ns_sum / static_cast<double>(ns.size());

  for (std::size_t t = 0; t < kCrossingThresholds.size(); ++t) {
    CrossingStats c;
    c.threshold = kCrossingThresholds[t];
    std::vector<double> ks;
    for (const auto& r : summary.seeds) {
      const long k = r.first_crossing[t];
      if (k >= 0) ++c.crossed;
      ks.push_back(k >= 0 ? static_cast<double>(k) : std::numeric_limits<double>::infinity());
    }
    c.median = quantile(ks, 0.5);
    c.q1 = quantile(ks, 0.25);
    c.q3 = quantile(ks, 0.75);
    summary.crossings.push_back(c);
  }

  if (!spec.output_dir.empty()) {
    const auto path = spec.output_dir / "summary.json";
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    out << io::summary_to_json(summary).dump(2) << '\n';
  }
  return summary;
}

DecayFit fit_log_linear(const std::vector<double>& values) {
  std::vector<double> ks, logs;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] > 1e-14) {
      ks.push_back(static_cast<double>(i + 1));
      logs.push_back(std::log(values[i]));
    }
  }
  if (ks.size() < 2) {
    throw Error(ErrorCode::DegenerateFit,
                "fewer than two values above 1e-14; the powers have already converged");
  }
  const auto n = static_cast<double>(ks.size());
  double mk = 0.0, ml = 0.0;
  for (std::size_t i = 0; i < ks.size(); ++i) {
    mk += ks[i];
    ml += logs[i];
  }
  mk /= n;
  ml /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < ks.size(); ++i) {
    sxy += (ks[i] - mk) * (logs[i] - ml);
    sxx += (ks[i] - mk) * (ks[i] - mk);
  }
  const double slope = sxy / sxx;
  const double intercept = ml - slope * mk;
  double sse = 0.0;
  for (std::size_t i = 0; i < ks.size(); ++i) {
    const double r = logs[i] - (intercept + slope * ks[i]);
    sse += r * r;
  }
  DecayFit fit;
  fit.alpha_hat = std::exp(intercept);
  fit.beta_hat = -slope;
  fit.rmse = std::sqrt(sse / n);
  fit.k_first = static_cast<int>(ks.front());
  fit.k_last = static_cast<int>(ks.back());
  fit.points = static_cast<int>(ks.size());
  return fit;
}

DecayReport decay_diagnostic(const TransitionMatrix& p, int k_max) {
  if (k_max < 5) throw Error(ErrorCode::InvalidParameters, "decay diagnostic needs k_max >= 5");
  const ChainDecomposition d = decompose(p);
  DecayReport report;
  report.delta = d.global_period;

  const Matrix block = matrix_power(p.matrix(), d.global_period);
  Matrix power = block;
  for (int k = 1; k <= k_max; ++k) {
    report.norms.push_back((power - d.power_limit).cwiseAbs().rowwise().sum().maxCoeff());
    if (!d.transient.empty()) {
      double worst = 0.0;
      for (int i : d.transient) {
        double mass = 0.0;
        for (int j : d.transient) mass += power(i, j);
        worst = std::max(worst, mass);
      }
      report.transient_mass.push_back(worst);
    }
    power = power * block;
  }
  report.matrix_fit = fit_log_linear(report.norms);
  if (!d.transient.empty()) report.transient_fit = fit_log_linear(report.transient_mass);
  return report;
}

}  // namespace missa
