#include "missa/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "missa/error.hpp"

namespace missa::io {

namespace {

[[noreturn]] void parse_fail(const std::string& what) {
  throw Error(ErrorCode::ParseError, what);
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return in;
}

double parse_double(std::string_view token) {
  double value = 0.0;
  // from_chars rejects a leading '+'.
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    parse_fail("not a number: '" + std::string(token) + "'");
  }
  return value;
}

long parse_long(std::string_view token) {
  long value = 0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    parse_fail("not an integer: '" + std::string(token) + "'");
  }
  return value;
}

Vector vector_from_json(const json& j, const char* what) {
  if (!j.is_array()) parse_fail(std::string(what) + " must be an array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) parse_fail(std::string(what) + " must contain numbers");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

json vector_to_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Matrix matrix_from_json(const json& j) {
  if (!j.is_array() || j.empty()) parse_fail("matrix must be a non-empty array of rows");
  const auto m = static_cast<Eigen::Index>(j.size());
  Matrix p(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const Vector row = vector_from_json(j[static_cast<std::size_t>(i)], "matrix row");
    if (row.size() != m) parse_fail("matrix must be square");
    p.row(i) = row.transpose();
  }
  return p;
}

json matrix_to_json(const Matrix& p) {
  json out = json::array();
  for (Eigen::Index i = 0; i < p.rows(); ++i) out.push_back(vector_to_json(p.row(i).transpose()));
  return out;
}

json states_to_json(const StateSet& s) {
  json out = json::array();
  for (int i : s) out.push_back(i + 1);
  return out;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_relative() && !base.empty() ? base / path : path;
}

}  // namespace

std::string format_double(double value) {
  char buffer[64];
  const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof buffer, value);
  return std::string(buffer, ptr);
}

Matrix read_matrix(std::istream& in) {
  std::string token;
  if (!(in >> token)) parse_fail("matrix file is empty");
  const long m = parse_long(token);
  if (m < 1) parse_fail("matrix size must be >= 1");
  Matrix p(m, m);
  for (long i = 0; i < m; ++i) {
    for (long j = 0; j < m; ++j) {
      if (!(in >> token)) parse_fail("matrix file ends before " + std::to_string(m * m) + " entries");
      p(i, j) = parse_double(token);
    }
  }
  if (in >> token) parse_fail("unexpected trailing token '" + token + "' in matrix file");
  return p;
}

Matrix read_matrix_file(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_matrix(in);
}

void write_matrix(std::ostream& out, const Matrix& p) {
  out << p.rows() << '\n';
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    for (Eigen::Index j = 0; j < p.cols(); ++j) {
      out << (j ? " " : "") << format_double(p(i, j));
    }
    out << '\n';
  }
}

Vector read_distribution(std::istream& in) {
  std::vector<double> values;
  std::string token;
  while (in >> token) values.push_back(parse_double(token));
  if (values.empty()) parse_fail("distribution file is empty");
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

Vector read_distribution_file(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_distribution(in);
}

json decomposition_to_json(const ChainDecomposition& d) {
  json classes = json::array();
  for (const auto& c : d.classes) classes.push_back(states_to_json(c));
  return json{{"classes", classes},
              {"periods", d.class_periods},
              {"transient", states_to_json(d.transient)},
              {"delta", d.global_period}};
}

ConvexSumProblem problem_from_json(const json& j) {
  try {
    const long n = j.at("n").get<long>();
    if (n < 1) parse_fail("problem n must be >= 1");
    const Vector b = vector_from_json(j.at("b"), "b");
    const auto& rows = j.at("rows");
    if (!rows.is_array()) parse_fail("rows must be an array");
    Matrix a = Matrix::Zero(b.size(), n);
    std::vector<char> seen(static_cast<std::size_t>(b.size()), 0);
    for (const auto& row : rows) {
      const long i = row.at("i").get<long>();
      if (i < 1 || i > b.size()) parse_fail("row index out of range: " + std::to_string(i));
      if (seen[static_cast<std::size_t>(i - 1)]++) parse_fail("duplicate row " + std::to_string(i));
      for (const auto& entry : row.at("entries")) {
        if (!entry.is_array() || entry.size() != 2) parse_fail("row entries are [j, a_ij] pairs");
        const long col = entry[0].get<long>();
        if (col < 1 || col > n) parse_fail("column index out of range: " + std::to_string(col));
        a(i - 1, col - 1) = entry[1].get<double>();
      }
    }
    Box box(vector_from_json(j.at("lower"), "lower"), vector_from_json(j.at("upper"), "upper"));
    if (box.dim() != n) parse_fail("bounds length differs from n");
    return make_l1_problem(a, b, std::move(box));
  } catch (const json::exception& e) {
    parse_fail(std::string("problem JSON: ") + e.what());
  }
}

json problem_to_json(const ConvexSumProblem& problem) {
  const auto data = l1_data(problem);
  if (!data) throw Error(ErrorCode::InvalidProblem, "only l1 problems serialize to JSON");
  json rows = json::array();
  for (Eigen::Index i = 0; i < data->a.rows(); ++i) {
    json entries = json::array();
    for (Eigen::Index c = 0; c < data->a.cols(); ++c) {
      if (data->a(i, c) != 0.0) entries.push_back(json::array({c + 1, data->a(i, c)}));
    }
    rows.push_back({{"i", i + 1}, {"entries", entries}});
  }
  return json{{"n", problem.dim()},
              {"rows", rows},
              {"b", vector_to_json(data->b)},
              {"lower", vector_to_json(problem.box().lower())},
              {"upper", vector_to_json(problem.box().upper())}};
}

RunConfig run_config_from_json(const json& j, const std::filesystem::path& base_dir) {
  try {
    ConvexSumProblem problem =
        j.contains("problem_file")
            ? problem_from_json(read_json_file(resolve(base_dir, j.at("problem_file"))))
            : problem_from_json(j.at("problem"));
    TransitionMatrix p = validate_stochastic(
        j.contains("matrix_file")
            ? read_matrix_file(resolve(base_dir, j.at("matrix_file")))
            : matrix_from_json(j.at("matrix")));

    std::vector<ChainSpec> chains;
    for (const auto& c : j.at("chains")) {
      chains.push_back({vector_from_json(c.at("init"), "chain init"),
                        c.value("seed", std::uint64_t{0})});
    }

    const auto& s = j.at("schedule");
    const std::string kind = s.at("kind");
    ChainDecomposition d = decompose(p);
    std::optional<StepsizeSchedule> schedule;
    if (kind == "diminishing") {
      schedule = StepsizeSchedule::diminishing_block(s.at("a"), s.at("xi"),
                                                     s.value("delta", d.global_period));
    } else if (kind == "constant") {
      schedule = StepsizeSchedule::constant(s.at("lambda"));
    } else {
      parse_fail("schedule kind must be 'diminishing' or 'constant'");
    }

    NoiseModel noise;
    if (j.contains("noise")) {
      const std::string nk = j["noise"].at("kind");
      const double scale = j["noise"].value("scale", 0.0);
      if (nk == "zero") noise = NoiseModel::zero();
      else if (nk == "uniform_decaying") noise = NoiseModel::uniform_decaying();
      else if (nk == "uniform_scaled") noise = NoiseModel::uniform_scaled(scale);
      else if (nk == "normal_scaled") noise = NoiseModel::normal_scaled(scale);
      else parse_fail("unknown noise kind '" + nk + "'");
    }

    Vector x0 = j.contains("x0") ? vector_from_json(j["x0"], "x0")
                                 : project(problem.box(), Vector::Zero(problem.dim()));
    if (j.contains("weights")) {
      problem.set_weights(vector_from_json(j["weights"], "weights"));
    } else {
      std::vector<Vector> init;
      for (const auto& c : chains) init.push_back(c.initial);
      problem.set_weights(weights_from_chains(init, d));
    }

    RunConfig config{std::move(problem), std::move(p),  std::move(d),
                     std::move(chains),  *schedule,     noise,
                     std::move(x0),      j.at("budget").get<long>()};
    config.stride = j.value("stride", 1L);
    config.threads = j.value("threads", 1);
    if (j.contains("subgradient_scale")) {
      config.subgradient_scale = vector_from_json(j["subgradient_scale"], "subgradient_scale");
    }
    if (j.contains("thresholds")) config.thresholds = j["thresholds"].get<std::vector<double>>();
    validate(config);
    return config;
  } catch (const json::exception& e) {
    parse_fail(std::string("run config JSON: ") + e.what());
  }
}

json run_config_to_json(const RunConfig& c) {
  json chains = json::array();
  for (const auto& chain : c.chains) {
    chains.push_back({{"init", vector_to_json(chain.initial)}, {"seed", chain.seed}});
  }
  json schedule;
  if (c.schedule.kind() == StepsizeSchedule::Kind::DiminishingBlock) {
    schedule = {{"kind", "diminishing"},
                {"a", c.schedule.a()},
                {"xi", c.schedule.xi()},
                {"delta", c.schedule.delta()}};
  } else {
    schedule = {{"kind", "constant"}, {"lambda", c.schedule.lambda()}};
  }
  json out{{"problem", problem_to_json(c.problem)},
           {"matrix", matrix_to_json(c.transitions.matrix())},
           {"chains", chains},
           {"schedule", schedule},
           {"noise", {{"kind", to_string(c.noise.kind)}, {"scale", c.noise.scale}}},
           {"x0", vector_to_json(c.x0)},
           {"weights", vector_to_json(c.problem.weights())},
           {"budget", c.budget},
           {"stride", c.stride},
           {"threads", c.threads},
           {"thresholds", c.thresholds}};
  if (c.subgradient_scale.size() != 0) {
    out["subgradient_scale"] = vector_to_json(c.subgradient_scale);
  }
  return out;
}

void write_trace_csv(std::ostream& out, const Trace& trace) {
  out << "k,f,best_f,lambda,states\n";
  for (const auto& r : trace.records) {
    out << r.k << ',' << format_double(r.f) << ',' << format_double(r.best_f) << ','
        << format_double(r.lambda) << ',';
    for (std::size_t l = 0; l < r.states.size(); ++l) {
      out << (l ? "|" : "") << r.states[l] + 1;
    }
    out << '\n';
  }
}

std::vector<TraceRecord> read_trace_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "k,f,best_f,lambda,states") {
    parse_fail("trace CSV header must be 'k,f,best_f,lambda,states'");
  }
  std::vector<TraceRecord> records;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string_view> fields;
    std::string_view rest(line);
    for (;;) {
      const auto comma = rest.find(',');
      fields.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (fields.size() != 5) parse_fail("trace row needs 5 fields: " + line);
    TraceRecord r;
    r.k = parse_long(fields[0]);
    r.f = parse_double(fields[1]);
    r.best_f = parse_double(fields[2]);
    r.lambda = parse_double(fields[3]);
    std::string_view states = fields[4];
    while (!states.empty()) {
      const auto bar = states.find('|');
      r.states.push_back(static_cast<int>(parse_long(states.substr(0, bar))) - 1);
      if (bar == std::string_view::npos) break;
      states.remove_prefix(bar + 1);
    }
    records.push_back(std::move(r));
  }
  return records;
}

json summary_to_json(const SuiteSummary& s) {
  auto maybe = [](double v) -> json { return std::isfinite(v) ? json(v) : json(nullptr); };
  json seeds = json::array();
  for (const auto& r : s.seeds) {
    json crossings = json::object();
    for (std::size_t t = 0; t < kCrossingThresholds.size(); ++t) {
      crossings[format_double(kCrossingThresholds[t])] =
          r.first_crossing[t] >= 0 ? json(r.first_crossing[t]) : json(nullptr);
    }
    seeds.push_back({{"seed", r.seed},
                     {"first_crossing", crossings},
                     {"best_f", r.best_f},
                     {"best_k", r.best_k},
                     {"final_f", r.final_f},
                     {"tail_best_f", r.tail_best_f},
                     {"ns_per_iteration", r.ns_per_iteration},
                     {"realized_subgradient_bound", r.realized_subgradient_bound},
                     {"trace_file", r.trace_file.filename().string()}});
  }
  json crossings = json::array();
  for (const auto& c : s.crossings) {
    crossings.push_back({{"threshold", c.threshold},
                         {"crossed", c.crossed},
                         {"median", maybe(c.median)},
                         {"q1", maybe(c.q1)},
                         {"q3", maybe(c.q3)},
                         {"iqr", maybe(c.q3 - c.q1)}});
  }
  return json{{"method", to_string(s.method)},
              {"test", s.test},
              {"schedule", to_string(s.regime)},
              {"budget", s.budget},
              {"chains", s.chains},
              {"seeds", seeds},
              {"crossings", crossings},
              {"median_best_f", s.median_best_f},
              {"median_tail_best_f", s.median_tail_best_f},
              {"mean_ns_per_iteration", s.mean_ns_per_iteration},
              {"warnings", s.warnings}};
}

json decay_to_json(const DecayReport& report) {
  auto fit = [](const DecayFit& f) {
    return json{{"alpha_hat", f.alpha_hat}, {"beta_hat", f.beta_hat}, {"rmse", f.rmse},
                {"k_first", f.k_first},     {"k_last", f.k_last},     {"points", f.points}};
  };
  json out{{"delta", report.delta}, {"norms", report.norms}, {"matrix_fit", fit(report.matrix_fit)}};
  if (report.transient_fit) {
    out["transient_mass"] = report.transient_mass;
    out["transient_fit"] = fit(*report.transient_fit);
  }
  return out;
}

json read_json_file(const std::filesystem::path& path) {
  auto in = open_input(path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    parse_fail(path.string() + ": " + e.what());
  }
}

}  // namespace missa::io
