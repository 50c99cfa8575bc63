// Command-line front end: run the study, decompose chains, fit decay rates
// and compute objective weights.

#include <charconv>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "missa/error.hpp"
#include "missa/experiment.hpp"
#include "missa/io.hpp"

namespace {

using missa::Error;
using missa::ErrorCode;
using nlohmann::json;

void print_error(const std::string& code, const std::string& message) {
  std::cerr << json{{"error", code}, {"message", message}}.dump() << '\n';
}

std::uint64_t parse_seed(const std::string& token) {
  std::uint64_t value = 0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    throw Error(ErrorCode::InvalidSpec, "bad seed '" + token + "'");
  }
  return value;
}

// "1,2,7" or "1-11" or a mix ("1-3,10").
std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto dash = item.find('-');
    if (dash == std::string::npos) {
      seeds.push_back(parse_seed(item));
      continue;
    }
    const auto first = parse_seed(item.substr(0, dash));
    const auto last = parse_seed(item.substr(dash + 1));
    if (last < first) throw Error(ErrorCode::InvalidSpec, "descending seed range '" + item + "'");
    for (auto s = first; s <= last; ++s) seeds.push_back(s);
  }
  return seeds;
}

void emit_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << json{{"warning", w}}.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Markovian incremental stochastic subgradient toolkit"};
  app.require_subcommand(1);

  // run
  auto* run_cmd = app.add_subcommand("run", "Run a method/noise test over several seeds");
  std::string method = "m1", schedule = "diminishing", seeds_text = "0", out_dir;
  int test = 1, threads = 1;
  long budget = 100000, stride = 1;
  std::optional<double> lambda, a, xi, noise_scale;
  run_cmd->add_option("--method", method, "m1|m2|m3|m4")->capture_default_str();
  run_cmd->add_option("--test", test, "Noise test 1..6")->capture_default_str();
  run_cmd->add_option("--schedule", schedule, "diminishing|constant")->capture_default_str();
  run_cmd->add_option("--lambda", lambda, "Constant stepsize");
  run_cmd->add_option("--a", a, "Diminishing stepsize scale a");
  run_cmd->add_option("--xi", xi, "Diminishing stepsize exponent xi");
  run_cmd->add_option("--budget", budget, "Iterations K")->capture_default_str();
  run_cmd->add_option("--seeds", seeds_text, "Seed list, e.g. 1-11 or 3,5,8")->capture_default_str();
  run_cmd->add_option("--out", out_dir, "Output directory for traces and summary.json");
  run_cmd->add_option("--stride", stride, "Record every s-th iterate")->capture_default_str();
  run_cmd->add_option("--threads", threads, "Seeds run in parallel")->capture_default_str();
  run_cmd->add_option("--noise-scale", noise_scale, "Override the scale of tests 3..6");

  // run-config
  auto* config_cmd = app.add_subcommand("run-config", "Run a RunConfig JSON file");
  std::string config_file, trace_out;
  config_cmd->add_option("--config", config_file, "RunConfig JSON")->required();
  config_cmd->add_option("--out", trace_out, "Trace CSV path (stdout when omitted)");

  // decompose
  auto* decompose_cmd = app.add_subcommand("decompose", "Classify a transition matrix");
  std::string matrix_file;
  decompose_cmd->add_option("--matrix", matrix_file, "Matrix text file")->required();

  // decay
  auto* decay_cmd = app.add_subcommand("decay", "Fit the decay of ||P^{dk} - Delta||");
  int k_max = 50;
  decay_cmd->add_option("--matrix", matrix_file, "Matrix text file")->required();
  decay_cmd->add_option("--kmax", k_max, "Largest block power")->capture_default_str();

  // weights
  auto* weights_cmd = app.add_subcommand("weights", "Objective weights from chain initial distributions");
  std::vector<std::string> init_files;
  weights_cmd->add_option("--matrix", matrix_file, "Matrix text file")->required();
  weights_cmd->add_option("--init", init_files, "Initial distribution file(s)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error("UsageError", e.what());
    return e.get_exit_code() == 0 ? 1 : e.get_exit_code();
  }

  try {
    if (*run_cmd) {
      missa::ExperimentSpec spec;
      spec.method = missa::parse_method(method);
      spec.test = test;
      spec.options.regime = missa::parse_regime(schedule);
      spec.options.a = a;
      spec.options.xi = xi;
      spec.options.lambda = lambda;
      spec.options.noise_scale = noise_scale;
      spec.options.budget = budget;
      spec.options.stride = stride;
      spec.seeds = parse_seeds(seeds_text);
      spec.output_dir = out_dir;
      spec.threads = threads;
      const auto summary = missa::run_suite(spec);
      emit_warnings(summary.warnings);
      std::cout << missa::io::summary_to_json(summary).dump(2) << '\n';
    } else if (*config_cmd) {
      const std::filesystem::path path(config_file);
      const auto config =
          missa::io::run_config_from_json(missa::io::read_json_file(path), path.parent_path());
      const auto trace = missa::run(config);
      emit_warnings(trace.warnings);
      if (trace_out.empty()) {
        missa::io::write_trace_csv(std::cout, trace);
      } else {
        std::ofstream out(trace_out);
        if (!out) throw Error(ErrorCode::IoError, "cannot write " + trace_out);
        missa::io::write_trace_csv(out, trace);
      }
    } else if (*decompose_cmd) {
      const auto p = missa::validate_stochastic(missa::io::read_matrix_file(matrix_file));
      std::cout << missa::io::decomposition_to_json(missa::decompose(p)).dump() << '\n';
    } else if (*decay_cmd) {
      const auto p = missa::validate_stochastic(missa::io::read_matrix_file(matrix_file));
      std::cout << missa::io::decay_to_json(missa::decay_diagnostic(p, k_max)).dump(2) << '\n';
    } else if (*weights_cmd) {
      const auto p = missa::validate_stochastic(missa::io::read_matrix_file(matrix_file));
      std::vector<missa::Vector> init;
      for (const auto& f : init_files) init.push_back(missa::io::read_distribution_file(f));
      const auto w = missa::weights_from_chains(init, missa::decompose(p));
      std::cout << json{{"weights", std::vector<double>(w.data(), w.data() + w.size())}}.dump()
                << '\n';
    }
  } catch (const Error& e) {
    print_error(missa::to_string(e.code()), e.what());
    return 2;
  } catch (const std::exception& e) {
    print_error("InternalError", e.what());
    return 3;
  }
  return 0;
}
