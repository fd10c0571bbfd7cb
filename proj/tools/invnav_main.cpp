#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "invnav/errors.hpp"
#include "invnav/experiments.hpp"

namespace {

std::filesystem::path default_out(const std::string& experiment) {
  const char* env = std::getenv("INVNAV_OUT");
  const std::filesystem::path root = env && *env ? env : "invnav_out";
  return root / experiment;
}

int list() {
  for (const auto& info : invnav::experiment_catalog()) {
    std::cout << info.name << "  " << info.claim << "\n";
  }
  return 0;
}

int describe(const std::string& name) {
  const auto& info = invnav::describe_experiment(name);
  std::cout << "experiment: " << info.name << "\n"
            << "claim: " << info.claim << "\n"
            << "scenario:\n"
            << info.scenario;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Invariant filtering and smoothing experiments on SE(2)"};
  std::vector<std::string> positional;
  std::string config;
  std::uint64_t seed = 0;
  std::string out;
  std::size_t steps = 0;
  unsigned threads = 0;
  bool quiet = false;
  app.add_option("command", positional,
                 "<experiment> | list | describe <experiment>")
      ->required();
  app.add_option("--config", config, "JSON file with scenario overrides")
      ->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "base seed");
  app.add_option("--out", out, "output directory (default $INVNAV_OUT/<experiment>)");
  app.add_option("--steps", steps, "override the experiment's length");
  app.add_option("--threads", threads, "worker threads (0: all cores)");
  app.add_flag("--quiet", quiet, "print only failures");
  CLI11_PARSE(app, argc, argv);

  try {
    const std::string& cmd = positional.front();
    if (cmd == "list") return list();
    if (cmd == "describe") {
      if (positional.size() != 2) {
        std::cerr << "usage: invnav describe <experiment>\n";
        return 2;
      }
      return describe(positional[1]);
    }
    if (positional.size() != 1) {
      std::cerr << "unexpected arguments after '" << cmd << "'\n";
      return 2;
    }

    invnav::ExperimentSpec spec;
    spec.name = cmd;
    invnav::describe_experiment(cmd);  // fail before touching the filesystem
    if (!config.empty()) spec.config = config;
    spec.seed = seed;
    if (steps > 0) spec.steps = steps;
    spec.out_dir = out.empty() ? default_out(cmd) : std::filesystem::path(out);
    spec.threads = threads;

    const invnav::ExperimentResult result = invnav::run_experiment(spec);
    for (const auto& c : result.checks) {
      if (quiet && c.pass) continue;
      std::cout << (c.pass ? "PASS " : "FAIL ") << result.name << "." << c.name << ": "
                << c.measured << " " << c.relation << " " << c.threshold << "\n";
    }
    if (!quiet) std::cout << "outputs: " << spec.out_dir->string() << "\n";
    return result.passed() ? 0 : 1;
  } catch (const invnav::UnknownExperiment& e) {
    std::cerr << "error: " << e.what() << " (see 'invnav list')\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
