// Acceptance suite: runs every criterion at its stated tolerance and prints
// one PASS/FAIL line per criterion. Exit status is non-zero if any fails.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "invnav/experiments.hpp"

namespace {

struct Criterion {
  int id;
  const char* title;
  const char* experiment;
  std::vector<std::string> checks;  // empty: every check of the experiment
  double budget_s;
};

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> list = {
      {1, "manifold preservation", "thm3-residual", {}, 60},
      {2, "linear baseline constraint", "prop1-linear", {}, 1},
      {3, "closed forms and scalar recursion", "appB-crosscheck", {}, 10},
      {4, "convergence rates and antipode", "thm4-rates", {}, 60},
      {5, "long-run EKF vs IEKF", "fig3-convergence", {}, 600},
      {6, "odometric distance", "fig2-odometer", {}, 1},
      {7,
       "left-invariance",
       "fig1-manifold",
       {"iekf_left_invariance_gap", "ekf_left_invariance_gap"},
       60},
      {8,
       "batch GN plateau iterations",
       "smoothing-batch",
       {"invariant_plateau_iters_below_linear", "invariant_plateau_iters_below_grisetti",
        "invariant_plateau_iters_below_forster"},
       60},
      {9,
       "smoother Jacobians and information",
       "smoothing-batch",
       {"jacobian_fd_max_error", "invariant_information_gap"},
       60},
      {10, "local-minimum witness", "smoothing-window", {}, 600},
  };
  return list;
}

struct Run {
  invnav::ExperimentResult result;
  double seconds = 0.0;
  std::string error;
};

}  // namespace

int main() {
  std::map<std::string, Run> runs;
  for (const auto& c : criteria()) {
    if (runs.count(c.experiment)) continue;
    Run run;
    const auto start = std::chrono::steady_clock::now();
    try {
      invnav::ExperimentSpec spec;
      spec.name = c.experiment;
      run.result = invnav::run_experiment(spec);
    } catch (const std::exception& e) {
      run.error = e.what();
    }
    run.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    runs.emplace(c.experiment, std::move(run));
  }

  int failures = 0;
  for (const auto& c : criteria()) {
    const Run& run = runs.at(c.experiment);
    bool pass = run.error.empty();
    std::string detail = run.error.empty() ? "" : " error: " + run.error;
    std::size_t matched = 0;
    for (const auto& check : run.result.checks) {
      const bool wanted =
          c.checks.empty() ||
          std::find(c.checks.begin(), c.checks.end(), check.name) != c.checks.end();
      if (!wanted) continue;
      ++matched;
      pass = pass && check.pass;
      char buf[256];
      std::snprintf(buf, sizeof buf, " %s=%.6g%s%.6g", check.name.c_str(), check.measured,
                    check.relation.c_str(), check.threshold);
      detail += buf;
    }
    if (matched == 0 || (!c.checks.empty() && matched != c.checks.size())) {
      pass = false;
      detail += " (missing checks)";
    }
    if (!pass) ++failures;
    std::printf("%s criterion %d (%s) [%s, %.1fs of %.0fs]:%s\n", pass ? "PASS" : "FAIL", c.id,
                c.title, c.experiment, run.seconds, c.budget_s, detail.c_str());
  }
  std::printf("%d of %zu criteria failed\n", failures, criteria().size());
  return failures == 0 ? 0 : 1;
}
