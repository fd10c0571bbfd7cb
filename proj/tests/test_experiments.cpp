#include <gtest/gtest.h>

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "invnav/errors.hpp"
#include "invnav/experiments.hpp"
#include "invnav/scenario_io.hpp"

using namespace invnav;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("invnav_test_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Catalog, NineDocumentedExperiments) {
  const auto& cat = experiment_catalog();
  ASSERT_EQ(cat.size(), 9u);
  for (const auto& info : cat) {
    EXPECT_FALSE(info.claim.empty()) << info.name;
    EXPECT_NE(info.scenario.find("dt"), std::string::npos) << info.name;
  }
}

TEST(Catalog, DescribeIncludesScenarioConstants) {
  const ExperimentInfo& info = describe_experiment("fig2-odometer");
  EXPECT_NE(info.scenario.find("\"meas_period\":0.05"), std::string::npos);
  EXPECT_NE(info.scenario.find("\"dt\":0.01"), std::string::npos);
}

TEST(Catalog, UnknownExperimentThrows) {
  EXPECT_THROW(describe_experiment("fig9"), UnknownExperiment);
  ExperimentSpec spec;
  spec.name = "fig9";
  EXPECT_THROW(run_experiment(spec), UnknownExperiment);
}

TEST(MakeCheck, Relations) {
  EXPECT_TRUE(make_check("a", 1.0, "<", 2.0).pass);
  EXPECT_FALSE(make_check("a", 2.0, "<", 2.0).pass);
  EXPECT_TRUE(make_check("a", 2.0, "<=", 2.0).pass);
  EXPECT_TRUE(make_check("a", 3.0, ">", 2.0).pass);
  EXPECT_TRUE(make_check("a", 2.0, ">=", 2.0).pass);
  EXPECT_FALSE(make_check("a", std::nan(""), "<", 2.0).pass);
  EXPECT_FALSE(make_check("a", std::nan(""), ">", 2.0).pass);
  EXPECT_THROW(make_check("a", 1.0, "==", 1.0), BadConfig);
}

TEST(RunExperiment, WritesCsvAndSummaries) {
  const fs::path dir = scratch("fig2");
  ExperimentSpec spec;
  spec.name = "fig2-odometer";
  spec.out_dir = dir;
  const ExperimentResult res = run_experiment(spec);
  EXPECT_TRUE(res.passed());
  for (const char* f : {"odometer.csv", "ekf_trace.csv", "iekf_trace.csv", "summary.txt",
                        "summary.json"}) {
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  }
  const auto doc = nlohmann::json::parse(slurp(dir / "summary.json"));
  EXPECT_EQ(doc.at("experiment"), "fig2-odometer");
  EXPECT_EQ(doc.at("pass"), true);
  EXPECT_EQ(doc.at("checks").size(), res.checks.size());
  EXPECT_NE(slurp(dir / "summary.txt").find("ekf_odometer_error"), std::string::npos);
  fs::remove_all(dir);
}

TEST(RunExperiment, NoOutputDirectoryNoFiles) {
  ExperimentSpec spec;
  spec.name = "prop1-linear";
  const ExperimentResult res = run_experiment(spec);
  EXPECT_TRUE(res.passed());
  EXPECT_TRUE(res.files.empty());
}

TEST(RunExperiment, OutputsArePureFunctionsOfSpec) {
  const fs::path a = scratch("det_a");
  const fs::path b = scratch("det_b");
  for (const auto& dir : {a, b}) {
    ExperimentSpec spec;
    spec.name = "smoothing-window";
    spec.steps = 100;
    spec.seed = 3;
    spec.out_dir = dir;
    spec.threads = dir == a ? 1 : 3;
    run_experiment(spec);
  }
  EXPECT_EQ(slurp(a / "window_rmse.csv"), slurp(b / "window_rmse.csv"));
  EXPECT_EQ(slurp(a / "summary.json"), slurp(b / "summary.json"));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(RunExperiment, ConfigOverridesScenario) {
  const fs::path dir = scratch("cfg");
  fs::create_directories(dir);
  {
    std::ofstream os(dir / "c.json");
    os << R"({"duration": 1.0})";
  }
  ExperimentSpec spec;
  spec.name = "fig2-odometer";
  spec.config = dir / "c.json";
  spec.out_dir = dir / "out";
  run_experiment(spec);
  // One second at dt = 0.01: 101 rows plus a header.
  const std::string csv = slurp(dir / "out" / "odometer.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 102);
  {
    std::ofstream os(dir / "bad.json");
    os << R"({"dt": "fast"})";
  }
  spec.config = dir / "bad.json";
  EXPECT_THROW(run_experiment(spec), BadConfig);
  fs::remove_all(dir);
}

TEST(ParallelFor, MatchesSerialAndRethrowsLowestIndex) {
  std::vector<int> serial(50), parallel(50);
  parallel_for(50, 1, [&](std::size_t i) { serial[i] = static_cast<int>(i * i); });
  parallel_for(50, 4, [&](std::size_t i) { parallel[i] = static_cast<int>(i * i); });
  EXPECT_EQ(serial, parallel);
  try {
    parallel_for(20, 4, [](std::size_t i) {
      if (i == 7 || i == 13) throw std::runtime_error(std::to_string(i));
    });
    FAIL() << "expected an exception";
  } catch (const std::runtime_error& e) {
    EXPECT_STREQ(e.what(), "7");
  }
  std::atomic<int> calls{0};
  parallel_for(0, 4, [&](std::size_t) { ++calls; });
  EXPECT_EQ(calls.load(), 0);
}

TEST(ScenarioJson, RoundTrip) {
  ScenarioConfig c;
  c.dt = 0.02;
  c.duration = 3.0;
  c.meas_period = 0.1;
  c.omega = Profile::sinusoid(0.1, 0.5, 0.2, 0.3);
  c.u = Profile::piecewise({{0.0, 1.0}, {1.5, 2.0}});
  c.gps_cov << 0.5, 0.1, 0.1, 2.0;
  c.odom_noise = true;
  c.odom_cov_x = 0.1;
  c.odom_cov_omega = 0.01;
  c.theta0 = -0.4;
  c.x0 = Vec2(1.0, 2.0);
  c.integrator = Integrator::Euler;
  const ScenarioConfig back = scenario_from_json(scenario_to_json(c));
  EXPECT_EQ(scenario_to_json(back).dump(), scenario_to_json(c).dump());
  EXPECT_EQ(back.u.at(2.0), 2.0);
  EXPECT_EQ(back.gps_cov, c.gps_cov);
}

TEST(ScenarioJson, PartialOverridesKeepBase) {
  ScenarioConfig base;
  base.dt = 0.05;
  const ScenarioConfig c = scenario_from_json(
      nlohmann::json::parse(R"({"gps_cov": 0.25, "omega_profile": 0.3})"), base);
  EXPECT_EQ(c.dt, 0.05);
  EXPECT_EQ(c.gps_cov, 0.25 * Mat2::Identity());
  EXPECT_EQ(c.omega.at(10.0), 0.3);
}

TEST(ScenarioJson, RejectsMalformedInput) {
  for (const char* text : {R"({"dt": "x"})", R"({"x0": [1]})", R"({"gps_cov": [[1, 2]]})",
                           R"({"omega_profile": {"kind": "spiral"}})",
                           R"({"integrator": "rk45"})", R"([1, 2])"}) {
    EXPECT_THROW(scenario_from_json(nlohmann::json::parse(text)), BadConfig) << text;
  }
  EXPECT_THROW(load_scenario("/nonexistent/scenario.json"), BadConfig);
}
