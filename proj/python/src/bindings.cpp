#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "invnav/analysis.hpp"
#include "invnav/errors.hpp"
#include "invnav/experiments.hpp"
#include "invnav/filters.hpp"
#include "invnav/scenario_io.hpp"
#include "invnav/se2.hpp"
#include "invnav/smoothing.hpp"
#include "invnav/vehicle_sim.hpp"

namespace py = pybind11;
using namespace invnav;

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename T, typename Fn>
py::array_t<double> column(const std::vector<T>& items, Fn&& get) {
  py::array_t<double> out(static_cast<py::ssize_t>(items.size()));
  auto view = out.mutable_unchecked<1>();
  for (std::size_t i = 0; i < items.size(); ++i) view(i) = get(items[i]);
  return out;
}

template <typename T, typename Fn>
RowMatrix columns2(const std::vector<T>& items, Fn&& get) {
  RowMatrix out(items.size(), 2);
  for (std::size_t i = 0; i < items.size(); ++i) out.row(i) = get(items[i]).transpose();
  return out;
}

std::string se2_repr(const Se2& g) {
  std::ostringstream os;
  os << "Se2(heading=" << g.heading() << ", position=[" << g.position()(0) << ", "
     << g.position()(1) << "])";
  return os.str();
}

py::dict trace_to_dict(const EstimateTrace& trace) {
  const auto& r = trace.records;
  py::dict d;
  d["step"] = column(r, [](const TraceRecord& x) { return static_cast<double>(x.step); });
  d["time"] = column(r, [](const TraceRecord& x) { return x.time; });
  d["heading"] = column(r, [](const TraceRecord& x) { return x.mean.heading(); });
  d["position"] = columns2(r, [](const TraceRecord& x) { return x.mean.position(); });
  d["updated"] = column(r, [](const TraceRecord& x) { return x.updated ? 1.0 : 0.0; });
  d["err_theta"] = column(r, [](const TraceRecord& x) { return x.err_theta; });
  d["err_pos"] = column(r, [](const TraceRecord& x) { return x.err_pos; });
  d["manifold_resid"] = column(r, [](const TraceRecord& x) { return x.manifold_resid; });
  d["max_manifold_resid"] = trace.max_manifold_resid;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Planar unicycle navigation: SE(2) tools, simulator, EKF/IEKF, smoothing";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<AntipodalHeading>(m, "AntipodalHeading", base.ptr());
  py::register_exception<BadConfig>(m, "BadConfig", base.ptr());
  py::register_exception<SingularInnovation>(m, "SingularInnovation", base.ptr());
  py::register_exception<SingularNormalEquations>(m, "SingularNormalEquations", base.ptr());
  py::register_exception<WindowMismatch>(m, "WindowMismatch", base.ptr());
  py::register_exception<UnknownExperiment>(m, "UnknownExperiment", base.ptr());
  py::register_exception<StepError>(m, "StepError", base.ptr());

  // ------------------------------------------------------------------ SE(2)
  py::class_<Se2>(m, "Se2")
      .def(py::init<>())
      .def(py::init<double, const Vec2&>(), py::arg("heading"), py::arg("position"))
      .def(py::init([](double t, double x, double y) { return Se2(t, Vec2(x, y)); }),
           py::arg("heading"), py::arg("x"), py::arg("y"))
      .def_static("from_matrix", &Se2::from_matrix)
      .def_property_readonly("heading", &Se2::heading)
      .def_property_readonly("canonical_heading", &Se2::canonical_heading)
      .def_property_readonly("position", [](const Se2& g) { return Vec2(g.position()); })
      .def("matrix", &Se2::matrix)
      .def("inverse", &Se2::inverse)
      .def("act", &Se2::act)
      .def("__mul__", &Se2::operator*)
      .def("__repr__", &se2_repr);

  m.def("wrap_angle", &wrap_angle);
  m.def("hat", &hat, "Tangent (theta, x1, x2) to its 3x3 matrix");
  m.def("exp", &invnav::exp, py::arg("xi"));
  m.def("log", &invnav::log, py::arg("g"), py::arg("tolerance") = kAntipodalTolerance);
  m.def("adjoint", &adjoint);
  m.def("right_jacobian", &right_jacobian);
  m.def("left_jacobian", &left_jacobian);
  m.def("right_jacobian_inverse", &right_jacobian_inverse);
  m.def("left_jacobian_inverse", &left_jacobian_inverse);

  // -------------------------------------------------------------- simulator
  py::class_<ScenarioConfig>(m, "ScenarioConfig")
      .def(py::init([](const std::string& json_text) {
             return scenario_from_json(nlohmann::json::parse(json_text));
           }),
           py::arg("json_text") = "{}")
      .def("to_json", [](const ScenarioConfig& c) { return scenario_to_json(c).dump(); })
      .def_readwrite("dt", &ScenarioConfig::dt)
      .def_readwrite("duration", &ScenarioConfig::duration)
      .def_readwrite("meas_period", &ScenarioConfig::meas_period)
      .def_readwrite("seed", &ScenarioConfig::seed)
      .def("validate", &ScenarioConfig::validate)
      .def_property_readonly("steps", &ScenarioConfig::steps);

  py::class_<Trajectory>(m, "Trajectory")
      .def_readonly("dt", &Trajectory::dt)
      .def_property_readonly("steps", &Trajectory::steps)
      .def_property_readonly("time", [](const Trajectory& t) {
        return column(t.states, [](const CarState& s) { return s.time; });
      })
      .def_property_readonly("heading", [](const Trajectory& t) {
        return column(t.states, [](const CarState& s) { return s.heading; });
      })
      .def_property_readonly("position", [](const Trajectory& t) {
        return columns2(t.states, [](const CarState& s) { return s.position; });
      })
      .def_property_readonly("reference", [](const Trajectory& t) {
        return columns2(t.reference, [](const Vec2& b) { return b; });
      })
      .def_property_readonly("omega", [](const Trajectory& t) {
        return column(t.inputs, [](const OdometryInput& i) { return i.omega; });
      })
      .def_property_readonly("u", [](const Trajectory& t) {
        return column(t.inputs, [](const OdometryInput& i) { return i.u; });
      })
      .def_property_readonly("measurement_steps", [](const Trajectory& t) {
        return column(t.measurements,
                      [](const GpsMeasurement& g) { return static_cast<double>(g.step); });
      })
      .def_property_readonly("measurements", [](const Trajectory& t) {
        return columns2(t.measurements, [](const GpsMeasurement& g) { return g.y; });
      })
      .def("pose", [](const Trajectory& t, std::size_t k) { return t.states.at(k).pose(); });

  m.def("simulate", &simulate, py::arg("config"), py::arg("seed") = 0);
  m.def("left_translate", &left_translate);
  m.def("traveled_distance", [](const Trajectory& t) {
    const TraveledDistance d = traveled_distance(t);
    return py::make_tuple(d.polyline, d.odometric);
  }, "(polyline arc length, odometric distance)");

  // ---------------------------------------------------------------- filters
  py::enum_<FilterKind>(m, "FilterKind")
      .value("EKF", FilterKind::Ekf)
      .value("IEKF", FilterKind::Iekf);
  py::enum_<RiccatiScheme>(m, "RiccatiScheme")
      .value("EXACT", RiccatiScheme::Exact)
      .value("RK4", RiccatiScheme::Rk4);

  m.def("ekf_system_matrix", &ekf_system_matrix);
  m.def("iekf_system_matrix",
        [](double omega, double u) { return iekf_system_matrix(omega, u); });
  m.def("manifold_residual", &manifold_residual);
  m.def(
      "run_filter",
      [](FilterKind kind, const Trajectory& traj, double theta0_hat,
         double initial_heading_variance, RiccatiScheme riccati, std::size_t stride) {
        RunConfig cfg;
        cfg.initial_cov = heading_only_covariance(initial_heading_variance);
        cfg.options.riccati = riccati;
        cfg.record_stride = stride;
        return trace_to_dict(run_filter(kind, traj, theta0_hat, cfg));
      },
      py::arg("kind"), py::arg("trajectory"), py::arg("theta0_hat"),
      py::arg("initial_heading_variance") = 1.5707963267948966,
      py::arg("riccati") = RiccatiScheme::Exact, py::arg("record_stride") = 1);

  // --------------------------------------------------------------- analysis
  m.def(
      "riccati_a_sequence",
      [](double p0, double r, double delta_t, std::size_t n_max) {
        const RiccatiClosedForm cf = riccati_a_sequence(p0, r, delta_t, n_max);
        return py::make_tuple(cf.a_recursive, cf.a_closed, alpha_sequence(cf));
      },
      py::arg("p0"), py::arg("r"), py::arg("delta_t"), py::arg("n_max"),
      "(a_recursive, a_closed, alpha)");
  m.def("heading_recursion", [](double theta0, std::vector<double> alphas) {
    return heading_recursion(theta0, std::move(alphas)).theta_tilde;
  });
  m.def("fit_rate", [](const std::vector<double>& n, const std::vector<double>& v) {
    const RateFit f = fit_rate(n, v);
    return py::make_tuple(f.slope, f.intercept);
  }, "Log-log least squares: (slope, intercept)");

  // -------------------------------------------------------------- smoothing
  py::enum_<Parametrization>(m, "Parametrization")
      .value("INVARIANT", Parametrization::Invariant)
      .value("LINEAR", Parametrization::Linear)
      .value("GRISETTI", Parametrization::Grisetti)
      .value("FORSTER", Parametrization::Forster);

  py::class_<FactorGraphProblem>(m, "FactorGraphProblem")
      .def_property_readonly("num_states", &FactorGraphProblem::num_states)
      .def("dead_reckoning", &FactorGraphProblem::dead_reckoning);

  m.def("odometry_step_covariance", &odometry_step_covariance);
  m.def(
      "make_problem",
      [](const Trajectory& traj, const Se2& prior_mean, const Mat3& prior_cov,
         const Mat3& step_cov) {
        return make_problem(traj, PriorFactor{prior_mean, prior_cov}, step_cov);
      },
      py::arg("trajectory"), py::arg("prior_mean"), py::arg("prior_cov"),
      py::arg("step_cov"));
  m.def("retract", &retract);
  m.def(
      "map_cost",
      [](const FactorGraphProblem& p, const std::vector<Se2>& est, Parametrization param) {
        SmootherOptions o;
        o.param = param;
        return map_cost(p, est, o);
      },
      py::arg("problem"), py::arg("estimates"), py::arg("param"));
  m.def(
      "gn_solve",
      [](const FactorGraphProblem& p, const std::vector<Se2>& init, Parametrization param,
         std::size_t max_iters, bool line_search, bool prior_jacobian_identity) {
        SmootherOptions o;
        o.param = param;
        o.max_iters = max_iters;
        o.line_search = line_search;
        o.prior_jacobian_identity = prior_jacobian_identity;
        const SolveResult r = gn_solve(p, init, o);
        std::vector<double> costs;
        for (const auto& l : r.log) costs.push_back(l.cost);
        return py::make_tuple(r.estimates, costs, r.converged);
      },
      py::arg("problem"), py::arg("init"), py::arg("param") = Parametrization::Invariant,
      py::arg("max_iters") = 50, py::arg("line_search") = false,
      py::arg("prior_jacobian_identity") = false, "(estimates, costs, converged)");
  m.def(
      "sliding_window_run",
      [](const FactorGraphProblem& p, Parametrization param, std::size_t window_size,
         std::size_t iters_per_step) {
        WindowOptions o;
        o.smoother.param = param;
        o.smoother.prior_jacobian_identity = true;
        o.window_size = window_size;
        o.gn_iters_per_step = iters_per_step;
        return sliding_window_run(p, o).final_estimates;
      },
      py::arg("problem"), py::arg("param") = Parametrization::Invariant,
      py::arg("window_size") = 5, py::arg("iters_per_step") = 1);

  // ------------------------------------------------------------ experiments
  m.def("experiment_names", [] {
    std::vector<std::string> names;
    for (const auto& info : experiment_catalog()) names.push_back(info.name);
    return names;
  });
  m.def(
      "run_experiment",
      [](const std::string& name, std::uint64_t seed, std::optional<std::size_t> steps,
         std::optional<std::filesystem::path> out_dir,
         std::optional<std::filesystem::path> config, unsigned threads) {
        ExperimentSpec spec{name, config, seed, steps, out_dir, threads};
        ExperimentResult res;
        {
          py::gil_scoped_release release;
          res = run_experiment(spec);
        }
        py::list checks;
        for (const auto& c : res.checks) {
          py::dict d;
          d["name"] = c.name;
          d["measured"] = c.measured;
          d["relation"] = c.relation;
          d["threshold"] = c.threshold;
          d["pass"] = c.pass;
          checks.append(d);
        }
        py::dict facts;
        for (const auto& [k, v] : res.facts) facts[py::str(k)] = v;
        py::dict out;
        out["name"] = res.name;
        out["passed"] = res.passed();
        out["checks"] = checks;
        out["facts"] = facts;
        out["files"] = res.files;
        return out;
      },
      py::arg("name"), py::arg("seed") = 0, py::arg("steps") = py::none(),
      py::arg("out_dir") = py::none(), py::arg("config") = py::none(),
      py::arg("threads") = 0);
}
