#include "invnav/scenario_io.hpp"

#include <fstream>

#include "invnav/errors.hpp"

namespace invnav {

using nlohmann::json;

namespace {

Profile profile_from_json(const json& j) {
  if (j.is_number()) return Profile::constant(j.get<double>());
  if (!j.is_object()) throw BadConfig("profile must be a number or an object");
  const std::string kind = j.value("kind", "constant");
  if (kind == "constant") return Profile::constant(j.value("value", 0.0));
  if (kind == "sinusoid") {
    return Profile::sinusoid(j.value("offset", 0.0), j.value("amplitude", 0.0),
                             j.value("frequency", 0.0), j.value("phase", 0.0));
  }
  if (kind == "piecewise") {
    std::vector<std::pair<double, double>> breaks;
    for (const auto& b : j.at("breaks")) {
      if (!b.is_array() || b.size() != 2) {
        throw BadConfig("piecewise breaks must be [time, value] pairs");
      }
      breaks.emplace_back(b[0].get<double>(), b[1].get<double>());
    }
    return Profile::piecewise(std::move(breaks));
  }
  throw BadConfig("unknown profile kind '" + kind + "'");
}

json profile_to_json(const Profile& p) {
  switch (p.kind) {
    case Profile::Kind::Constant:
      return {{"kind", "constant"}, {"value", p.value}};
    case Profile::Kind::Sinusoid:
      return {{"kind", "sinusoid"},
              {"offset", p.offset},
              {"amplitude", p.amplitude},
              {"frequency", p.frequency},
              {"phase", p.phase}};
    case Profile::Kind::Piecewise: {
      json breaks = json::array();
      for (const auto& [t, v] : p.breaks) breaks.push_back({t, v});
      return {{"kind", "piecewise"}, {"breaks", breaks}};
    }
  }
  return nullptr;
}

}  // namespace

ScenarioConfig scenario_from_json(const json& doc, const ScenarioConfig& base) {
  if (!doc.is_object()) throw BadConfig("scenario must be a JSON object");
  ScenarioConfig c = base;
  try {
    c.dt = doc.value("dt", c.dt);
    c.duration = doc.value("duration", c.duration);
    c.meas_period = doc.value("meas_period", c.meas_period);
    c.theta0 = doc.value("theta0", c.theta0);
    c.seed = doc.value("seed", c.seed);
    c.gps_noise = doc.value("gps_noise", c.gps_noise);
    c.odom_noise = doc.value("odom_noise", c.odom_noise);
    if (doc.contains("x0")) {
      const auto& x0 = doc.at("x0");
      c.x0 = Vec2(x0.at(0).get<double>(), x0.at(1).get<double>());
    }
    if (doc.contains("omega_profile")) c.omega = profile_from_json(doc.at("omega_profile"));
    if (doc.contains("u_profile")) c.u = profile_from_json(doc.at("u_profile"));
    if (doc.contains("gps_cov")) {
      const auto& g = doc.at("gps_cov");
      if (g.is_number()) {
        c.gps_cov = g.get<double>() * Mat2::Identity();
      } else {
        for (int r = 0; r < 2; ++r) {
          for (int k = 0; k < 2; ++k) c.gps_cov(r, k) = g.at(r).at(k).get<double>();
        }
      }
    }
    if (doc.contains("odom_cov")) {
      const auto& o = doc.at("odom_cov");
      c.odom_cov_omega = o.value("omega", c.odom_cov_omega);
      c.odom_cov_x = o.value("x", c.odom_cov_x);
    }
    if (doc.contains("integrator")) {
      const std::string name = doc.at("integrator").get<std::string>();
      if (name == "exact") {
        c.integrator = Integrator::Exact;
      } else if (name == "euler") {
        c.integrator = Integrator::Euler;
      } else {
        throw BadConfig("unknown integrator '" + name + "'");
      }
    }
  } catch (const json::exception& e) {
    throw BadConfig(std::string("malformed scenario: ") + e.what());
  }
  c.validate();
  return c;
}

ScenarioConfig load_scenario(const std::string& path, const ScenarioConfig& base) {
  std::ifstream in(path);
  if (!in) throw BadConfig("cannot open scenario file '" + path + "'");
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw BadConfig("cannot parse '" + path + "': " + e.what());
  }
  return scenario_from_json(doc, base);
}

json scenario_to_json(const ScenarioConfig& c) {
  return {
      {"dt", c.dt},
      {"duration", c.duration},
      {"meas_period", c.meas_period},
      {"omega_profile", profile_to_json(c.omega)},
      {"u_profile", profile_to_json(c.u)},
      {"gps_cov", {{c.gps_cov(0, 0), c.gps_cov(0, 1)}, {c.gps_cov(1, 0), c.gps_cov(1, 1)}}},
      {"gps_noise", c.gps_noise},
      {"odom_cov", {{"omega", c.odom_cov_omega}, {"x", c.odom_cov_x}}},
      {"odom_noise", c.odom_noise},
      {"theta0", c.theta0},
      {"x0", {c.x0(0), c.x0(1)}},
      {"seed", c.seed},
      {"integrator", c.integrator == Integrator::Exact ? "exact" : "euler"},
  };
}

}  // namespace invnav
