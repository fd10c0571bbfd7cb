#pragma once

#include <string>

#include <json.hpp>

#include "invnav/vehicle_sim.hpp"

namespace invnav {

/// Reads a scenario from a JSON document. Every key is optional and defaults
/// to the value in `base`:
///
///   dt, duration, meas_period, theta0, seed       numbers
///   x0                                            [x1, x2]
///   omega_profile, u_profile                      number (constant) or
///       {"kind": "constant", "value": v}
///       {"kind": "sinusoid", "offset", "amplitude", "frequency", "phase"}
///       {"kind": "piecewise", "breaks": [[t0, v0], [t1, v1], ...]}
///   gps_cov                                       r (N = r I) or [[a,b],[c,d]]
///   gps_noise, odom_noise                         booleans
///   odom_cov                                      {"omega": q_w, "x": q_x}
///   integrator                                    "exact" | "euler"
///
/// Throws BadConfig on malformed input.
ScenarioConfig scenario_from_json(const nlohmann::json& doc,
                                  const ScenarioConfig& base = {});
ScenarioConfig load_scenario(const std::string& path,
                             const ScenarioConfig& base = {});

nlohmann::json scenario_to_json(const ScenarioConfig& config);

}  // namespace invnav
