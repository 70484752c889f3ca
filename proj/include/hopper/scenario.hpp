#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "hopper/lowlevel.hpp"
#include "hopper/model.hpp"
#include "hopper/mpc.hpp"

namespace hopper {

// Closed-loop target specification, a tagged union over the JSON
// `reference.type` field.
struct ReferenceSpec {
  enum class Kind { Setpoint, Waypoints, Flip, Disturbance };
  Kind kind = Kind::Setpoint;

  // Setpoint / Flip / Disturbance: held position target.
  Eigen::Vector3d p = Eigen::Vector3d::Zero();

  // Waypoints: piecewise-linear position path (times strictly increasing,
  // held flat outside the listed range).
  std::vector<double> times;
  std::vector<Eigen::Vector3d> points;

  // Flip: geodesic attitude reference rotating 2*pi*count about the body
  // axis, started at the first liftoff at or after trigger_time.
  Eigen::Vector3d flip_axis = Eigen::Vector3d::UnitX();
  int flip_count = 1;
  double flip_trigger_time = 0.0;
  double flip_duration = 0.4;

  // Disturbance: instantaneous COM velocity jump at a fixed time.
  Eigen::Vector3d impulse = Eigen::Vector3d::Zero();  // m/s added to pdot
  double impulse_time = 0.0;
};

struct Scenario {
  std::string name;
  double duration = 0.0;
  ModelParams model;
  MpcConfig mpc;
  Gains gains;
  State x0;
  Vertex v0 = Vertex::Flight;
  ReferenceSpec reference;
  unsigned seed = 0;
  bool deterministic = true;
};

// Parses and validates a scenario JSON document. Model fields and the
// reference payload are required; mpc, gains, and x0 accept defaults per
// field. Throws ScenarioError whose message names the offending field path.
Scenario parse_scenario(const std::string& text);

// Reads the file and parses it. Throws ScenarioError (unreadable file,
// invalid JSON, or schema violations).
Scenario load_scenario(const std::string& path);

// Position target as a function of time (waypoint interpolation happens
// here; flip/disturbance hold their fixed setpoint).
Eigen::Vector3d reference_position(const ReferenceSpec& ref, double t);

}  // namespace hopper
