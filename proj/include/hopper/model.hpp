#pragma once

#include <Eigen/Core>

#include "hopper/geom.hpp"

namespace hopper {

using Vec10 = Eigen::Matrix<double, 10, 1>;
using Mat10 = Eigen::Matrix<double, 10, 10>;
using Input = Eigen::Vector4d;  // three wheel torques + foot motor torque, N m

enum class Vertex { Flight, Ground };

enum class Edge { None, FlightToGround, GroundToFlight };

constexpr Vertex edge_target(Edge e) {
  return e == Edge::FlightToGround ? Vertex::Ground : Vertex::Flight;
}

struct ModelParams {
  double m_body = 5.0;    // kg, everything except the foot
  double m_foot = 0.1;    // kg, point mass on the leg prismatic axis
  Eigen::Vector3d inertia_body{0.05, 0.05, 0.02};  // kg m^2, principal, body frame
  double inertia_wheel = 0.005;  // kg m^2, spin inertia per wheel
  Eigen::Matrix3d wheel_axes = Eigen::Matrix3d::Identity();  // columns = spin axes
  double leg_length = 0.3;   // m, body COM to foot at zero deflection
  double k_spring = 4000.0;  // N/m
  double b_spring = 5.0;     // N s/m
  double gear_foot = 3.0;    // motor torque -> force on the deflection coordinate
  double g = 9.81;           // m/s^2
};

// Configuration: body COM position, body orientation, wheel angles (relative
// to body), leg spring deflection (positive = compressed). 11 coordinates on
// R^3 x S^3 x R^3 x R, 10-dimensional tangent.
struct Config {
  Eigen::Vector3d p = Eigen::Vector3d::Zero();
  UnitQuat quat;
  Eigen::Vector3d theta = Eigen::Vector3d::Zero();
  double ell = 0.0;
};

// Velocity in the trivialized tangent: world-frame COM rate, *physical*
// body-frame angular velocity in rad/s, wheel rates, deflection rate.
struct Veloc {
  Eigen::Vector3d pdot = Eigen::Vector3d::Zero();
  Eigen::Vector3d omega = Eigen::Vector3d::Zero();
  Eigen::Vector3d thetadot = Eigen::Vector3d::Zero();
  double elldot = 0.0;

  Vec10 vec() const {
    Vec10 v;
    v << pdot, omega, thetadot, elldot;
    return v;
  }
  static Veloc from_vec(const Vec10& v) {
    Veloc out;
    out.pdot = v.segment<3>(0);
    out.omega = v.segment<3>(3);
    out.thetadot = v.segment<3>(6);
    out.elldot = v(9);
    return out;
  }
};

struct State {
  Config q;
  Veloc v;
};

}  // namespace hopper
