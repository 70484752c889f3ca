#pragma once

#include <Eigen/Core>

#include "hopper/errors.hpp"

namespace hopper {

// Coordinates in the algebra of imaginary quaternions. The convention
// throughout is the half-angle one: exp(v) is a rotation by 2*||v|| about
// v/||v||, and a body angular velocity w rad/s corresponds to algebra
// coordinates w/2. Conversions happen only at module boundaries; see
// omega_to_algebra / omega_to_physical below.
using ImQuat3 = Eigen::Vector3d;

// Unit quaternion, Hamilton product, scalar-first storage. Kept within
// 1e-9 of unit norm by construction; integrators renormalize every step.
struct UnitQuat {
  double w = 1.0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  static UnitQuat identity() { return {}; }

  ImQuat3 im() const { return {x, y, z}; }
  double norm() const;
};

UnitQuat quat_mul(const UnitQuat& a, const UnitQuat& b);
UnitQuat quat_conj(const UnitQuat& q);  // inverse on the unit sphere
UnitQuat quat_normalize(const UnitQuat& q);

// Imaginary part (Euclidean projection onto the algebra). This is what the
// attitude feedback uses in place of a log, so it gets its own name.
inline ImQuat3 im_part(const UnitQuat& q) { return q.im(); }

UnitQuat exp_map(const ImQuat3& v);

// Principal log, canonicalized to the w >= 0 hemisphere (||result|| <= pi/2).
// Throws AntipodeError when the rotation is within ~1e-9 of pi, where the
// canonical axis is ambiguous.
ImQuat3 log_map(const UnitQuat& q);

// [a, b] = ab - ba restricted to the algebra, i.e. 2 (a x b).
ImQuat3 lie_bracket(const ImQuat3& a, const ImQuat3& b);

// One left-trivialized Euler step: q * exp(w h), renormalized.
UnitQuat lie_euler_step(const UnitQuat& q, const ImQuat3& w, double h);

// Geodesic from q0 to q1: q0 * exp(s log(q0^-1 q1)). s outside [0,1]
// extrapolates along the same geodesic.
UnitQuat quat_interp(const UnitQuat& q0, const UnitQuat& q1, double s);

Eigen::Matrix3d rotation_matrix(const UnitQuat& q);
Eigen::Vector3d rotate(const UnitQuat& q, const Eigen::Vector3d& v);

inline ImQuat3 omega_to_algebra(const Eigen::Vector3d& w_phys) { return 0.5 * w_phys; }
inline Eigen::Vector3d omega_to_physical(const ImQuat3& w_alg) { return 2.0 * w_alg; }

}  // namespace hopper
