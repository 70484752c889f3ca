#pragma once

#include <Eigen/Core>

#include "hopper/model.hpp"

namespace hopper {

// Manipulator form D(q) vdot + H(q, v) = B u + J^T lambda, with v the
// 10-dimensional quasi-velocity from Veloc. H collects Coriolis/centrifugal,
// gravity, and spring/damper terms.
struct DynamicsTerms {
  Mat10 D;
  Vec10 H;
  Eigen::Matrix<double, 10, 4> B;
};

DynamicsTerms dynamics_terms(const Config& q, const Veloc& v, const ModelParams& m);

// Foot position/velocity and the foot point Jacobian J (3x10) with its
// drift term Jdot*v (the foot acceleration at vdot = 0).
struct FootKinematics {
  Eigen::Vector3d p_foot;
  Eigen::Vector3d pdot_foot;
};

FootKinematics foot_kinematics(const Config& q, const Veloc& v, const ModelParams& m);

struct ContactJacobian {
  Eigen::Matrix<double, 3, 10> J;
  Eigen::Vector3d Jdot_v;
};

ContactJacobian contact_jacobian(const Config& q, const Veloc& v, const ModelParams& m);

// Time derivative of the full state in the given vertex: the configuration
// slots advance kinematically (the orientation slot is the pair (omega,
// omegadot), integrated on the group), the velocity slots from the
// manipulator equations; in Ground the foot-pinning force comes from the
// KKT system [D -J^T; J 0] [vdot; lambda] = [Bu - H; -Jdot v].
struct StateDot {
  Veloc qdot;  // = v (omega slot carries the physical body rate)
  Vec10 vdot;
};

StateDot vector_field(Vertex vtx, const State& x, const Input& u, const ModelParams& m);

// Classical RK4 on the Euclidean slots; the quaternion advances by a group
// step q * exp(h wbar / 2) with wbar the RK4-averaged physical rate (each
// stage state is itself built with a group step, so stages stay on S^3).
State integrate_step(Vertex vtx, const State& x, const Input& u, double h,
                     const ModelParams& m);

// Contact impulse for a plastic (velocity-killing) foot impact:
// v+ = v- - D^-1 J^T (J D^-1 J^T)^-1 J v-. Total function of the state;
// the guard-checked wrapper lives in hybrid.hpp.
Veloc plastic_impact(const Config& q, const Veloc& v, const ModelParams& m);

// Energy bookkeeping (used by tests and the trace summary).
double kinetic_energy(const Config& q, const Veloc& v, const ModelParams& m);
double potential_energy(const Config& q, const ModelParams& m);

}  // namespace hopper
