#pragma once

#include <Eigen/Core>

#include "hopper/dynamics.hpp"
#include "hopper/hybrid.hpp"
#include "hopper/model.hpp"

namespace hopper {

using Vec20 = Eigen::Matrix<double, 20, 1>;
using Mat20 = Eigen::Matrix<double, 20, 20>;
using Mat20x4 = Eigen::Matrix<double, 20, 4>;

// State chart around an anchor orientation:
//   z = (p, xi, theta, ell, pdot, omega, thetadot, elldot)
// with xi = log(anchor^-1 quat) and, unlike Veloc, the omega block in algebra
// coordinates (physical rad/s halved). That makes the attitude kinematics of
// the prediction model exactly xi_dot = omega, so the corresponding block of
// every A matrix is the identity.
struct LocalState {
  Vec20 z;
  UnitQuat anchor;
};

LocalState to_local(const State& x, const UnitQuat& anchor);
State recover_state(const LocalState& zs);

// Rates of z along the prediction model: top half is the velocity block of z
// verbatim, bottom half the accelerations mapped into the chart.
Vec20 local_vector_field(Vertex vtx, const Vec20& z, const UnitQuat& anchor,
                         const Input& u, const ModelParams& m);

struct ContinuousAffine {
  Mat20 A;
  Mat20x4 B;
  Vec20 C;  // drift so that zdot = A z + B u + C is exact at the expansion point
};

// Discrete one-step model z+ = A z + B u + C over a step h.
struct AffineFlow {
  Mat20 A;
  Mat20x4 B;
  Vec20 C;
};

enum class DiscretizeMethod { Exact, Euler };

// Continuous linearization about (xbar, ubar) in the anchor chart. The
// configuration-rate rows are [0 I] analytically; the acceleration rows use
// central differences (step 1e-6) in the chart itself, with the position and
// wheel-angle columns pinned to zero (the dynamics are invariant in both).
ContinuousAffine linearize_flow_continuous(Vertex vtx, const State& xbar,
                                           const Input& ubar, const UnitQuat& anchor,
                                           const ModelParams& m);

AffineFlow discretize(const ContinuousAffine& c, double h, DiscretizeMethod method);

AffineFlow build_affine_flow(Vertex vtx, const State& xbar, const Input& ubar,
                             const UnitQuat& anchor, double h, DiscretizeMethod method,
                             const ModelParams& m);

// Reset linearization z+ = D z- + E about xbar (pre-impact). Configuration
// rows are exactly [I 0]; GroundToFlight is the identity map and returns
// (I, 0) in closed form; FlightToGround differences the extended reset.
struct AffineReset {
  Mat20 D;
  Vec20 E;
};

AffineReset linearize_reset(Edge e, const State& xbar, const UnitQuat& anchor,
                            const ModelParams& m);

// Attitude-block derivatives of the physical body angular acceleration:
// d(omegadot)/d(eta) with the orientation perturbed on the group (q exp(eta)),
// d(omegadot)/d(omega), and d(omegadot)/du. Central differences, step 1e-6.
struct AttitudeJacobians {
  Eigen::Matrix3d df_deta;
  Eigen::Matrix3d df_domega;
  Eigen::Matrix<double, 3, 4> df_du;
};

AttitudeJacobians attitude_jacobians(Vertex vtx, const State& xbar, const Input& ubar,
                                     const ModelParams& m);

// Dense scaling-and-squaring matrix exponential with a (6,6) Pade kernel.
Eigen::MatrixXd expm(const Eigen::MatrixXd& M);

}  // namespace hopper
