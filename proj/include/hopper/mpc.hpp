#pragma once

#include <Eigen/Core>
#include <functional>
#include <vector>

#include "hopper/linearize.hpp"
#include "hopper/model.hpp"
#include "hopper/qp.hpp"

namespace hopper {

// Mode plan over the horizon. Interval k either flows in vertices[k] for
// steps[k] seconds (edges[k] == None) or applies the reset edges[k], which
// consumes the interval with steps[k] == 0. vertices has N+1 entries so
// vertices[k+1] is always the interval's end vertex.
struct ModeSchedule {
  std::vector<Vertex> vertices;
  std::vector<Edge> edges;
  std::vector<double> steps;

  int horizon() const { return static_cast<int>(edges.size()); }
};

struct MpcConfig {
  int N = 20;
  int sqp_iters = 2;
  double w_p = 10.0;      // position block of Q
  double w_quat = 10.0;   // exponential-coordinate block of Q
  double w_v = 1.0;       // linear-velocity block of Q
  double w_omega = 0.01;  // angular-velocity block of Q
  double w_u = 0.001;     // R (all four inputs)
  double u_max = 1.5;     // N m, componentwise input box
  double dt_flight = 0.01;
  double dt_ground = 0.001;
  DiscretizeMethod method = DiscretizeMethod::Exact;

  // Diagonal of the 20x20 state weight. Wheel angles, spring deflection and
  // their rates carry zero weight: the wheels are cyclic and the foot is
  // planned as a passive degree of freedom.
  Vec20 q_diag() const;
  Eigen::Vector4d r_diag() const;
};

// Time-indexed targets, sampled at the planned knot times. Defaults hold a
// fixed position and upright attitude. A nonzero angular-rate target keeps
// the planner from decelerating toward a moving attitude reference.
struct MpcReference {
  std::function<Eigen::Vector3d(double)> position = [](double) {
    return Eigen::Vector3d::Zero();
  };
  std::function<UnitQuat(double)> attitude = [](double) { return UnitQuat::identity(); };
  std::function<Eigen::Vector3d(double)> omega = [](double) {  // physical rad/s
    return Eigen::Vector3d::Zero();
  };

  static MpcReference setpoint(const Eigen::Vector3d& p);
};

struct MpcOutput {
  UnitQuat quat_d;                                     // anchor * exp(xi_1*)
  Eigen::Vector3d omega_d = Eigen::Vector3d::Zero();   // physical rad/s
  Input u_ff = Input::Zero();
  std::vector<Vec20> z_traj;   // planned z_0..z_N in the anchor chart
  std::vector<Input> u_traj;   // planned u_0..u_{N-1}
  UnitQuat anchor;
  ModeSchedule sched;
  double solve_time = 0.0;  // s
  int sqp_iters_run = 0;
  QpStatus qp_status = QpStatus::NumericalFailure;
  bool stale = false;  // set when this output is a reused previous solution
};

// Knot-by-knot mode prediction. Flight time-to-impact comes from the upright
// closed-form ballistic arc of the foot; ground time-to-liftoff from the
// spring half-period about the body mass. A predicted transition inserts a
// reset interval and switches the step size; past the first post-liftoff
// instant the rest of the horizon is filled with flight.
ModeSchedule schedule_modes(const State& x, Vertex vtx, const MpcConfig& cfg,
                            const ModelParams& params);

// Per-interval linearizations matching a schedule: flows[k] is valid where
// edges[k] == None, resets[k] where edges[k] != None.
struct FtocpLinearization {
  std::vector<AffineFlow> flows;
  std::vector<AffineReset> resets;
};

FtocpLinearization linearize_schedule(const std::vector<State>& xbar,
                                      const std::vector<Input>& ubar,
                                      const ModeSchedule& sched, const UnitQuat& anchor,
                                      const MpcConfig& cfg, const ModelParams& params);

// Reference point in the chart: position target, attitude pulled back through
// the anchor (norm-clamped away from the antipode), angular-rate target in
// algebra coordinates, all other rates zero.
Vec20 make_z_ref(const UnitQuat& anchor, const Eigen::Vector3d& p_ref,
                 const UnitQuat& q_ref, const Eigen::Vector3d& omega_ref);

// Assembles the condensed-initial-state finite-time optimal control problem:
// decision vector (z_1..z_N, u_0..u_{N-1}), equality rows chaining the affine
// flow/reset models from the fixed z0, quadratic tracking cost with terminal
// weight equal to the running state weight, input box |u| <= u_max, and the
// foot-torque column zeroed so the optimizer plans the foot passively.
// z_ref holds targets for knots 1..N (z_ref[k-1] pairs with z_k).
QpProblem build_ftocp(const Vec20& z0, const ModeSchedule& sched,
                      const std::vector<Vec20>& z_ref, const FtocpLinearization& lin,
                      const MpcConfig& cfg);

// One receding-horizon step: schedule from the measured state, then
// sqp_iters rounds of linearize / assemble / solve, expanding about the
// shifted previous solution when one is supplied (cold constant-state rollout
// otherwise). On any failure the previous output is returned with stale set.
MpcOutput mpc_step(double t, const State& x, Vertex vtx, const MpcReference& ref,
                   const MpcOutput* prev, const MpcConfig& cfg,
                   const ModelParams& params);

}  // namespace hopper
