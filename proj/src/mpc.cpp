#include "hopper/mpc.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "hopper/errors.hpp"
#include "hopper/geom.hpp"
#include "hopper/hybrid.hpp"

namespace hopper {

namespace {

constexpr double kHessReg = 1e-9;   // keeps zero-weight coordinates PD
// A canonical log cannot exceed pi/2 in algebra coordinates (a half turn);
// the clamp pins any non-canonical target back onto the chart's principal
// cell instead of letting it wrap.
const double kXiRefClamp = M_PI / 2.0;

double step_for(Vertex v, const MpcConfig& cfg) {
  return v == Vertex::Ground ? cfg.dt_ground : cfg.dt_flight;
}

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

Vec20 MpcConfig::q_diag() const {
  Vec20 d = Vec20::Zero();
  d.segment<3>(0).setConstant(w_p);
  d.segment<3>(3).setConstant(w_quat);
  d.segment<3>(10).setConstant(w_v);
  d.segment<3>(13).setConstant(w_omega);
  return d;
}

Eigen::Vector4d MpcConfig::r_diag() const { return Eigen::Vector4d::Constant(w_u); }

MpcReference MpcReference::setpoint(const Eigen::Vector3d& p) {
  MpcReference r;
  r.position = [p](double) { return p; };
  return r;
}

ModeSchedule schedule_modes(const State& x, Vertex vtx, const MpcConfig& cfg,
                            const ModelParams& params) {
  const double wn = std::sqrt(params.k_spring / params.m_body);
  const double half_period = M_PI / wn;

  // Time until the current mode's exit, from the measured state. Flight uses
  // the upright ballistic arc of the foot's z coordinate; ground the phase of
  // the spring oscillation.
  double t_exit;
  if (vtx == Vertex::Flight) {
    const double zf = x.q.p.z() - (params.leg_length - x.q.ell);
    const double zfdot = x.v.pdot.z() + x.v.elldot;
    if (zf <= 0.0) {
      t_exit = 0.0;
    } else {
      t_exit = (zfdot + std::sqrt(zfdot * zfdot + 2.0 * params.g * zf)) / params.g;
    }
  } else {
    t_exit = (M_PI - std::atan2(wn * x.q.ell, x.v.elldot)) / wn;
  }

  ModeSchedule s;
  s.vertices.reserve(cfg.N + 1);
  s.edges.reserve(cfg.N);
  s.steps.reserve(cfg.N);
  Vertex cur = vtx;
  s.vertices.push_back(cur);
  for (int k = 0; k < cfg.N; ++k) {
    const double h = step_for(cur, cfg);
    if (t_exit <= 0.5 * h) {
      const Edge e = vertex_exit_edge(cur);
      s.edges.push_back(e);
      s.steps.push_back(0.0);
      cur = edge_target(e);
      // A future touchdown starts a full spring half-period; past a future
      // liftoff the horizon stays in flight (no apex information yet).
      t_exit = cur == Vertex::Ground ? half_period : std::numeric_limits<double>::infinity();
    } else {
      s.edges.push_back(Edge::None);
      s.steps.push_back(h);
      t_exit -= h;
    }
    s.vertices.push_back(cur);
  }
  return s;
}

FtocpLinearization linearize_schedule(const std::vector<State>& xbar,
                                      const std::vector<Input>& ubar,
                                      const ModeSchedule& sched, const UnitQuat& anchor,
                                      const MpcConfig& cfg, const ModelParams& params) {
  const int N = sched.horizon();
  if (static_cast<int>(xbar.size()) < N || static_cast<int>(ubar.size()) < N)
    throw DimensionMismatch("linearize_schedule: expansion shorter than schedule");
  FtocpLinearization lin;
  lin.flows.resize(N);
  lin.resets.resize(N);
  for (int k = 0; k < N; ++k) {
    if (sched.edges[k] == Edge::None) {
      lin.flows[k] = build_affine_flow(sched.vertices[k], xbar[k], ubar[k], anchor,
                                       sched.steps[k], cfg.method, params);
    } else {
      lin.resets[k] = linearize_reset(sched.edges[k], xbar[k], anchor, params);
    }
  }
  return lin;
}

Vec20 make_z_ref(const UnitQuat& anchor, const Eigen::Vector3d& p_ref,
                 const UnitQuat& q_ref, const Eigen::Vector3d& omega_ref) {
  Vec20 z = Vec20::Zero();
  z.segment<3>(0) = p_ref;
  const UnitQuat rel = quat_mul(quat_conj(anchor), q_ref);
  ImQuat3 xi;
  try {
    xi = log_map(rel);
  } catch (const AntipodeError&) {
    // A half-turn target: the axis is the imaginary part, the sign ambiguity
    // is irrelevant (both signs name the same rotation).
    xi = (M_PI / 2.0) * rel.im().normalized();
  }
  const double n = xi.norm();
  if (n > kXiRefClamp) xi *= kXiRefClamp / n;
  z.segment<3>(3) = xi;
  z.segment<3>(13) = omega_to_algebra(omega_ref);
  return z;
}

QpProblem build_ftocp(const Vec20& z0, const ModeSchedule& sched,
                      const std::vector<Vec20>& z_ref, const FtocpLinearization& lin,
                      const MpcConfig& cfg) {
  const int N = sched.horizon();
  if (N < 1 || static_cast<int>(sched.steps.size()) != N ||
      static_cast<int>(sched.vertices.size()) != N + 1)
    throw DimensionMismatch("build_ftocp: malformed schedule");
  if (static_cast<int>(z_ref.size()) != N)
    throw DimensionMismatch("build_ftocp: need one reference per knot 1..N");
  if (static_cast<int>(lin.flows.size()) != N || static_cast<int>(lin.resets.size()) != N)
    throw DimensionMismatch("build_ftocp: linearization count mismatch");

  const int nz = 20 * N + 4 * N;
  const int me = 20 * N;
  const auto zi = [](int k) { return 20 * (k - 1); };          // z_k, k = 1..N
  const auto ui = [N](int k) { return 20 * N + 4 * k; };       // u_k, k = 0..N-1

  QpProblem p;
  p.H = Eigen::MatrixXd::Zero(nz, nz);
  p.g = Eigen::VectorXd::Zero(nz);
  p.Aeq = Eigen::MatrixXd::Zero(me, nz);
  p.beq = Eigen::VectorXd::Zero(me);
  p.lb = Eigen::VectorXd::Constant(nz, -std::numeric_limits<double>::infinity());
  p.ub = Eigen::VectorXd::Constant(nz, std::numeric_limits<double>::infinity());

  const Vec20 q = cfg.q_diag();
  const Eigen::Vector4d r = cfg.r_diag();
  for (int k = 1; k <= N; ++k) {
    // Terminal weight equals the running weight (the cost-to-go rule).
    p.H.diagonal().segment<20>(zi(k)) = 2.0 * q;
    p.g.segment<20>(zi(k)) = -2.0 * q.cwiseProduct(z_ref[k - 1]);
  }
  for (int k = 0; k < N; ++k) p.H.diagonal().segment<4>(ui(k)) = 2.0 * r;
  p.H.diagonal().array() += kHessReg;
  for (int k = 0; k < N; ++k) {
    p.lb.segment<4>(ui(k)).setConstant(-cfg.u_max);
    p.ub.segment<4>(ui(k)).setConstant(cfg.u_max);
  }

  for (int k = 0; k < N; ++k) {
    const int row = 20 * k;
    p.Aeq.block<20, 20>(row, zi(k + 1)) = -Mat20::Identity();
    if (sched.edges[k] == Edge::None) {
      Mat20x4 B = lin.flows[k].B;
      B.col(3).setZero();  // the optimizer plans the foot as passive
      p.Aeq.block<20, 4>(row, ui(k)) = B;
      if (k == 0) {
        p.beq.segment<20>(row) = -(lin.flows[k].C + lin.flows[k].A * z0);
      } else {
        p.Aeq.block<20, 20>(row, zi(k)) = lin.flows[k].A;
        p.beq.segment<20>(row) = -lin.flows[k].C;
      }
    } else {
      if (k == 0) {
        p.beq.segment<20>(row) = -(lin.resets[k].E + lin.resets[k].D * z0);
      } else {
        p.Aeq.block<20, 20>(row, zi(k)) = lin.resets[k].D;
        p.beq.segment<20>(row) = -lin.resets[k].E;
      }
    }
  }
  return p;
}

MpcOutput mpc_step(double t, const State& x, Vertex vtx, const MpcReference& ref,
                   const MpcOutput* prev, const MpcConfig& cfg,
                   const ModelParams& params) {
  const auto t0 = std::chrono::steady_clock::now();
  const int N = cfg.N;
  QpStatus last_status = QpStatus::NumericalFailure;

  try {
    const UnitQuat anchor = quat_normalize(x.q.quat);
    const ModeSchedule sched = schedule_modes(x, vtx, cfg, params);
    const Vec20 z0 = to_local(x, anchor).z;

    std::vector<double> tk(N + 1);
    tk[0] = t;
    for (int k = 0; k < N; ++k) tk[k + 1] = tk[k] + sched.steps[k];
    std::vector<Vec20> zref(N);
    for (int k = 1; k <= N; ++k)
      zref[k - 1] =
          make_z_ref(anchor, ref.position(tk[k]), ref.attitude(tk[k]), ref.omega(tk[k]));

    // Expansion trajectory: the previous solution shifted by one knot, or a
    // constant-state rollout on a cold start. Knot 0 always expands about the
    // measured state.
    std::vector<State> xbar(N + 1, x);
    std::vector<Input> ubar(N, Input::Zero());
    const bool shift = prev && !prev->stale &&
                       static_cast<int>(prev->z_traj.size()) == N + 1 &&
                       static_cast<int>(prev->u_traj.size()) == N;
    if (shift) {
      for (int k = 1; k <= N; ++k) {
        const int j = std::min(k + 1, N);
        xbar[k] = recover_state({prev->z_traj[j], prev->anchor});
      }
      for (int k = 0; k < N; ++k) ubar[k] = prev->u_traj[std::min(k + 1, N - 1)];
    }

    QpSettings qs;
    qs.polish = false;  // the equality rows are solved exactly every iteration
    QpWarmStart ws;
    ws.x = Eigen::VectorXd::Zero(24 * N);
    ws.y = Eigen::VectorXd::Zero(24 * N);
    for (int k = 1; k <= N; ++k) ws.x.segment<20>(20 * (k - 1)) = to_local(xbar[k], anchor).z;
    for (int k = 0; k < N; ++k) ws.x.segment<4>(20 * N + 4 * k) = ubar[k];

    QpSolution sol;
    int iters_run = 0;
    for (int it = 0; it < cfg.sqp_iters; ++it) {
      const FtocpLinearization lin =
          linearize_schedule(xbar, ubar, sched, anchor, cfg, params);
      const QpProblem qp = build_ftocp(z0, sched, zref, lin, cfg);
      sol = solve_qp(qp, qs, &ws);
      last_status = sol.status;
      if (sol.status != QpStatus::Solved) break;
      // Later iterations refine the same schedule, so the adapted penalty
      // transfers; carrying it across steps does not (the schedule shifts).
      if (sol.rho_final > 0.0) qs.rho = sol.rho_final;
      ++iters_run;
      for (int k = 1; k <= N; ++k)
        xbar[k] = recover_state({sol.zstar.segment<20>(20 * (k - 1)), anchor});
      for (int k = 0; k < N; ++k) ubar[k] = sol.zstar.segment<4>(20 * N + 4 * k);
      ws.x = sol.zstar;
      ws.y = sol.mu;
    }

    if (iters_run == cfg.sqp_iters) {
      MpcOutput out;
      out.anchor = anchor;
      out.sched = sched;
      const Vec20 z1 = sol.zstar.head<20>();
      out.quat_d = quat_normalize(quat_mul(anchor, exp_map(z1.segment<3>(3))));
      out.omega_d = omega_to_physical(z1.segment<3>(13));
      out.u_ff = sol.zstar.segment<4>(20 * N)
                     .cwiseMax(-cfg.u_max)
                     .cwiseMin(cfg.u_max);
      out.z_traj.resize(N + 1);
      out.z_traj[0] = z0;
      for (int k = 1; k <= N; ++k) out.z_traj[k] = sol.zstar.segment<20>(20 * (k - 1));
      out.u_traj.resize(N);
      for (int k = 0; k < N; ++k)
        out.u_traj[k] = sol.zstar.segment<4>(20 * N + 4 * k)
                            .cwiseMax(-cfg.u_max)
                            .cwiseMin(cfg.u_max);  // strip solver-tolerance overshoot
      out.solve_time = seconds_since(t0);
      out.sqp_iters_run = iters_run;
      out.qp_status = sol.status;
      out.stale = false;
      return out;
    }
  } catch (const std::runtime_error&) {
    // fall through to the stale path
  }

  MpcOutput out;
  if (prev) {
    out = *prev;
  } else {
    out.quat_d = quat_normalize(x.q.quat);
    out.anchor = out.quat_d;
  }
  out.stale = true;
  out.qp_status = last_status;
  out.solve_time = seconds_since(t0);
  return out;
}

}  // namespace hopper
