#include "hopper/lowlevel.hpp"

#include <algorithm>
#include <cmath>

#include "hopper/geom.hpp"

namespace hopper {

Eigen::Vector3d attitude_feedback(const UnitQuat& quat_a, const Eigen::Vector3d& omega_a,
                                  const MpcOutput& ref, const Gains& gains,
                                  double u_max) {
  // err measures the body relative to the target. A stabilizing BODY torque
  // is -Kp im(err) - Kd (omega - omega_d); the wheels must apply its
  // reaction, so the feedback enters the wheel command with flipped signs.
  const UnitQuat err = quat_mul(quat_conj(ref.quat_d), quat_a);
  const Eigen::Vector3d u = gains.Kp * im_part(err) +
                            gains.Kd * (omega_a - ref.omega_d) +
                            ref.u_ff.head<3>();
  return u.cwiseMax(-u_max).cwiseMin(u_max);
}

double foot_feedback(const State& x, Vertex vtx, const ModelParams& params,
                     const Gains& gains) {
  if (vtx == Vertex::Ground) return 0.0;
  // Torque that holds the set-point: the spring force there divided through
  // the gearing, plus PD on the deflection error.
  const double hold = params.k_spring * gains.foot_setpoint / params.gear_foot;
  const double u = hold + (gains.kp_foot * (gains.foot_setpoint - x.q.ell) -
                           gains.kd_foot * x.v.elldot) /
                              params.gear_foot;
  return std::clamp(u, -gains.u_max_foot, gains.u_max_foot);
}

Input runtime_tick(const State& x, Vertex vtx, const MpcOutput& latest,
                   const Gains& gains, const MpcConfig& cfg, const ModelParams& params) {
  Input u;
  u.head<3>() = attitude_feedback(x.q.quat, x.v.omega, latest, gains, cfg.u_max);
  u(3) = foot_feedback(x, vtx, params, gains);
  return u;
}

MpcWorker::MpcWorker(MpcReference ref, MpcConfig cfg, ModelParams params)
    : ref_(std::move(ref)), cfg_(cfg), params_(params), worker_([this] { loop(); }) {}

MpcWorker::~MpcWorker() {
  {
    std::lock_guard<std::mutex> lock(mu_);
    stop_ = true;
  }
  cv_.notify_all();
  worker_.join();
}

void MpcWorker::post(double t, const State& x, Vertex vtx) {
  {
    std::lock_guard<std::mutex> lock(mu_);
    pending_ = Snapshot{t, x, vtx};
  }
  cv_.notify_all();
}

std::optional<MpcOutput> MpcWorker::poll() {
  std::lock_guard<std::mutex> lock(mu_);
  std::optional<MpcOutput> out;
  out.swap(fresh_);
  return out;
}

void MpcWorker::loop() {
  for (;;) {
    Snapshot snap;
    {
      std::unique_lock<std::mutex> lock(mu_);
      cv_.wait(lock, [this] { return stop_ || pending_.has_value(); });
      if (stop_) return;
      snap = *pending_;
      pending_.reset();
    }
    const MpcOutput out = mpc_step(snap.t, snap.x, snap.vtx, ref_,
                                   have_last_ ? &last_ : nullptr, cfg_, params_);
    last_ = out;
    have_last_ = true;
    {
      std::lock_guard<std::mutex> lock(mu_);
      fresh_ = out;
    }
  }
}

}  // namespace hopper
