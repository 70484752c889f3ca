#pragma once

#include <Eigen/Core>
#include <condition_variable>
#include <mutex>
#include <optional>
#include <thread>

#include "hopper/model.hpp"
#include "hopper/mpc.hpp"

namespace hopper {

struct Gains {
  // Attitude PD: roll/pitch share one pair of gains, yaw gets its own.
  Eigen::Matrix3d Kp = Eigen::Vector3d(120.0, 120.0, 15.0).asDiagonal();
  Eigen::Matrix3d Kd = Eigen::Vector3d(4.0, 4.0, 1.0).asDiagonal();
  // Flight-phase foot compression loop (energy injection for hop height).
  double kp_foot = 200.0;
  double kd_foot = 5.0;
  double foot_setpoint = 0.02;  // m of spring compression held before touchdown
  double u_max_foot = 40.0;     // N m at the foot motor
};

// Wheel torques u = Kp Im(q_d^-1 q_a) + Kd (omega_a - omega_d) + u_ff,
// saturated componentwise to +-u_max. The raw imaginary part stands in for
// the log of the error quaternion; the signs are those of a wheel torque,
// whose reaction (minus itself) is what acts on the body.
Eigen::Vector3d attitude_feedback(const UnitQuat& quat_a, const Eigen::Vector3d& omega_a,
                                  const MpcOutput& ref, const Gains& gains,
                                  double u_max);

// Foot motor torque. Flight: PD toward the compression set-point plus the
// feedforward that cancels the spring there. Ground: zero, the spring works
// unassisted. Saturated to +-u_max_foot.
double foot_feedback(const State& x, Vertex vtx, const ModelParams& params,
                     const Gains& gains);

// Fixed-rate runtime bookkeeping: the 1 kHz tick, the MPC decimation, and an
// optional artificial delay (in ticks) before a fresh solution is visible.
struct RuntimeConfig {
  double tick_dt = 1e-3;
  int mpc_every = 10;
  int latency_ticks = 0;
};

// One 1 kHz tick: zero-order hold of the latest MPC output, wheels from the
// quaternionic law, foot from the compression loop.
Input runtime_tick(const State& x, Vertex vtx, const MpcOutput& latest,
                   const Gains& gains, const MpcConfig& cfg, const ModelParams& params);

// Single-producer/single-consumer MPC worker for the asynchronous (realtime)
// mode. The producer posts state snapshots (latest wins); the worker solves
// against the newest snapshot and publishes immutable MpcOutput values the
// consumer polls. Warm starts chain inside the worker.
class MpcWorker {
 public:
  MpcWorker(MpcReference ref, MpcConfig cfg, ModelParams params);
  ~MpcWorker();

  MpcWorker(const MpcWorker&) = delete;
  MpcWorker& operator=(const MpcWorker&) = delete;

  void post(double t, const State& x, Vertex vtx);
  // Newest unseen solution, if any arrived since the last poll.
  std::optional<MpcOutput> poll();

 private:
  void loop();

  MpcReference ref_;
  MpcConfig cfg_;
  ModelParams params_;

  std::mutex mu_;
  std::condition_variable cv_;
  bool stop_ = false;
  struct Snapshot {
    double t;
    State x;
    Vertex vtx;
  };
  std::optional<Snapshot> pending_;
  std::optional<MpcOutput> fresh_;
  MpcOutput last_;
  bool have_last_ = false;

  std::thread worker_;
};

}  // namespace hopper
