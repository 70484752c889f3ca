#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hopper/hybrid.hpp"
#include "hopper/scenario.hpp"

namespace hopper {

struct RunnerOptions {
  std::string out_dir = ".";
  int log_every = 1;                         // trace decimation (events always kept)
  bool realtime = false;                     // asynchronous MPC worker mode
  bool force_deterministic = false;          // overrides scenario.deterministic
  std::optional<double> duration_override;   // seconds
  int latency_ticks = 0;                     // extra delay before adopting a solve
};

struct MpcLogRow {
  double t = 0.0;
  double solve_time = 0.0;
  int sqp_iters = 0;
  QpStatus status = QpStatus::NumericalFailure;
  bool stale = false;
  Input u_ff = Input::Zero();
  UnitQuat quat_d;
  Eigen::Vector3d omega_d = Eigen::Vector3d::Zero();
};

struct RunSummary {
  int hop_count = 0;                  // flight -> ground events
  std::vector<double> apex_heights;   // COM z at each flight-phase local max
  double final_position_error = 0.0;  // horizontal, against the reference at T
  double max_xy_drift = 0.0;          // largest horizontal reference deviation
  double mean_solve_time = 0.0;
  double max_solve_time = 0.0;
  std::vector<double> event_times;
  int mpc_solves = 0;
  int stale_count = 0;
  double duration = 0.0;
  bool fault = false;
  std::string fault_message;
};

struct RunResult {
  HybridTrace trace;
  std::vector<MpcLogRow> mpc_log;
  RunSummary summary;
};

// Runs the closed loop (no file IO). Simulation faults are captured in
// summary.fault rather than thrown.
RunResult run_closed_loop(const Scenario& sc, const RunnerOptions& opt);

// Loads the scenario, runs it, writes <name>_trace.csv, <name>_mpc.csv, and
// <name>_summary.json under opt.out_dir. Returns the process exit code:
// 0 success, 2 configuration error, 3 simulation fault.
int run_scenario_files(const std::string& json_path, const RunnerOptions& opt);

}  // namespace hopper
