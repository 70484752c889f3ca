#include "hopper/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <deque>
#include <filesystem>
#include <iostream>
#include <memory>

#include "hopper/errors.hpp"
#include "hopper/geom.hpp"
#include "hopper/lowlevel.hpp"
#include "hopper/trace_io.hpp"

namespace hopper {

namespace {

// Controller-side bookkeeping shared across simulation segments.
struct LoopState {
  long tick = 0;
  MpcOutput latest;
  std::optional<MpcOutput> prev;  // warm-start chain (synchronous mode)
  std::deque<std::pair<long, MpcOutput>> delayed;
  Vertex prev_vtx = Vertex::Flight;
  std::vector<MpcLogRow>* log = nullptr;
  // Flip choreography. The rotation reference is re-anchored every tick to
  // the measured winding about the flip axis, so the target leads the body
  // by a bounded arc instead of running ahead on the clock (a target more
  // than a half-turn ahead would pull the body backward through the chart).
  // Atomics because an asynchronous solver thread reads them mid-tick.
  std::atomic<bool> flip_fired{false};
  std::atomic<double> flip_phi{0.0};   // measured winding, algebra radians
  std::atomic<double> flip_time{0.0};  // absolute time of that measurement
  UnitQuat flip_qprev;                 // previous tick's attitude (sim thread only)
};

MpcLogRow log_row(double t, const MpcOutput& out) {
  MpcLogRow row;
  row.t = t;
  row.solve_time = out.solve_time;
  row.sqp_iters = out.sqp_iters_run;
  row.status = out.qp_status;
  row.stale = out.stale;
  row.u_ff = out.u_ff;
  row.quat_d = out.quat_d;
  row.omega_d = out.omega_d;
  return row;
}

void shift_trace(HybridTrace* t, double offset) {
  for (auto& s : t->samples) s.t += offset;
  for (auto& e : t->events) e.t += offset;
}

}  // namespace

RunResult run_closed_loop(const Scenario& sc, const RunnerOptions& opt) {
  RunResult res;
  const double T = opt.duration_override.value_or(sc.duration);
  res.summary.duration = T;
  const bool async_mode = (opt.realtime || !sc.deterministic) && !opt.force_deterministic;
  const ReferenceSpec& spec = sc.reference;

  auto ls = std::make_shared<LoopState>();
  ls->prev_vtx = sc.v0;
  ls->log = &res.mpc_log;
  ls->latest.quat_d = quat_normalize(sc.x0.q.quat);  // hold attitude until the first solve
  ls->latest.anchor = ls->latest.quat_d;
  ls->flip_qprev = quat_normalize(sc.x0.q.quat);

  // Reference signals. The flip target sweeps the commanded winding at the
  // configured rate, but is anchored to the winding the body has actually
  // accumulated: at query time t it leads the measurement by at most a
  // bounded arc. That keeps every horizon knot inside the attitude chart's
  // injectivity radius, so the pull is always forward through the turn.
  MpcReference mref;
  mref.position = [spec](double t) { return reference_position(spec, t); };
  if (spec.kind == ReferenceSpec::Kind::Flip) {
    const Eigen::Vector3d axis = spec.flip_axis;
    const double phi_total = M_PI * spec.flip_count;
    const double rate = M_PI * spec.flip_count / spec.flip_duration;
    mref.attitude = [ls, axis, phi_total, rate](double t) {
      constexpr double kMaxLead = 2.6;  // algebra radians, inside the chart radius pi
      if (!ls->flip_fired.load(std::memory_order_acquire)) return UnitQuat::identity();
      const double phi_now = ls->flip_phi.load(std::memory_order_acquire);
      const double ahead = std::max(t - ls->flip_time.load(std::memory_order_acquire), 0.0);
      const double lead = std::min(rate * ahead, kMaxLead);
      const double phi = std::clamp(phi_now + lead, 0.0, phi_total);
      return exp_map(phi * axis);
    };
    // Command the sweep rate while the turn is in progress; without it the
    // planner would brake toward each knot's (stationary) attitude target.
    mref.omega = [ls, axis, phi_total, rate](double t) -> Eigen::Vector3d {
      if (!ls->flip_fired.load(std::memory_order_acquire)) return Eigen::Vector3d::Zero();
      const double phi_now = ls->flip_phi.load(std::memory_order_acquire);
      const double ahead = std::max(t - ls->flip_time.load(std::memory_order_acquire), 0.0);
      if (phi_now + rate * ahead >= phi_total) return Eigen::Vector3d::Zero();
      return (2.0 * rate) * axis;  // algebra sweep rate -> physical rad/s
    };
  }

  std::unique_ptr<MpcWorker> worker;
  if (async_mode) worker = std::make_unique<MpcWorker>(mref, sc.mpc, sc.model);

  const Scenario* scp = &sc;
  const RunnerOptions* op = &opt;
  MpcWorker* wp = worker.get();
  const RuntimeConfig rt;

  // One 1 kHz tick at absolute time offset + t.
  auto make_controller = [=](double offset) {
    return [=](double t, const State& x, Vertex vtx) -> Input {
      const double ta = offset + t;
      if (spec.kind == ReferenceSpec::Kind::Flip) {
        const UnitQuat q = quat_normalize(x.q.quat);
        if (!ls->flip_fired.load(std::memory_order_relaxed) &&
            ls->prev_vtx == Vertex::Ground && vtx == Vertex::Flight &&
            ta >= spec.flip_trigger_time) {
          ls->flip_qprev = q;
          ls->flip_phi.store(0.0, std::memory_order_release);
          ls->flip_time.store(ta, std::memory_order_release);
          ls->flip_fired.store(true, std::memory_order_release);
        } else if (ls->flip_fired.load(std::memory_order_relaxed)) {
          // Tick-to-tick increments are tiny, so projecting each one on the
          // flip axis accumulates the winding without wrap ambiguity.
          const Eigen::Vector3d d = log_map(quat_mul(quat_conj(ls->flip_qprev), q));
          ls->flip_phi.store(ls->flip_phi.load(std::memory_order_relaxed) +
                                 d.dot(spec.flip_axis),
                             std::memory_order_release);
          ls->flip_time.store(ta, std::memory_order_release);
          ls->flip_qprev = q;
        }
      }
      ls->prev_vtx = vtx;

      if (ls->tick % rt.mpc_every == 0) {
        if (wp) {
          if (auto out = wp->poll()) {
            ls->latest = *out;
            ls->log->push_back(log_row(ta, *out));
          }
          wp->post(ta, x, vtx);
        } else {
          const MpcOutput out = mpc_step(ta, x, vtx, mref,
                                         ls->prev ? &*ls->prev : nullptr, scp->mpc,
                                         scp->model);
          ls->prev = out;
          ls->log->push_back(log_row(ta, out));
          if (op->latency_ticks > 0) {
            ls->delayed.emplace_back(ls->tick + op->latency_ticks, out);
          } else {
            ls->latest = out;
          }
        }
      }
      while (!ls->delayed.empty() && ls->tick >= ls->delayed.front().first) {
        ls->latest = ls->delayed.front().second;
        ls->delayed.pop_front();
      }
      ++ls->tick;
      return runtime_tick(x, vtx, ls->latest, scp->gains, scp->mpc, scp->model);
    };
  };

  SimOptions simopt;
  simopt.dt = rt.tick_dt;

  try {
    const bool split = spec.kind == ReferenceSpec::Kind::Disturbance &&
                       spec.impulse_time > 0.0 && spec.impulse_time < T;
    if (split) {
      const double T1 = std::round(spec.impulse_time / simopt.dt) * simopt.dt;
      res.trace = simulate(sc.x0, sc.v0, make_controller(0.0), T1, sc.model, simopt);
      State xm = res.trace.samples.back().x;
      const Vertex vm = res.trace.samples.back().vtx;
      xm.v.pdot += spec.impulse;
      HybridTrace rest =
          simulate(xm, vm, make_controller(T1), T - T1, sc.model, simopt);
      shift_trace(&rest, T1);
      // The first sample of the second leg duplicates time T1 (post-impulse
      // state); keep the pre-impulse row and append from the next one.
      res.trace.samples.insert(res.trace.samples.end(), rest.samples.begin() + 1,
                               rest.samples.end());
      res.trace.events.insert(res.trace.events.end(), rest.events.begin(),
                              rest.events.end());
    } else {
      res.trace = simulate(sc.x0, sc.v0, make_controller(0.0), T, sc.model, simopt);
    }
  } catch (const std::exception& e) {
    res.summary.fault = true;
    res.summary.fault_message = e.what();
  }

  // Summary statistics.
  RunSummary& s = res.summary;
  for (const auto& ev : res.trace.events) {
    s.event_times.push_back(ev.t);
    if (ev.edge == Edge::FlightToGround) ++s.hop_count;
  }
  const auto& smp = res.trace.samples;
  for (size_t i = 1; i + 1 < smp.size(); ++i) {
    if (smp[i].vtx != Vertex::Flight) continue;
    const double z0 = smp[i - 1].x.q.p.z();
    const double z1 = smp[i].x.q.p.z();
    const double z2 = smp[i + 1].x.q.p.z();
    if (z1 >= z0 && z1 > z2) s.apex_heights.push_back(z1);
  }
  if (!smp.empty()) {
    const Eigen::Vector3d p_end = smp.back().x.q.p;
    const Eigen::Vector3d p_ref = reference_position(spec, smp.back().t);
    s.final_position_error = (p_end.head<2>() - p_ref.head<2>()).norm();
    for (const auto& sample : smp) {
      const Eigen::Vector3d d = sample.x.q.p - reference_position(spec, sample.t);
      s.max_xy_drift = std::max(s.max_xy_drift, d.head<2>().norm());
    }
  }
  s.mpc_solves = static_cast<int>(res.mpc_log.size());
  for (const auto& row : res.mpc_log) {
    if (row.stale) ++s.stale_count;
    s.mean_solve_time += row.solve_time;
    s.max_solve_time = std::max(s.max_solve_time, row.solve_time);
  }
  if (s.mpc_solves > 0) s.mean_solve_time /= s.mpc_solves;
  return res;
}

int run_scenario_files(const std::string& json_path, const RunnerOptions& opt) {
  Scenario sc;
  try {
    sc = load_scenario(json_path);
  } catch (const ScenarioError& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 2;
  }

  RunResult res = run_closed_loop(sc, opt);

  try {
    std::filesystem::create_directories(opt.out_dir);
    const std::string base = opt.out_dir + "/" + sc.name;
    write_trace_csv(base + "_trace.csv", res.trace, std::max(1, opt.log_every));
    write_mpc_csv(base + "_mpc.csv", res.mpc_log);
    write_summary_json(base + "_summary.json", sc, res.summary);
  } catch (const std::exception& e) {
    std::cerr << "error: writing outputs: " << e.what() << std::endl;
    return 3;
  }

  if (res.summary.fault) {
    std::cerr << "error: simulation fault: " << res.summary.fault_message << std::endl;
    return 3;
  }
  std::cout << sc.name << ": " << res.summary.hop_count << " hops, "
            << res.mpc_log.size() << " MPC solves, mean solve "
            << res.summary.mean_solve_time * 1e3 << " ms" << std::endl;
  return 0;
}

}  // namespace hopper
