#include "hopper/hybrid.hpp"

#include <cmath>

#include "hopper/errors.hpp"

namespace hopper {

namespace {
constexpr double kGuardTol = 1e-9;
constexpr int kMaxBisect = 60;
constexpr double kResetGuardTol = 1e-6;
}  // namespace

GuardInfo guard_value(Vertex vtx, const State& x, const ModelParams& m) {
  if (vtx == Vertex::Flight) {
    const FootKinematics fk = foot_kinematics(x.q, x.v, m);
    return {fk.p_foot.z(), fk.pdot_foot.z() < 0.0};
  }
  return {x.q.ell, x.v.elldot < 0.0};
}

State extended_reset(Edge e, const State& x, const ModelParams& m) {
  State out = x;
  if (e == Edge::FlightToGround) out.v = plastic_impact(x.q, x.v, m);
  return out;
}

State reset_map(Edge e, const State& x, const ModelParams& m) {
  const Vertex src = e == Edge::FlightToGround ? Vertex::Flight : Vertex::Ground;
  if (std::abs(guard_value(src, x, m).value) > kResetGuardTol)
    throw GuardViolation("reset_map: state is not on the guard surface");
  return extended_reset(e, x, m);
}

std::optional<EventHit> locate_event(Vertex vtx, const State& x0, const Input& u,
                                     double h, const ModelParams& m) {
  const State x_end = integrate_step(vtx, x0, u, h, m);
  if (guard_value(vtx, x_end, m).value > 0.0) return std::nullopt;

  double lo = 0.0, hi = h;
  State x_hit = x_end;
  double g_hit = guard_value(vtx, x_end, m).value;
  for (int it = 0; it < kMaxBisect && std::abs(g_hit) > kGuardTol; ++it) {
    const double mid = 0.5 * (lo + hi);
    const State xm = integrate_step(vtx, x0, u, mid, m);
    const double gm = guard_value(vtx, xm, m).value;
    if (gm > 0.0) {
      lo = mid;
    } else {
      hi = mid;
      x_hit = xm;
      g_hit = gm;
    }
  }
  if (std::abs(g_hit) > kGuardTol)
    throw ConvergenceFailure("locate_event: bisection did not reach guard tolerance");
  if (!guard_value(vtx, x_hit, m).rate_ok) return std::nullopt;  // grazing
  // Keep the event strictly inside the step so sample times stay distinct.
  double tau = std::min(hi, h * (1.0 - 1e-12));
  tau = std::max(tau, h * 1e-12);
  return EventHit{tau, integrate_step(vtx, x0, u, tau, m)};
}

HybridTrace simulate(const State& x0, Vertex v0, const Controller& controller,
                     double T, const ModelParams& m, const SimOptions& opt) {
  HybridTrace trace;
  State x = x0;
  Vertex vtx = v0;
  bool armed = guard_value(vtx, x, m).value >= opt.guard_arm_margin;
  int n_events = 0;

  const long n_steps = std::lround(std::ceil(T / opt.dt - 1e-12));
  for (long k = 0; k < n_steps; ++k) {
    const double t = k * opt.dt;
    const double h_grid = std::min(opt.dt, T - t);
    const Input u = controller(t, x, vtx);
    trace.samples.push_back({t, vtx, x, u});

    double consumed = 0.0;
    while (h_grid - consumed > 1e-15) {
      const double h = h_grid - consumed;
      if (!armed && guard_value(vtx, x, m).value >= opt.guard_arm_margin) armed = true;
      std::optional<EventHit> hit;
      if (armed) hit = locate_event(vtx, x, u, h, m);
      if (!hit) {
        x = integrate_step(vtx, x, u, h, m);
        break;
      }
      const Edge e = vertex_exit_edge(vtx);
      const State x_plus = reset_map(e, hit->x, m);
      trace.events.push_back({t + consumed + hit->tau, e, hit->x, x_plus});
      if (++n_events > opt.max_events)
        throw MaxEventsExceeded("simulate: event count exceeded limit");
      x = x_plus;
      vtx = edge_target(e);
      consumed += hit->tau;
      armed = guard_value(vtx, x, m).value >= opt.guard_arm_margin;
    }
  }
  const Input u_last = trace.samples.empty() ? Input::Zero() : trace.samples.back().u;
  trace.samples.push_back({T, vtx, x, u_last});
  return trace;
}

}  // namespace hopper
