#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "hopper/dynamics.hpp"
#include "hopper/model.hpp"

namespace hopper {

// Guard for leaving the given vertex. Flight: foot height (touchdown when it
// reaches 0 moving down). Ground: spring deflection (liftoff when it returns
// to 0 still extending). rate_ok marks the crossing direction as valid.
struct GuardInfo {
  double value;
  bool rate_ok;
};

GuardInfo guard_value(Vertex vtx, const State& x, const ModelParams& m);

constexpr Edge vertex_exit_edge(Vertex v) {
  return v == Vertex::Flight ? Edge::FlightToGround : Edge::GroundToFlight;
}

// Reset across an edge, defined at any state (used verbatim by the reset
// linearization). FlightToGround applies the plastic contact impulse;
// GroundToFlight is the identity.
State extended_reset(Edge e, const State& x, const ModelParams& m);

// Guard-checked reset for simulation: requires the pre-impact state to lie
// within 1e-6 of the guard surface, else throws GuardViolation.
State reset_map(Edge e, const State& x, const ModelParams& m);

struct EventHit {
  double tau;  // time into the step, (0, h]
  State x;     // state on the guard surface (|guard| <= 1e-9)
};

// Bisection on the step fraction, re-integrating from x0 each probe so the
// located state is consistent with the integrator. Returns nullopt when the
// step does not cross the guard (or only grazes it with rate_ok false).
std::optional<EventHit> locate_event(Vertex vtx, const State& x0, const Input& u,
                                     double h, const ModelParams& m);

struct TraceSample {
  double t;
  Vertex vtx;
  State x;
  Input u;
};

struct TraceEvent {
  double t;
  Edge edge;
  State x_minus;
  State x_plus;
};

struct HybridTrace {
  std::vector<TraceSample> samples;
  std::vector<TraceEvent> events;
};

struct SimOptions {
  double dt = 1e-3;
  int max_events = 10000;
  // A vertex's guard only becomes active once its value has been observed at
  // or above this margin since entering the vertex. Immediately after liftoff
  // the foot sits exactly on the ground and can dip below it by microns while
  // the retraction loop pulls it up; without arming that would re-trigger
  // touchdown in the same instant.
  double guard_arm_margin = 1e-6;
};

using Controller = std::function<Input(double t, const State& x, Vertex vtx)>;

// Fixed-step closed-loop rollout with event location. Samples land on the
// uniform grid k*dt (plus the final time); events are recorded separately at
// their bisected times with both sides of the reset. The input from the
// controller is held over each grid step, including across events inside it.
HybridTrace simulate(const State& x0, Vertex v0, const Controller& controller,
                     double T, const ModelParams& m, const SimOptions& opt = {});

}  // namespace hopper
