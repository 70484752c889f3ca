#include "hopper/trace_io.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

namespace hopper {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

int vertex_code(Vertex v) { return v == Vertex::Flight ? 0 : 1; }

int edge_code(Edge e) {
  switch (e) {
    case Edge::None: return 0;
    case Edge::FlightToGround: return 1;
    case Edge::GroundToFlight: return 2;
  }
  return 0;
}

std::ofstream open_or_throw(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  return out;
}

void state_row(std::ofstream& out, double t, Vertex vtx, const State& x, const Input& u,
               int edge) {
  out << fmt(t) << ',' << vertex_code(vtx);
  for (int i = 0; i < 3; ++i) out << ',' << fmt(x.q.p(i));
  out << ',' << fmt(x.q.quat.w) << ',' << fmt(x.q.quat.x) << ',' << fmt(x.q.quat.y)
      << ',' << fmt(x.q.quat.z);
  for (int i = 0; i < 3; ++i) out << ',' << fmt(x.q.theta(i));
  out << ',' << fmt(x.q.ell);
  for (int i = 0; i < 3; ++i) out << ',' << fmt(x.v.pdot(i));
  for (int i = 0; i < 3; ++i) out << ',' << fmt(x.v.omega(i));
  for (int i = 0; i < 3; ++i) out << ',' << fmt(x.v.thetadot(i));
  out << ',' << fmt(x.v.elldot);
  for (int i = 0; i < 4; ++i) out << ',' << fmt(u(i));
  out << ',' << edge << '\n';
}

}  // namespace

void write_trace_csv(const std::string& path, const HybridTrace& trace, int log_every) {
  std::ofstream out = open_or_throw(path);
  out << "t,vertex,p_x,p_y,p_z,quat_w,quat_x,quat_y,quat_z,theta_1,theta_2,theta_3,"
         "ell,pdot_x,pdot_y,pdot_z,omega_x,omega_y,omega_z,thetadot_1,thetadot_2,"
         "thetadot_3,elldot,u_1,u_2,u_3,u_4,event_edge\n";
  const auto& samples = trace.samples;
  const auto& events = trace.events;
  size_t ei = 0;
  for (size_t i = 0; i < samples.size(); ++i) {
    // Events strictly precede the next grid sample; the held input over the
    // step is the one recorded with the preceding sample.
    while (ei < events.size() && events[ei].t <= samples[i].t) {
      const Input& u_held = i > 0 ? samples[i - 1].u : samples[0].u;
      state_row(out, events[ei].t, edge_target(events[ei].edge), events[ei].x_plus,
                u_held, edge_code(events[ei].edge));
      ++ei;
    }
    const bool keep = i % static_cast<size_t>(log_every) == 0 || i + 1 == samples.size();
    if (keep) state_row(out, samples[i].t, samples[i].vtx, samples[i].x, samples[i].u, 0);
  }
  for (; ei < events.size(); ++ei)
    state_row(out, events[ei].t, edge_target(events[ei].edge), events[ei].x_plus,
              samples.empty() ? Input::Zero().eval() : samples.back().u,
              edge_code(events[ei].edge));
}

void write_mpc_csv(const std::string& path, const std::vector<MpcLogRow>& log) {
  std::ofstream out = open_or_throw(path);
  out << "t,solve_time,sqp_iters,qp_status,u_ff_1,u_ff_2,u_ff_3,u_ff_4,quat_d_w,"
         "quat_d_x,quat_d_y,quat_d_z,omega_d_x,omega_d_y,omega_d_z\n";
  for (const auto& row : log) {
    out << fmt(row.t) << ',' << fmt(row.solve_time) << ',' << row.sqp_iters << ','
        << static_cast<int>(row.status);
    for (int i = 0; i < 4; ++i) out << ',' << fmt(row.u_ff(i));
    out << ',' << fmt(row.quat_d.w) << ',' << fmt(row.quat_d.x) << ','
        << fmt(row.quat_d.y) << ',' << fmt(row.quat_d.z);
    for (int i = 0; i < 3; ++i) out << ',' << fmt(row.omega_d(i));
    out << '\n';
  }
}

void write_summary_json(const std::string& path, const Scenario& sc,
                        const RunSummary& summary) {
  nlohmann::json j;
  j["name"] = sc.name;
  j["duration"] = summary.duration;
  j["hop_count"] = summary.hop_count;
  j["apex_heights"] = summary.apex_heights;
  j["final_position_error"] = summary.final_position_error;
  j["max_xy_drift"] = summary.max_xy_drift;
  j["mean_mpc_solve_time"] = summary.mean_solve_time;
  j["max_mpc_solve_time"] = summary.max_solve_time;
  j["event_times"] = summary.event_times;
  j["mpc_solves"] = summary.mpc_solves;
  j["stale_solves"] = summary.stale_count;
  j["fault"] = summary.fault;
  j["fault_message"] = summary.fault_message;
  std::ofstream out = open_or_throw(path);
  out << j.dump(2) << '\n';
}

}  // namespace hopper
