#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "hopper/dynamics.hpp"
#include "hopper/geom.hpp"
#include "hopper/hybrid.hpp"
#include "hopper/linearize.hpp"
#include "hopper/lowlevel.hpp"
#include "hopper/mpc.hpp"
#include "hopper/qp.hpp"
#include "hopper/runner.hpp"
#include "hopper/scenario.hpp"

namespace py = pybind11;
using namespace hopper;

PYBIND11_MODULE(_core, m) {
  m.doc() = "Geometric hybrid MPC stack for a 3D hopping robot";

  py::register_exception<AntipodeError>(m, "AntipodeError");
  py::register_exception<ScenarioError>(m, "ScenarioError");

  py::class_<UnitQuat>(m, "UnitQuat")
      .def(py::init([](double w, double x, double y, double z) {
             return quat_normalize({w, x, y, z});
           }),
           py::arg("w") = 1.0, py::arg("x") = 0.0, py::arg("y") = 0.0,
           py::arg("z") = 0.0)
      .def_readwrite("w", &UnitQuat::w)
      .def_readwrite("x", &UnitQuat::x)
      .def_readwrite("y", &UnitQuat::y)
      .def_readwrite("z", &UnitQuat::z)
      .def_static("identity", &UnitQuat::identity)
      .def("im", &UnitQuat::im)
      .def("norm", &UnitQuat::norm)
      .def("__repr__", [](const UnitQuat& q) {
        return "UnitQuat(" + std::to_string(q.w) + ", " + std::to_string(q.x) + ", " +
               std::to_string(q.y) + ", " + std::to_string(q.z) + ")";
      });

  m.def("quat_mul", &quat_mul);
  m.def("quat_conj", &quat_conj);
  m.def("quat_normalize", &quat_normalize);
  m.def("exp_map", &exp_map);
  m.def("log_map", &log_map);
  m.def("quat_interp", &quat_interp);
  m.def("rotation_matrix", &rotation_matrix);
  m.def("rotate", &rotate);

  py::enum_<Vertex>(m, "Vertex")
      .value("Flight", Vertex::Flight)
      .value("Ground", Vertex::Ground);
  py::enum_<Edge>(m, "Edge")
      .value("NoEdge", Edge::None)
      .value("FlightToGround", Edge::FlightToGround)
      .value("GroundToFlight", Edge::GroundToFlight);

  py::class_<ModelParams>(m, "ModelParams")
      .def(py::init<>())
      .def_readwrite("m_body", &ModelParams::m_body)
      .def_readwrite("m_foot", &ModelParams::m_foot)
      .def_readwrite("inertia_body", &ModelParams::inertia_body)
      .def_readwrite("inertia_wheel", &ModelParams::inertia_wheel)
      .def_readwrite("wheel_axes", &ModelParams::wheel_axes)
      .def_readwrite("leg_length", &ModelParams::leg_length)
      .def_readwrite("k_spring", &ModelParams::k_spring)
      .def_readwrite("b_spring", &ModelParams::b_spring)
      .def_readwrite("gear_foot", &ModelParams::gear_foot)
      .def_readwrite("g", &ModelParams::g);

  py::class_<Config>(m, "Config")
      .def(py::init<>())
      .def_readwrite("p", &Config::p)
      .def_readwrite("quat", &Config::quat)
      .def_readwrite("theta", &Config::theta)
      .def_readwrite("ell", &Config::ell);

  py::class_<Veloc>(m, "Veloc")
      .def(py::init<>())
      .def_readwrite("pdot", &Veloc::pdot)
      .def_readwrite("omega", &Veloc::omega)
      .def_readwrite("thetadot", &Veloc::thetadot)
      .def_readwrite("elldot", &Veloc::elldot)
      .def("vec", &Veloc::vec)
      .def_static("from_vec", &Veloc::from_vec);

  py::class_<State>(m, "State")
      .def(py::init<>())
      .def_readwrite("q", &State::q)
      .def_readwrite("v", &State::v);

  m.def("vector_field", [](Vertex vtx, const State& x, const Input& u,
                           const ModelParams& mp) {
    const StateDot d = vector_field(vtx, x, u, mp);
    return py::make_tuple(d.qdot.vec(), d.vdot);
  });
  m.def("integrate_step", &integrate_step);
  m.def("plastic_impact", &plastic_impact);
  m.def("kinetic_energy", &kinetic_energy);
  m.def("potential_energy", &potential_energy);
  m.def("guard_value", [](Vertex vtx, const State& x, const ModelParams& mp) {
    const GuardInfo g = guard_value(vtx, x, mp);
    return py::make_tuple(g.value, g.rate_ok);
  });
  m.def("reset_map", &reset_map);

  py::class_<TraceSample>(m, "TraceSample")
      .def_readonly("t", &TraceSample::t)
      .def_readonly("vtx", &TraceSample::vtx)
      .def_readonly("x", &TraceSample::x)
      .def_readonly("u", &TraceSample::u);
  py::class_<TraceEvent>(m, "TraceEvent")
      .def_readonly("t", &TraceEvent::t)
      .def_readonly("edge", &TraceEvent::edge)
      .def_readonly("x_minus", &TraceEvent::x_minus)
      .def_readonly("x_plus", &TraceEvent::x_plus);
  py::class_<HybridTrace>(m, "HybridTrace")
      .def_readonly("samples", &HybridTrace::samples)
      .def_readonly("events", &HybridTrace::events);
  py::class_<SimOptions>(m, "SimOptions")
      .def(py::init<>())
      .def_readwrite("dt", &SimOptions::dt)
      .def_readwrite("max_events", &SimOptions::max_events)
      .def_readwrite("guard_arm_margin", &SimOptions::guard_arm_margin);
  m.def("simulate", &simulate, py::arg("x0"), py::arg("v0"), py::arg("controller"),
        py::arg("T"), py::arg("params"), py::arg("options") = SimOptions{});

  py::enum_<QpStatus>(m, "QpStatus")
      .value("Solved", QpStatus::Solved)
      .value("MaxIterations", QpStatus::MaxIterations)
      .value("NumericalFailure", QpStatus::NumericalFailure);

  py::class_<QpProblem>(m, "QpProblem")
      .def(py::init<>())
      .def_readwrite("H", &QpProblem::H)
      .def_readwrite("g", &QpProblem::g)
      .def_readwrite("Aeq", &QpProblem::Aeq)
      .def_readwrite("beq", &QpProblem::beq)
      .def_readwrite("lb", &QpProblem::lb)
      .def_readwrite("ub", &QpProblem::ub);
  py::class_<QpSettings>(m, "QpSettings")
      .def(py::init<>())
      .def_readwrite("tol", &QpSettings::tol)
      .def_readwrite("max_iter", &QpSettings::max_iter)
      .def_readwrite("rho", &QpSettings::rho)
      .def_readwrite("alpha", &QpSettings::alpha)
      .def_readwrite("polish", &QpSettings::polish);
  py::class_<QpSolution>(m, "QpSolution")
      .def_readonly("zstar", &QpSolution::zstar)
      .def_readonly("nu", &QpSolution::nu)
      .def_readonly("mu", &QpSolution::mu)
      .def_readonly("eq_residual", &QpSolution::eq_residual)
      .def_readonly("box_violation", &QpSolution::box_violation)
      .def_readonly("stationarity_residual", &QpSolution::stationarity_residual)
      .def_readonly("iterations", &QpSolution::iterations)
      .def_readonly("status", &QpSolution::status);
  m.def("solve_qp",
        [](const QpProblem& p, const QpSettings& s) { return solve_qp(p, s); },
        py::arg("problem"), py::arg("settings") = QpSettings{});

  py::class_<MpcConfig>(m, "MpcConfig")
      .def(py::init<>())
      .def_readwrite("N", &MpcConfig::N)
      .def_readwrite("sqp_iters", &MpcConfig::sqp_iters)
      .def_readwrite("w_p", &MpcConfig::w_p)
      .def_readwrite("w_quat", &MpcConfig::w_quat)
      .def_readwrite("w_v", &MpcConfig::w_v)
      .def_readwrite("w_omega", &MpcConfig::w_omega)
      .def_readwrite("w_u", &MpcConfig::w_u)
      .def_readwrite("u_max", &MpcConfig::u_max)
      .def_readwrite("dt_flight", &MpcConfig::dt_flight)
      .def_readwrite("dt_ground", &MpcConfig::dt_ground);

  py::class_<MpcReference>(m, "MpcReference")
      .def(py::init<>())
      .def_readwrite("position", &MpcReference::position)
      .def_readwrite("attitude", &MpcReference::attitude)
      .def_readwrite("omega", &MpcReference::omega)
      .def_static("setpoint", &MpcReference::setpoint);

  py::class_<ModeSchedule>(m, "ModeSchedule")
      .def(py::init<>())
      .def_readonly("vertices", &ModeSchedule::vertices)
      .def_readonly("edges", &ModeSchedule::edges)
      .def_readonly("steps", &ModeSchedule::steps)
      .def("horizon", &ModeSchedule::horizon);
  m.def("schedule_modes", &schedule_modes, py::arg("x"), py::arg("vtx"),
        py::arg("cfg") = MpcConfig{}, py::arg("params") = ModelParams{});

  py::class_<MpcOutput>(m, "MpcOutput")
      .def(py::init<>())
      .def_readwrite("quat_d", &MpcOutput::quat_d)
      .def_readwrite("omega_d", &MpcOutput::omega_d)
      .def_readwrite("u_ff", &MpcOutput::u_ff)
      .def_readonly("z_traj", &MpcOutput::z_traj)
      .def_readonly("u_traj", &MpcOutput::u_traj)
      .def_readonly("anchor", &MpcOutput::anchor)
      .def_readonly("sched", &MpcOutput::sched)
      .def_readonly("solve_time", &MpcOutput::solve_time)
      .def_readonly("sqp_iters_run", &MpcOutput::sqp_iters_run)
      .def_readonly("qp_status", &MpcOutput::qp_status)
      .def_readonly("stale", &MpcOutput::stale);

  m.def("mpc_step",
        [](double t, const State& x, Vertex vtx, const MpcReference& ref,
           const MpcOutput* prev, const MpcConfig& cfg, const ModelParams& params) {
          return mpc_step(t, x, vtx, ref, prev, cfg, params);
        },
        py::arg("t"), py::arg("x"), py::arg("vtx"), py::arg("ref"),
        py::arg("prev") = nullptr, py::arg("cfg") = MpcConfig{},
        py::arg("params") = ModelParams{});

  py::class_<Gains>(m, "Gains")
      .def(py::init<>())
      .def_readwrite("Kp", &Gains::Kp)
      .def_readwrite("Kd", &Gains::Kd)
      .def_readwrite("kp_foot", &Gains::kp_foot)
      .def_readwrite("kd_foot", &Gains::kd_foot)
      .def_readwrite("foot_setpoint", &Gains::foot_setpoint)
      .def_readwrite("u_max_foot", &Gains::u_max_foot);
  m.def("attitude_feedback", &attitude_feedback);
  m.def("foot_feedback", &foot_feedback);
  m.def("runtime_tick", &runtime_tick);

  py::class_<RunSummary>(m, "RunSummary")
      .def_readonly("hop_count", &RunSummary::hop_count)
      .def_readonly("apex_heights", &RunSummary::apex_heights)
      .def_readonly("final_position_error", &RunSummary::final_position_error)
      .def_readonly("max_xy_drift", &RunSummary::max_xy_drift)
      .def_readonly("mean_solve_time", &RunSummary::mean_solve_time)
      .def_readonly("max_solve_time", &RunSummary::max_solve_time)
      .def_readonly("event_times", &RunSummary::event_times)
      .def_readonly("mpc_solves", &RunSummary::mpc_solves)
      .def_readonly("stale_count", &RunSummary::stale_count)
      .def_readonly("fault", &RunSummary::fault)
      .def_readonly("fault_message", &RunSummary::fault_message);
  py::class_<RunnerOptions>(m, "RunnerOptions")
      .def(py::init<>())
      .def_readwrite("out_dir", &RunnerOptions::out_dir)
      .def_readwrite("log_every", &RunnerOptions::log_every)
      .def_readwrite("realtime", &RunnerOptions::realtime)
      .def_readwrite("force_deterministic", &RunnerOptions::force_deterministic)
      .def_readwrite("latency_ticks", &RunnerOptions::latency_ticks);
  py::class_<Scenario>(m, "Scenario")
      .def_readwrite("name", &Scenario::name)
      .def_readwrite("duration", &Scenario::duration)
      .def_readwrite("model", &Scenario::model)
      .def_readwrite("mpc", &Scenario::mpc)
      .def_readwrite("gains", &Scenario::gains)
      .def_readwrite("x0", &Scenario::x0)
      .def_readwrite("v0", &Scenario::v0)
      .def_readwrite("deterministic", &Scenario::deterministic);
  py::class_<RunResult>(m, "RunResult")
      .def_readonly("trace", &RunResult::trace)
      .def_readonly("summary", &RunResult::summary);
  m.def("load_scenario", &load_scenario);
  m.def("parse_scenario", &parse_scenario);
  m.def("run_closed_loop", &run_closed_loop, py::arg("scenario"),
        py::arg("options") = RunnerOptions{});
  m.def("run_scenario_files", &run_scenario_files);
}
