#include "hopper/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "hopper/errors.hpp"

namespace hopper {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ScenarioError(path + ": " + what);
}

const json& member(const json& j, const std::string& path, const char* key) {
  if (!j.is_object() || !j.contains(key)) fail(path + "." + key, "missing required field");
  return j.at(key);
}

double req_num(const json& j, const std::string& path, const char* key) {
  const json& v = member(j, path, key);
  if (!v.is_number()) fail(path + "." + key, "expected a number");
  return v.get<double>();
}

double opt_num(const json& j, const std::string& path, const char* key, double dflt) {
  if (!j.is_object() || !j.contains(key)) return dflt;
  const json& v = j.at(key);
  if (!v.is_number()) fail(path + "." + key, "expected a number");
  return v.get<double>();
}

int opt_int(const json& j, const std::string& path, const char* key, int dflt) {
  if (!j.is_object() || !j.contains(key)) return dflt;
  const json& v = j.at(key);
  if (!v.is_number_integer()) fail(path + "." + key, "expected an integer");
  return v.get<int>();
}

bool opt_bool(const json& j, const std::string& path, const char* key, bool dflt) {
  if (!j.is_object() || !j.contains(key)) return dflt;
  const json& v = j.at(key);
  if (!v.is_boolean()) fail(path + "." + key, "expected a boolean");
  return v.get<bool>();
}

Eigen::Vector3d as_vec3(const json& v, const std::string& path) {
  if (!v.is_array() || v.size() != 3 || !v[0].is_number() || !v[1].is_number() ||
      !v[2].is_number())
    fail(path, "expected an array of 3 numbers");
  return {v[0].get<double>(), v[1].get<double>(), v[2].get<double>()};
}

Eigen::Vector3d req_vec3(const json& j, const std::string& path, const char* key) {
  return as_vec3(member(j, path, key), path + "." + key);
}

Eigen::Vector3d opt_vec3(const json& j, const std::string& path, const char* key,
                         const Eigen::Vector3d& dflt) {
  if (!j.is_object() || !j.contains(key)) return dflt;
  return as_vec3(j.at(key), path + "." + key);
}

ModelParams parse_model(const json& j, const std::string& path) {
  ModelParams m;
  m.m_body = req_num(j, path, "m_body");
  m.m_foot = req_num(j, path, "m_foot");
  m.inertia_body = req_vec3(j, path, "inertia_body");
  m.inertia_wheel = req_num(j, path, "inertia_wheel");
  m.leg_length = req_num(j, path, "leg_length");
  m.k_spring = req_num(j, path, "k_spring");
  m.b_spring = req_num(j, path, "b_spring");
  m.gear_foot = req_num(j, path, "gear_foot");
  m.g = req_num(j, path, "g");
  if (m.m_body <= 0 || m.m_foot <= 0) fail(path, "masses must be positive");
  if (m.k_spring <= 0) fail(path + ".k_spring", "must be positive");
  if (m.leg_length <= 0) fail(path + ".leg_length", "must be positive");
  return m;
}

MpcConfig parse_mpc(const json& j, const std::string& path) {
  MpcConfig c;
  c.N = opt_int(j, path, "N", c.N);
  c.sqp_iters = opt_int(j, path, "sqp_iters", c.sqp_iters);
  c.w_p = opt_num(j, path, "w_p", c.w_p);
  c.w_quat = opt_num(j, path, "w_quat", c.w_quat);
  c.w_v = opt_num(j, path, "w_v", c.w_v);
  c.w_omega = opt_num(j, path, "w_omega", c.w_omega);
  c.w_u = opt_num(j, path, "w_u", c.w_u);
  c.u_max = opt_num(j, path, "u_max", c.u_max);
  c.dt_flight = opt_num(j, path, "dt_flight", c.dt_flight);
  c.dt_ground = opt_num(j, path, "dt_ground", c.dt_ground);
  if (j.is_object() && j.contains("discretization")) {
    const json& d = j.at("discretization");
    if (!d.is_string()) fail(path + ".discretization", "expected \"exact\" or \"euler\"");
    const std::string s = d.get<std::string>();
    if (s == "exact")
      c.method = DiscretizeMethod::Exact;
    else if (s == "euler")
      c.method = DiscretizeMethod::Euler;
    else
      fail(path + ".discretization", "expected \"exact\" or \"euler\"");
  }
  if (c.N < 2) fail(path + ".N", "horizon must be at least 2");
  if (c.sqp_iters < 1) fail(path + ".sqp_iters", "must be at least 1");
  if (c.u_max <= 0) fail(path + ".u_max", "must be positive");
  if (c.dt_flight <= 0 || c.dt_ground <= 0) fail(path, "step sizes must be positive");
  return c;
}

Gains parse_gains(const json& j, const std::string& path) {
  Gains g;
  const double kp_rp = opt_num(j, path, "kp_rp", 120.0);
  const double kd_rp = opt_num(j, path, "kd_rp", 4.0);
  const double kp_yaw = opt_num(j, path, "kp_yaw", 15.0);
  const double kd_yaw = opt_num(j, path, "kd_yaw", 1.0);
  g.Kp = Eigen::Vector3d(kp_rp, kp_rp, kp_yaw).asDiagonal();
  g.Kd = Eigen::Vector3d(kd_rp, kd_rp, kd_yaw).asDiagonal();
  g.kp_foot = opt_num(j, path, "kp_foot", g.kp_foot);
  g.kd_foot = opt_num(j, path, "kd_foot", g.kd_foot);
  g.foot_setpoint = opt_num(j, path, "foot_setpoint", g.foot_setpoint);
  g.u_max_foot = opt_num(j, path, "u_max_foot", g.u_max_foot);
  if (kp_rp <= 0 || kd_rp <= 0 || kp_yaw <= 0 || kd_yaw <= 0)
    fail(path, "attitude gains must be positive");
  return g;
}

State default_x0() {
  State x;
  x.q.p = {0.0, 0.0, 0.45};
  return x;
}

State parse_x0(const json& j, const std::string& path, Vertex* v0) {
  State x = default_x0();
  x.q.p = opt_vec3(j, path, "p", x.q.p);
  if (j.is_object() && j.contains("quat")) {
    const json& q = j.at("quat");
    if (!q.is_array() || q.size() != 4 || !q[0].is_number() || !q[1].is_number() ||
        !q[2].is_number() || !q[3].is_number())
      fail(path + ".quat", "expected [w, x, y, z]");
    x.q.quat = quat_normalize(
        {q[0].get<double>(), q[1].get<double>(), q[2].get<double>(), q[3].get<double>()});
  }
  x.q.theta = opt_vec3(j, path, "theta", x.q.theta);
  x.q.ell = opt_num(j, path, "ell", x.q.ell);
  x.v.pdot = opt_vec3(j, path, "pdot", x.v.pdot);
  x.v.omega = opt_vec3(j, path, "omega", x.v.omega);
  x.v.thetadot = opt_vec3(j, path, "thetadot", x.v.thetadot);
  x.v.elldot = opt_num(j, path, "elldot", x.v.elldot);
  if (j.is_object() && j.contains("vertex")) {
    const json& v = j.at("vertex");
    if (!v.is_string()) fail(path + ".vertex", "expected \"flight\" or \"ground\"");
    const std::string s = v.get<std::string>();
    if (s == "flight")
      *v0 = Vertex::Flight;
    else if (s == "ground")
      *v0 = Vertex::Ground;
    else
      fail(path + ".vertex", "expected \"flight\" or \"ground\"");
  }
  return x;
}

ReferenceSpec parse_reference(const json& j, const std::string& path) {
  ReferenceSpec r;
  const json& ty = member(j, path, "type");
  if (!ty.is_string()) fail(path + ".type", "expected a string");
  const std::string type = ty.get<std::string>();
  if (type == "setpoint") {
    r.kind = ReferenceSpec::Kind::Setpoint;
    r.p = req_vec3(j, path, "p");
  } else if (type == "waypoints") {
    r.kind = ReferenceSpec::Kind::Waypoints;
    const json& times = member(j, path, "times");
    const json& points = member(j, path, "points");
    if (!times.is_array() || times.empty()) fail(path + ".times", "expected a nonempty array");
    if (!points.is_array() || points.size() != times.size())
      fail(path + ".points", "expected one 3-vector per time");
    for (size_t i = 0; i < times.size(); ++i) {
      if (!times[i].is_number()) fail(path + ".times", "expected numbers");
      r.times.push_back(times[i].get<double>());
      r.points.push_back(as_vec3(points[i], path + ".points"));
    }
    if (!std::is_sorted(r.times.begin(), r.times.end()))
      fail(path + ".times", "must be nondecreasing");
    r.p = r.points.front();
  } else if (type == "flip") {
    r.kind = ReferenceSpec::Kind::Flip;
    r.p = req_vec3(j, path, "p");
    r.flip_axis = req_vec3(j, path, "axis");
    if (r.flip_axis.norm() < 1e-12) fail(path + ".axis", "must be nonzero");
    r.flip_axis.normalize();
    r.flip_count = opt_int(j, path, "count", 1);
    if (r.flip_count < 1) fail(path + ".count", "must be at least 1");
    r.flip_trigger_time = opt_num(j, path, "trigger_time", 0.0);
    r.flip_duration = req_num(j, path, "duration");
    if (r.flip_duration <= 0) fail(path + ".duration", "must be positive");
  } else if (type == "disturbance") {
    r.kind = ReferenceSpec::Kind::Disturbance;
    r.p = req_vec3(j, path, "p");
    r.impulse = req_vec3(j, path, "impulse");
    r.impulse_time = req_num(j, path, "time");
    if (r.impulse_time < 0) fail(path + ".time", "must be nonnegative");
  } else {
    fail(path + ".type", "unknown reference type \"" + type + "\"");
  }
  return r;
}

}  // namespace

Scenario parse_scenario(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ScenarioError(std::string("scenario: invalid JSON: ") + e.what());
  }
  const std::string root = "scenario";
  if (!j.is_object()) fail(root, "top level must be an object");

  Scenario sc;
  const json& name = member(j, root, "name");
  if (!name.is_string()) fail(root + ".name", "expected a string");
  sc.name = name.get<std::string>();
  if (sc.name.empty()) fail(root + ".name", "must be nonempty");
  sc.duration = req_num(j, root, "duration");
  if (sc.duration <= 0) fail(root + ".duration", "must be positive");
  sc.model = parse_model(member(j, root, "model"), root + ".model");
  if (j.contains("mpc")) sc.mpc = parse_mpc(j.at("mpc"), root + ".mpc");
  if (j.contains("gains")) sc.gains = parse_gains(j.at("gains"), root + ".gains");
  if (j.contains("x0")) sc.x0 = parse_x0(j.at("x0"), root + ".x0", &sc.v0);
  else sc.x0 = default_x0();
  sc.reference = parse_reference(member(j, root, "reference"), root + ".reference");
  sc.seed = static_cast<unsigned>(opt_int(j, root, "seed", 0));
  sc.deterministic = opt_bool(j, root, "deterministic", true);
  return sc;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("scenario: cannot read file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

Eigen::Vector3d reference_position(const ReferenceSpec& ref, double t) {
  if (ref.kind != ReferenceSpec::Kind::Waypoints) return ref.p;
  const auto& ts = ref.times;
  const auto& ps = ref.points;
  if (t <= ts.front()) return ps.front();
  if (t >= ts.back()) return ps.back();
  const auto it = std::upper_bound(ts.begin(), ts.end(), t);
  const size_t i = static_cast<size_t>(it - ts.begin());
  const double span = ts[i] - ts[i - 1];
  const double s = span > 0 ? (t - ts[i - 1]) / span : 1.0;
  return ps[i - 1] + s * (ps[i] - ps[i - 1]);
}

}  // namespace hopper
