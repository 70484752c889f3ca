#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <vector>

#include "hopper/dynamics.hpp"
#include "hopper/errors.hpp"
#include "hopper/geom.hpp"
#include "support/oracles.hpp"

using namespace hopper;
using namespace hopper::testing;

namespace {

// Distance between two states: position, attitude (geodesic angle), wheel
// angles, deflection, and the full velocity vector, summed.
double state_distance(const State& a, const State& b) {
  return (a.q.p - b.q.p).norm() +
         2.0 * log_map(quat_mul(quat_conj(a.q.quat), b.q.quat)).norm() +
         (a.q.theta - b.q.theta).norm() + std::abs(a.q.ell - b.q.ell) +
         (a.v.vec() - b.v.vec()).norm();
}

State roll(Vertex vtx, State x, const Input& u, double h, int steps,
           const ModelParams& m) {
  for (int i = 0; i < steps; ++i) x = integrate_step(vtx, x, u, h, m);
  return x;
}

// Ground state with the foot pinned at the origin and a consistent velocity,
// produced by dropping a random touchdown state through the plastic impact.
State consistent_ground_state(std::mt19937& rng, const ModelParams& m) {
  State x = random_guard_state(rng, m);
  x.v = plastic_impact(x.q, x.v, m);
  return x;
}

}  // namespace

TEST_CASE("mass matrix is symmetric positive definite on random states") {
  std::mt19937 rng(101);
  const ModelParams m;
  for (int i = 0; i < 50; ++i) {
    const State x = random_flight_state(rng);
    const DynamicsTerms t = dynamics_terms(x.q, x.v, m);
    CHECK((t.D - t.D.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
    Eigen::SelfAdjointEigenSolver<Mat10> es(t.D);
    CHECK(es.eigenvalues().minCoeff() > 0.0);
  }
}

TEST_CASE("bias vector at rest reduces to statics") {
  const ModelParams m;
  State x;  // upright, at rest
  x.q.p = {0.0, 0.0, 1.0};
  x.q.ell = 0.01;
  const DynamicsTerms t = dynamics_terms(x.q, x.v, m);
  const double Mg = (m.m_body + m.m_foot) * m.g;
  CHECK(t.H.segment<3>(0).isApprox(Eigen::Vector3d(0, 0, Mg), 1e-14));
  CHECK(t.H.segment<3>(3).norm() <= 1e-14);  // upright: no gravity torque
  CHECK(t.H.segment<3>(6).norm() <= 1e-14);  // nothing acts on wheels at rest
  CHECK(t.H(9) == doctest::Approx(m.m_foot * m.g + m.k_spring * 0.01).epsilon(1e-12));
}

TEST_CASE("free fall is exact for any orientation at rest") {
  std::mt19937 rng(102);
  const ModelParams m;
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 20; ++i) {
    State x;
    x.q.p = {u(rng), u(rng), 2.0};
    x.q.quat = exp_map({0.7 * u(rng), 0.7 * u(rng), 0.7 * u(rng)});
    x.q.theta = {u(rng), u(rng), u(rng)};
    const StateDot sd = vector_field(Vertex::Flight, x, Input::Zero(), m);
    Vec10 expect = Vec10::Zero();
    expect(2) = -m.g;  // every mass falls at g; no internal motion develops
    CHECK((sd.vdot - expect).cwiseAbs().maxCoeff() <= 1e-11);
  }
}

TEST_CASE("flight energy is conserved without damping") {
  ModelParams m;
  m.b_spring = 0.0;  // isolate the conservative part
  State x;
  x.q.p = {0.0, 0.0, 2.0};
  x.q.quat = exp_map({0.2, -0.1, 0.3});
  x.v.pdot = {0.3, -0.2, 0.5};
  x.v.omega = {1.0, -2.0, 0.5};
  x.v.thetadot = {30.0, -20.0, 10.0};
  const double E0 = total_energy(x.q, x.v, m);
  const double h = 1e-4;
  double worst = 0.0;
  for (int k = 0; k < 10000; ++k) {  // 1 s
    x = integrate_step(Vertex::Flight, x, Input::Zero(), h, m);
    worst = std::max(worst, std::abs(total_energy(x.q, x.v, m) - E0));
  }
  CHECK(worst / std::abs(E0) <= 1e-6);
}

TEST_CASE("flight angular momentum is conserved under internal actuation") {
  // Wheel and foot torques are internal: they cannot move the momentum about
  // the COM. The torque sign flips every 0.1 s so the body rate stays bounded.
  std::mt19937 rng(103);
  const double h = 1e-4;

  auto run = [&](const ModelParams& m, const Input& u0) {
    State x = random_flight_state(rng);
    x.v.thetadot = {30.0, -20.0, 10.0};
    const Eigen::Vector3d L0 = angular_momentum_about_com(x.q, x.v, m);
    REQUIRE(L0.norm() > 0.05);
    double worst = 0.0;
    for (int k = 0; k < 10000; ++k) {  // 1 s
      const Input u = ((k / 1000) % 2 == 0) ? u0 : Input(-u0);
      x = integrate_step(Vertex::Flight, x, u, h, m);
      worst = std::max(worst,
                       (angular_momentum_about_com(x.q, x.v, m) - L0).norm());
    }
    CHECK(worst / L0.norm() <= 1e-6);
  };

  SUBCASE("wheel torques, aligned axes") {
    run(ModelParams{}, Input(1.5, -1.0, 0.8, 0.0));
  }
  SUBCASE("all four channels, skewed wheel axes") {
    ModelParams m;
    m.wheel_axes = rotation_matrix(exp_map({0.3, -0.2, 0.4}));
    run(m, Input(-0.7, 1.2, -1.5, 2.0));
  }
}

TEST_CASE("energy rate matches actuator power minus damper losses") {
  // d/dt(KE + PE) = thetadot . u_wheel + gear * elldot * u_foot - b * elldot^2
  // along any flight arc. The derivative is taken by central differences.
  const ModelParams m;
  const Input u(0.5, -0.3, 0.2, 0.4);
  State x;
  x.q.p = {0.0, 0.0, 2.0};
  x.q.quat = exp_map({0.1, 0.2, -0.1});
  x.q.ell = m.gear_foot * u(3) / m.k_spring;  // start at the loaded equilibrium
  x.v.omega = {0.8, -0.5, 0.3};
  x.v.thetadot = {5.0, 3.0, -2.0};
  const double h = 1e-4;
  std::vector<State> path(2001);
  path[0] = x;
  for (size_t k = 1; k < path.size(); ++k)
    path[k] = integrate_step(Vertex::Flight, path[k - 1], u, h, m);
  for (size_t k = 10; k + 10 < path.size(); k += 10) {
    const double dE = (total_energy(path[k + 1].q, path[k + 1].v, m) -
                       total_energy(path[k - 1].q, path[k - 1].v, m)) /
                      (2.0 * h);
    const Veloc& v = path[k].v;
    const double P = v.thetadot.dot(u.head<3>()) + m.gear_foot * v.elldot * u(3) -
                     m.b_spring * v.elldot * v.elldot;
    CHECK(std::abs(dE - P) <= 1e-4 * (1.0 + std::abs(P)));
  }
}

TEST_CASE("foot kinematics matches the configuration chain rule") {
  const ModelParams m;

  SUBCASE("upright rest pose") {
    State x;
    x.q.p = {0.2, -0.1, 1.0};
    const FootKinematics fk = foot_kinematics(x.q, x.v, m);
    CHECK(fk.p_foot.isApprox(x.q.p - Eigen::Vector3d(0, 0, m.leg_length), 1e-14));
    CHECK(fk.pdot_foot.norm() <= 1e-14);
  }

  SUBCASE("half-turn about x points the leg up") {
    State x;
    x.q.quat = exp_map({M_PI / 2.0, 0.0, 0.0});  // algebra pi/2 = physical pi
    const FootKinematics fk = foot_kinematics(x.q, x.v, m);
    CHECK(fk.p_foot.isApprox(x.q.p + Eigen::Vector3d(0, 0, m.leg_length), 1e-12));
  }

  SUBCASE("velocity matches a central difference along a flight arc") {
    std::mt19937 rng(104);
    State x = random_flight_state(rng);
    const Input u(0.2, -0.1, 0.3, 0.2);
    const double h = 1e-5;
    const State xm = x;
    const State x0 = integrate_step(Vertex::Flight, xm, u, h, m);
    const State xp = integrate_step(Vertex::Flight, x0, u, h, m);
    const Eigen::Vector3d fd = (foot_kinematics(xp.q, xp.v, m).p_foot -
                                foot_kinematics(xm.q, xm.v, m).p_foot) /
                               (2.0 * h);
    CHECK((foot_kinematics(x0.q, x0.v, m).pdot_foot - fd).norm() <= 1e-6);
  }
}

TEST_CASE("contact jacobian is consistent with the foot kinematics") {
  std::mt19937 rng(105);
  const ModelParams m;
  for (int i = 0; i < 50; ++i) {
    const State x = random_flight_state(rng);
    const ContactJacobian cj = contact_jacobian(x.q, x.v, m);
    CHECK(cj.J.block<3, 3>(0, 0).isIdentity(1e-15));
    const Eigen::Vector3d Jv = cj.J * x.v.vec();
    CHECK((Jv - foot_kinematics(x.q, x.v, m).pdot_foot).norm() <= 1e-10);
  }

  SUBCASE("drift term matches a finite difference of J*v") {
    State x = random_flight_state(rng);
    // Quiet the stiff spring mode: its fourth time derivative (~omega_s^4 l)
    // would dominate the finite-difference truncation term.
    x.q.ell = 0.0;
    x.v.elldot = 0.0;
    const Input u(0.1, 0.2, -0.1, 0.3);
    const double h = 1e-6;
    const State xm = x;
    const State x0 = integrate_step(Vertex::Flight, xm, u, h, m);
    const State xp = integrate_step(Vertex::Flight, x0, u, h, m);
    auto Jv = [&](const State& s) -> Eigen::Vector3d {
      return contact_jacobian(s.q, s.v, m).J * s.v.vec();
    };
    const Eigen::Vector3d fd = (Jv(xp) - Jv(xm)) / (2.0 * h);
    const StateDot sd = vector_field(Vertex::Flight, x0, u, m);
    const ContactJacobian cj = contact_jacobian(x0.q, x0.v, m);
    // d/dt(J v) = Jdot v + J vdot
    CHECK((fd - (cj.Jdot_v + cj.J * sd.vdot)).norm() <= 1e-5);
  }
}

TEST_CASE("pinned-foot flow preserves the contact point") {
  std::mt19937 rng(106);
  const ModelParams m;
  for (int trial = 0; trial < 5; ++trial) {
    State x = consistent_ground_state(rng, m);
    const Eigen::Vector3d foot0 = foot_kinematics(x.q, x.v, m).p_foot;
    const double h = 1e-3;
    for (int k = 0; k < 80; ++k) {
      if (k % 20 == 0) {
        const StateDot sd = vector_field(Vertex::Ground, x, Input::Zero(), m);
        const ContactJacobian cj = contact_jacobian(x.q, x.v, m);
        CHECK((cj.J * sd.vdot + cj.Jdot_v).norm() <= 1e-8);
      }
      x = integrate_step(Vertex::Ground, x, Input::Zero(), h, m);
      CHECK((foot_kinematics(x.q, x.v, m).p_foot - foot0).norm() <= 1e-5);
    }
  }
}

TEST_CASE("plastic impact pins the foot and never creates energy") {
  std::mt19937 rng(107);
  const ModelParams m;
  for (int i = 0; i < 100; ++i) {
    const State x = random_guard_state(rng, m);
    const Veloc vp = plastic_impact(x.q, x.v, m);
    const ContactJacobian cj = contact_jacobian(x.q, x.v, m);

    CHECK((cj.J * vp.vec()).norm() <= 1e-9);

    const double ke_minus = kinetic_energy(x.q, x.v, m);
    const double ke_plus = kinetic_energy(x.q, vp, m);
    CHECK(ke_plus <= ke_minus * (1.0 + 1e-12));

    // The impulse acts at the foot: wheel spin momentum and the angular
    // momentum about the contact point cannot change.
    const Eigen::Vector3d s_minus =
        m.wheel_axes.transpose() * x.v.omega + x.v.thetadot;
    const Eigen::Vector3d s_plus = m.wheel_axes.transpose() * vp.omega + vp.thetadot;
    CHECK((s_plus - s_minus).cwiseAbs().maxCoeff() <= 1e-10);

    const Eigen::Vector3d foot = foot_kinematics(x.q, x.v, m).p_foot;
    const Eigen::Vector3d Lm = angular_momentum_about_point(x.q, x.v, m, foot);
    const Eigen::Vector3d Lp = angular_momentum_about_point(x.q, vp, m, foot);
    CHECK((Lp - Lm).norm() <= 1e-9 * std::max(1.0, Lm.norm()));

    // Re-impacting an already-pinned velocity changes nothing.
    const Veloc vpp = plastic_impact(x.q, vp, m);
    CHECK((vpp.vec() - vp.vec()).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("integrator converges at fourth order on translational motion") {
  // With zero body rate and wheel torque the attitude stays fixed and the
  // dynamics are purely Euclidean (vertical fall plus the spring mode), so
  // the classical RK4 order is visible: halving h divides the error by ~16.
  const ModelParams m;
  State x0;
  x0.q.p = {0.0, 0.0, 2.0};
  x0.q.quat = exp_map({0.3, -0.2, 0.1});
  x0.q.ell = 0.02;
  x0.v.elldot = 0.5;
  const Input u(0.0, 0.0, 0.0, 0.5);
  const double T = 0.05;
  const State ref = roll(Vertex::Flight, x0, u, T / 8000.0, 8000, m);
  const double e1 = state_distance(roll(Vertex::Flight, x0, u, T / 250.0, 250, m), ref);
  const double e2 = state_distance(roll(Vertex::Flight, x0, u, T / 500.0, 500, m), ref);
  const double r = e2 / e1;
  CHECK(r >= 1.0 / 24.0);
  CHECK(r <= 1.0 / 10.0);
}

TEST_CASE("integrator converges at second order or better while tumbling") {
  // The attitude update commits the step with a single averaged exponential,
  // which costs the classical order on the quaternion slot; the scheme must
  // still converge at least quadratically overall.
  const ModelParams m;
  State x0;
  x0.q.p = {0.0, 0.0, 2.0};
  x0.q.quat = exp_map({0.2, 0.1, -0.3});
  x0.v.pdot = {0.5, -0.3, 0.2};
  x0.v.omega = {2.0, 1.0, -1.5};
  x0.v.thetadot = {10.0, -5.0, 8.0};
  const Input u(0.3, -0.2, 0.4, 0.1);
  const double T = 0.1;
  const State ref = roll(Vertex::Flight, x0, u, T / 16000.0, 16000, m);
  const double e1 = state_distance(roll(Vertex::Flight, x0, u, T / 50.0, 50, m), ref);
  const double e2 = state_distance(roll(Vertex::Flight, x0, u, T / 100.0, 100, m), ref);
  const double e3 = state_distance(roll(Vertex::Flight, x0, u, T / 200.0, 200, m), ref);
  CHECK(e2 / e1 <= 1.0 / 3.2);
  CHECK(e3 / e2 <= 1.0 / 3.2);
}

TEST_CASE("integrator keeps the quaternion on the unit sphere") {
  const ModelParams m;
  std::mt19937 rng(108);
  State x = random_flight_state(rng);
  const Input u(0.5, -0.5, 0.5, 0.0);
  for (int k = 0; k < 10000; ++k) {
    x = integrate_step(Vertex::Flight, x, u, 1e-4, m);
    const double n = std::sqrt(x.q.quat.w * x.q.quat.w + x.q.quat.im().squaredNorm());
    REQUIRE(std::abs(n - 1.0) <= 1e-12);
  }
}

TEST_CASE("degenerate parameters are rejected") {
  std::mt19937 rng(109);
  const State x = random_flight_state(rng);
  ModelParams bad;
  bad.m_foot = 0.0;  // zero foot mass makes the deflection row singular
  CHECK_THROWS_AS(vector_field(Vertex::Flight, x, Input::Zero(), bad),
                  SingularMassMatrix);
}
