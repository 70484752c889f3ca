#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "hopper/dynamics.hpp"
#include "hopper/geom.hpp"
#include "hopper/linearize.hpp"

using namespace hopper;

namespace {

std::mt19937& rng() {
  static std::mt19937 gen(20240817);
  return gen;
}

double uni(double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  return d(rng());
}

Eigen::Vector3d uni3(double s) { return {uni(-s, s), uni(-s, s), uni(-s, s)}; }

State random_flight_state() {
  State x;
  x.q.p = {uni(-1, 1), uni(-1, 1), uni(0.35, 0.8)};
  x.q.quat = exp_map(uni3(0.25));
  x.q.theta = uni3(3.0);
  x.q.ell = uni(-0.01, 0.02);
  x.v.pdot = uni3(1.0);
  x.v.omega = uni3(2.0);
  x.v.thetadot = uni3(10.0);
  x.v.elldot = uni(-0.3, 0.3);
  return x;
}

State random_ground_state() {
  State x = random_flight_state();
  x.q.p.z() = uni(0.26, 0.3);
  x.q.quat = exp_map(uni3(0.12));
  x.q.ell = uni(0.005, 0.04);
  x.v.elldot = uni(-1.0, 1.0);
  return x;
}

Input random_input(double s) {
  return Input{uni(-s, s), uni(-s, s), uni(-s, s), uni(-s, s)};
}

Vec20 random_dz() {
  Vec20 dz;
  for (int i = 0; i < 20; ++i) dz(i) = uni(-1, 1);
  return dz;
}

}  // namespace

TEST_CASE("to_local / recover_state round trip") {
  for (int i = 0; i < 50; ++i) {
    const State x = random_flight_state();
    const UnitQuat anchor = exp_map(uni3(0.3));
    const LocalState zs = to_local(x, anchor);
    const State back = recover_state(zs);
    CHECK((back.q.p - x.q.p).norm() <= 1e-12);
    CHECK(std::abs(back.q.quat.w - x.q.quat.w) <= 1e-12);
    CHECK((back.q.quat.im() - x.q.quat.im()).norm() <= 1e-12);
    CHECK((back.q.theta - x.q.theta).norm() <= 1e-12);
    CHECK(std::abs(back.q.ell - x.q.ell) <= 1e-12);
    CHECK((back.v.vec() - x.v.vec()).norm() <= 1e-12);
  }
}

TEST_CASE("to_local stores omega in algebra coordinates (half the physical rate)") {
  State x;
  x.v.omega = {1.0, -0.6, 0.4};
  const LocalState zs = to_local(x, UnitQuat::identity());
  CHECK((zs.z.segment<3>(13) - 0.5 * x.v.omega).norm() <= 1e-15);
}

TEST_CASE("to_local chart is zero at the anchor") {
  const UnitQuat anchor = exp_map({0.2, -0.1, 0.3});
  State x;
  x.q.quat = anchor;
  const LocalState zs = to_local(x, anchor);
  CHECK(zs.z.segment<3>(3).norm() <= 1e-12);
}

TEST_CASE("local_vector_field: configuration rows copy the velocity block") {
  for (int i = 0; i < 20; ++i) {
    const State x = random_flight_state();
    const UnitQuat anchor = quat_normalize(x.q.quat);
    const LocalState zs = to_local(x, anchor);
    const Input u = random_input(1.0);
    const Vec20 zdot = local_vector_field(Vertex::Flight, zs.z, anchor, u, ModelParams{});
    CHECK((zdot.head<10>() - zs.z.tail<10>()).norm() <= 1e-14);
  }
}

TEST_CASE("local_vector_field acceleration rows match the dynamics at the anchor") {
  const ModelParams m;
  for (int i = 0; i < 20; ++i) {
    const State x = random_flight_state();
    const UnitQuat anchor = quat_normalize(x.q.quat);
    const LocalState zs = to_local(x, anchor);
    const Input u = random_input(1.0);
    const Vec20 zdot = local_vector_field(Vertex::Flight, zs.z, anchor, u, m);
    const Vec10 vdot = vector_field(Vertex::Flight, x, u, m).vdot;
    CHECK((zdot.segment<3>(10) - vdot.segment<3>(0)).norm() <= 1e-10);
    // Angular acceleration appears halved (algebra coordinates).
    CHECK((zdot.segment<3>(13) - 0.5 * vdot.segment<3>(3)).norm() <= 1e-10);
    CHECK((zdot.segment<3>(16) - vdot.segment<3>(6)).norm() <= 1e-10);
    CHECK(std::abs(zdot(19) - vdot(9)) <= 1e-10);
  }
}

TEST_CASE("continuous linearization is exact at the expansion point") {
  const ModelParams m;
  for (auto vtx : {Vertex::Flight, Vertex::Ground}) {
    const State xbar = vtx == Vertex::Flight ? random_flight_state() : random_ground_state();
    const Input ubar = random_input(0.5);
    const UnitQuat anchor = quat_normalize(xbar.q.quat);
    const ContinuousAffine ca = linearize_flow_continuous(vtx, xbar, ubar, anchor, m);
    const LocalState zs = to_local(xbar, anchor);
    const Vec20 lhs = local_vector_field(vtx, zs.z, anchor, ubar, m);
    const Vec20 rhs = ca.A * zs.z + ca.B * ubar + ca.C;
    CHECK((lhs - rhs).norm() <= 1e-9 * std::max(1.0, lhs.norm()));
  }
}

TEST_CASE("continuous linearization has [0 I] configuration rows") {
  const State xbar = random_flight_state();
  const UnitQuat anchor = quat_normalize(xbar.q.quat);
  const ContinuousAffine ca =
      linearize_flow_continuous(Vertex::Flight, xbar, random_input(0.5), anchor, ModelParams{});
  CHECK((ca.A.topLeftCorner<10, 10>()).norm() == 0.0);
  CHECK((ca.A.topRightCorner<10, 10>() - Eigen::Matrix<double, 10, 10>::Identity()).norm() ==
        0.0);
  CHECK(ca.B.topRows<10>().norm() == 0.0);
  // Free-floating dynamics are invariant in world position and wheel angle
  // (the spring-deflection column is not: it carries the spring stiffness).
  CHECK(ca.A.bottomRows<10>().leftCols<3>().norm() == 0.0);
  CHECK(ca.A.bottomRows<10>().middleCols<3>(6).norm() == 0.0);
}

TEST_CASE("flow linearization remainder is second order (step-halving)") {
  // r(eps) = || f(zbar + eps dz, ubar + eps du) - affine prediction || should
  // quarter when eps halves; the ratio band [1/8, 1/2] leaves margin for
  // third-order terms and the 1e-6 differencing noise floor.
  const ModelParams m;
  int checked = 0;
  for (auto vtx : {Vertex::Flight, Vertex::Ground}) {
    for (int i = 0; i < 12; ++i) {
      const State xbar =
          vtx == Vertex::Flight ? random_flight_state() : random_ground_state();
      const Input ubar = random_input(0.5);
      const UnitQuat anchor = quat_normalize(xbar.q.quat);
      const ContinuousAffine ca = linearize_flow_continuous(vtx, xbar, ubar, anchor, m);
      const LocalState zs = to_local(xbar, anchor);
      const Vec20 dz = random_dz();
      const Input du = random_input(1.0);
      auto remainder = [&](double eps) {
        const Vec20 z = zs.z + eps * dz;
        const Input u = ubar + eps * du;
        const Vec20 truth = local_vector_field(vtx, z, anchor, u, m);
        return (truth - (ca.A * z + ca.B * u + ca.C)).norm();
      };
      const double e1 = remainder(2e-2);
      const double e2 = remainder(1e-2);
      if (e1 < 1e-7) continue;  // remainder below the FD noise floor; skip
      const double ratio = e2 / e1;
      CHECK(ratio >= 1.0 / 8.0);
      CHECK(ratio <= 1.0 / 2.0);
      ++checked;
    }
  }
  CHECK(checked >= 12);
}

TEST_CASE("exact discretization reproduces the affine ODE flow") {
  // Integrate zdot = A z + B u + C with fine RK4 and compare against the
  // matrix-exponential discretization over the same step.
  const ModelParams m;
  const State xbar = random_flight_state();
  const Input ubar = random_input(0.5);
  const UnitQuat anchor = quat_normalize(xbar.q.quat);
  const ContinuousAffine ca = linearize_flow_continuous(Vertex::Flight, xbar, ubar, anchor, m);
  const AffineFlow f = discretize(ca, 0.01, DiscretizeMethod::Exact);

  const Vec20 z0 = to_local(xbar, anchor).z + 0.1 * random_dz();
  const Input u = ubar + random_input(0.2);
  auto rhs = [&](const Vec20& z) -> Vec20 { return ca.A * z + ca.B * u + ca.C; };
  Vec20 z = z0;
  const int n = 200;
  const double h = 0.01 / n;
  for (int i = 0; i < n; ++i) {
    const Vec20 k1 = rhs(z);
    const Vec20 k2 = rhs(z + 0.5 * h * k1);
    const Vec20 k3 = rhs(z + 0.5 * h * k2);
    const Vec20 k4 = rhs(z + h * k3);
    z += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  const Vec20 zpred = f.A * z0 + f.B * u + f.C;
  CHECK((zpred - z).norm() <= 1e-10 * std::max(1.0, z.norm()));
}

TEST_CASE("euler discretization matches its closed form") {
  const ModelParams m;
  const State xbar = random_flight_state();
  const Input ubar = random_input(0.5);
  const UnitQuat anchor = quat_normalize(xbar.q.quat);
  const ContinuousAffine ca = linearize_flow_continuous(Vertex::Flight, xbar, ubar, anchor, m);
  const double h = 0.01;
  const AffineFlow f = discretize(ca, h, DiscretizeMethod::Euler);
  CHECK((f.A - (Mat20::Identity() + h * ca.A)).norm() <= 1e-14);
  CHECK((f.B - h * ca.B).norm() <= 1e-14);
  CHECK((f.C - h * ca.C).norm() <= 1e-14);
}

TEST_CASE("exact one-step prediction beats euler on random flight states") {
  const ModelParams m;
  const double h = 0.01;
  int exact_wins = 0;
  double sum_exact = 0.0, sum_euler = 0.0;
  for (int i = 0; i < 100; ++i) {
    const State x0 = random_flight_state();
    const Input u = random_input(1.0);
    const UnitQuat anchor = quat_normalize(x0.q.quat);
    const AffineFlow fe = build_affine_flow(Vertex::Flight, x0, u, anchor, h,
                                            DiscretizeMethod::Exact, m);
    const AffineFlow fu = build_affine_flow(Vertex::Flight, x0, u, anchor, h,
                                            DiscretizeMethod::Euler, m);
    // Ground truth: integrate the true dynamics with many fine RK4 steps.
    State xt = x0;
    for (int k = 0; k < 10; ++k) xt = integrate_step(Vertex::Flight, xt, u, h / 10, m);
    const Vec20 zt = to_local(xt, anchor).z;
    const Vec20 z0 = to_local(x0, anchor).z;
    const double err_exact = (fe.A * z0 + fe.B * u + fe.C - zt).norm();
    const double err_euler = (fu.A * z0 + fu.B * u + fu.C - zt).norm();
    sum_exact += err_exact;
    sum_euler += err_euler;
    if (err_exact <= err_euler + 1e-12) ++exact_wins;
  }
  CHECK(exact_wins == 100);
  CHECK(sum_exact <= sum_euler);
}

TEST_CASE("reset linearization: ground-to-flight is the identity") {
  const State xbar = random_ground_state();
  const AffineReset r = linearize_reset(Edge::GroundToFlight, xbar,
                                        quat_normalize(xbar.q.quat), ModelParams{});
  CHECK((r.D - Mat20::Identity()).norm() == 0.0);
  CHECK(r.E.norm() == 0.0);
}

TEST_CASE("reset linearization is exact at the expansion point") {
  // linearize_reset differences the extended reset (defined off the guard
  // surface too), so exactness is checked against that map directly.
  const ModelParams m;
  for (int i = 0; i < 10; ++i) {
    State xbar = random_flight_state();
    xbar.q.p.z() = m.leg_length - xbar.q.ell;  // near the touchdown surface
    const UnitQuat anchor = quat_normalize(xbar.q.quat);
    const AffineReset r = linearize_reset(Edge::FlightToGround, xbar, anchor, m);
    const LocalState zs = to_local(xbar, anchor);
    const State xplus = extended_reset(Edge::FlightToGround, xbar, m);
    const Vec20 zplus = to_local(xplus, anchor).z;
    CHECK((r.D * zs.z + r.E - zplus).norm() <= 1e-8 * std::max(1.0, zplus.norm()));
  }
}

TEST_CASE("reset linearization remainder is second order (step-halving)") {
  const ModelParams m;
  int checked = 0;
  for (int i = 0; i < 12; ++i) {
    State xbar = random_flight_state();
    xbar.q.p.z() = m.leg_length - xbar.q.ell;
    const UnitQuat anchor = quat_normalize(xbar.q.quat);
    const AffineReset r = linearize_reset(Edge::FlightToGround, xbar, anchor, m);
    const Vec20 z0 = to_local(xbar, anchor).z;
    const Vec20 dz = random_dz();
    auto remainder = [&](double eps) {
      const Vec20 z = z0 + eps * dz;
      const State x = recover_state({z, anchor});
      const State xp = extended_reset(Edge::FlightToGround, x, m);
      const Vec20 zp = to_local(xp, anchor).z;
      return (zp - (r.D * z + r.E)).norm();
    };
    const double e1 = remainder(2e-2);
    const double e2 = remainder(1e-2);
    if (e1 < 1e-7) continue;
    const double ratio = e2 / e1;
    CHECK(ratio >= 1.0 / 8.0);
    CHECK(ratio <= 1.0 / 2.0);
    ++checked;
  }
  CHECK(checked >= 8);
}

TEST_CASE("linearizations are invariant under yaw rotations of the world") {
  // Rotating body and anchor about gravity leaves the chart dynamics
  // unchanged, so all matrices must agree coefficient-wise.
  const ModelParams m;
  const State xbar = random_flight_state();
  const Input ubar = random_input(0.5);
  const UnitQuat anchor = quat_normalize(xbar.q.quat);
  const UnitQuat gyaw = exp_map({0.0, 0.0, 0.4});

  State xrot = xbar;
  xrot.q.quat = quat_mul(gyaw, xbar.q.quat);
  const UnitQuat anchor_rot = quat_mul(gyaw, anchor);
  // World-frame velocity must be rotated along for the same physical motion.
  const Eigen::Matrix3d Rg = rotation_matrix(gyaw);
  xrot.q.p = Rg * xbar.q.p;
  xrot.v.pdot = Rg * xbar.v.pdot;

  const ContinuousAffine a = linearize_flow_continuous(Vertex::Flight, xbar, ubar, anchor, m);
  const ContinuousAffine b =
      linearize_flow_continuous(Vertex::Flight, xrot, ubar, anchor_rot, m);
  // Attitude/wheel/spring rows and columns are chart-local and must match
  // exactly; translation rows mix through the world frame, so compare the
  // attitude sub-block.
  CHECK((a.A.block<3, 3>(13, 3) - b.A.block<3, 3>(13, 3)).norm() <= 1e-6);
  CHECK((a.A.block<3, 3>(13, 13) - b.A.block<3, 3>(13, 13)).norm() <= 1e-6);
  CHECK((a.B.block<3, 4>(13, 0) - b.B.block<3, 4>(13, 0)).norm() <= 1e-6);
}

TEST_CASE("attitude jacobians: wheel torque response matches momentum bookkeeping") {
  // At rest in flight, applying wheel torque u for a short time h changes the
  // physical body rate by (df_du u) h to first order. Compare against the
  // nonlinear integrator.
  const ModelParams m;
  State x;
  x.q.p = {0, 0, 0.5};
  const Input u{0.8, -0.5, 0.3, 0.0};
  const AttitudeJacobians aj = attitude_jacobians(Vertex::Flight, x, Input::Zero(), m);
  const double h = 1e-5;
  const State x1 = integrate_step(Vertex::Flight, x, u, h, m);
  const Eigen::Vector3d domega_true = x1.v.omega / h;
  const Eigen::Vector3d domega_lin = aj.df_du * u;
  CHECK((domega_true - domega_lin).norm() <= 1e-4 * domega_lin.norm());
}

TEST_CASE("attitude jacobians: gravity has no attitude torque in flight at rest") {
  // A free-floating body feels no orientation-dependent torque, so df_deta
  // vanishes at zero rates (gravity acts at the COM of each part; the foot
  // lies on the leg axis through the COM).
  const ModelParams m;
  State x;
  x.q.p = {0, 0, 0.5};
  const AttitudeJacobians aj = attitude_jacobians(Vertex::Flight, x, Input::Zero(), m);
  CHECK(aj.df_deta.norm() <= 1e-6);
}

TEST_CASE("attitude jacobians: ground df_deta is the pendulum stiffness scale") {
  // In stance the body pivots; tilting by eta moves the COM off the contact
  // vertical and gravity produces a restoring/overturning torque of order
  // m g L / I. Just pin the order of magnitude and the sign structure.
  const ModelParams m;
  State x;
  x.q.p = {0, 0, m.leg_length};
  x.q.ell = 0.01;
  const AttitudeJacobians aj = attitude_jacobians(Vertex::Ground, x, Input::Zero(), m);
  // Pitch perturbation about y produces pitch acceleration about y with a
  // positive (overturning, inverted-pendulum) sign.
  CHECK(aj.df_deta(1, 1) > 0.0);
  CHECK(aj.df_deta(0, 0) > 0.0);
  const double expected_scale =
      m.m_body * m.g * m.leg_length / (m.inertia_body.x() + m.m_body * m.leg_length * m.leg_length);
  CHECK(aj.df_deta(1, 1) > 0.1 * expected_scale);
  CHECK(aj.df_deta(1, 1) < 10.0 * expected_scale);
}

TEST_CASE("expm matches closed forms") {
  // Zero matrix.
  CHECK((expm(Eigen::MatrixXd::Zero(4, 4)) - Eigen::MatrixXd::Identity(4, 4)).norm() <=
        1e-14);
  // Diagonal.
  Eigen::MatrixXd D = Eigen::Vector3d{0.3, -1.2, 2.5}.asDiagonal();
  Eigen::MatrixXd E = expm(D);
  CHECK(E(0, 0) == doctest::Approx(std::exp(0.3)).epsilon(1e-13));
  CHECK(E(1, 1) == doctest::Approx(std::exp(-1.2)).epsilon(1e-13));
  CHECK(E(2, 2) == doctest::Approx(std::exp(2.5)).epsilon(1e-13));
  // Planar rotation generator.
  Eigen::MatrixXd J(2, 2);
  const double th = 1.3;
  J << 0, -th, th, 0;
  Eigen::MatrixXd R = expm(J);
  CHECK(R(0, 0) == doctest::Approx(std::cos(th)).epsilon(1e-13));
  CHECK(R(1, 0) == doctest::Approx(std::sin(th)).epsilon(1e-13));
  // Inverse property on a random matrix (exercises scaling and squaring).
  std::mt19937 gen(5);
  std::uniform_real_distribution<double> d(-2.0, 2.0);
  Eigen::MatrixXd M(6, 6);
  for (int i = 0; i < 36; ++i) M(i / 6, i % 6) = d(gen);
  CHECK((expm(M) * expm(-M) - Eigen::MatrixXd::Identity(6, 6)).norm() <= 1e-10);
}
