#include "hopper/dynamics.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Geometry>
#include <Eigen/LU>
#include <cmath>

#include "hopper/errors.hpp"

namespace hopper {

namespace {

constexpr double kCondLimit = 1e12;

Eigen::Matrix3d skew(const Eigen::Vector3d& a) {
  Eigen::Matrix3d S;
  S << 0, -a.z(), a.y(), a.z(), 0, -a.x(), -a.y(), a.x(), 0;
  return S;
}

// Body-frame leg vector from COM to foot and the shared bias acceleration
// of the foot point (centripetal + Coriolis of the sliding deflection).
Eigen::Vector3d leg_vector(const Config& q, const ModelParams& m) {
  return {0.0, 0.0, -(m.leg_length - q.ell)};
}

Eigen::Vector3d foot_bias_acc_body(const Config& q, const Veloc& v, const ModelParams& m) {
  const Eigen::Vector3d r = leg_vector(q, m);
  const Eigen::Vector3d e3{0, 0, 1};
  return v.omega.cross(v.omega.cross(r)) + 2.0 * v.elldot * v.omega.cross(e3);
}

}  // namespace

DynamicsTerms dynamics_terms(const Config& q, const Veloc& v, const ModelParams& m) {
  const Eigen::Matrix3d R = rotation_matrix(q.quat);
  const Eigen::Vector3d r = leg_vector(q, m);
  const Eigen::Matrix3d rx = skew(r);
  const Eigen::Vector3d e3{0, 0, 1};
  const Eigen::Matrix3d A = m.wheel_axes;

  DynamicsTerms out;
  out.D.setZero();
  auto D = [&out](int i, int j) -> Eigen::Block<Mat10, 3, 3> {
    return out.D.block<3, 3>(i, j);
  };

  // Translation / rotation / wheel / deflection blocks of the mass matrix.
  D(0, 0) = (m.m_body + m.m_foot) * Eigen::Matrix3d::Identity();
  D(0, 3) = -m.m_foot * R * rx;
  D(3, 0) = D(0, 3).transpose();
  D(3, 3) = m.inertia_body.asDiagonal().toDenseMatrix() +
            m.inertia_wheel * A * A.transpose() - m.m_foot * rx * rx;
  D(3, 6) = m.inertia_wheel * A;
  D(6, 3) = D(3, 6).transpose();
  D(6, 6) = m.inertia_wheel * Eigen::Matrix3d::Identity();
  out.D.block<3, 1>(0, 9) = m.m_foot * R * e3;
  out.D.block<1, 3>(9, 0) = out.D.block<3, 1>(0, 9).transpose();
  out.D.block<3, 1>(3, 9) = m.m_foot * rx * e3;  // zero for this leg geometry
  out.D.block<1, 3>(9, 3) = out.D.block<3, 1>(3, 9).transpose();
  out.D(9, 9) = m.m_foot;

  const Eigen::Vector3d c = foot_bias_acc_body(q, v, m);
  const Eigen::Vector3d g_body = R.transpose() * e3;  // world up, in body frame
  // Total wheel spin rates (body rate component + relative rate).
  const Eigen::Vector3d s = A.transpose() * v.omega + v.thetadot;

  out.H.setZero();
  out.H.segment<3>(0) = m.m_foot * R * c + (m.m_body + m.m_foot) * m.g * e3;
  Eigen::Vector3d gyro = v.omega.cross(m.inertia_body.asDiagonal() * v.omega);
  for (int i = 0; i < 3; ++i)
    gyro += m.inertia_wheel * s(i) * v.omega.cross(A.col(i));
  out.H.segment<3>(3) = m.m_foot * rx * c + gyro + m.m_foot * m.g * rx * g_body;
  out.H(9) = m.m_foot * e3.dot(c) + m.m_foot * m.g * g_body.z() + m.k_spring * q.ell +
             m.b_spring * v.elldot;

  out.B.setZero();
  out.B.block<3, 3>(6, 0).setIdentity();  // wheel torques act on the wheel rates;
                                          // the body reaction flows through D
  out.B(9, 3) = m.gear_foot;
  return out;
}

FootKinematics foot_kinematics(const Config& q, const Veloc& v, const ModelParams& m) {
  const Eigen::Matrix3d R = rotation_matrix(q.quat);
  const Eigen::Vector3d r = leg_vector(q, m);
  const Eigen::Vector3d e3{0, 0, 1};
  FootKinematics out;
  out.p_foot = q.p + R * r;
  out.pdot_foot = v.pdot + R * (v.omega.cross(r)) + R * e3 * v.elldot;
  return out;
}

ContactJacobian contact_jacobian(const Config& q, const Veloc& v, const ModelParams& m) {
  const Eigen::Matrix3d R = rotation_matrix(q.quat);
  const Eigen::Vector3d r = leg_vector(q, m);
  const Eigen::Vector3d e3{0, 0, 1};
  ContactJacobian out;
  out.J.setZero();
  out.J.block<3, 3>(0, 0).setIdentity();
  out.J.block<3, 3>(0, 3) = -R * skew(r);
  out.J.block<3, 1>(0, 9) = R * e3;
  out.Jdot_v = R * foot_bias_acc_body(q, v, m);
  return out;
}

namespace {

Eigen::LDLT<Mat10> checked_mass_ldlt(const Mat10& D) {
  Eigen::LDLT<Mat10> ldlt(D);
  const auto& d = ldlt.vectorD();
  const double dmax = d.maxCoeff();
  const double dmin = d.minCoeff();
  // LDLT pivot ratio as a cheap conditioning estimate; catches degenerate
  // parameter sets (zero masses) without an eigensolve in the hot path.
  if (!(dmin > 0.0) || dmax / dmin > kCondLimit)
    throw SingularMassMatrix("mass matrix conditioning estimate exceeds 1e12");
  return ldlt;
}

}  // namespace

StateDot vector_field(Vertex vtx, const State& x, const Input& u, const ModelParams& m) {
  const DynamicsTerms t = dynamics_terms(x.q, x.v, m);
  const Vec10 rhs = t.B * u - t.H;
  StateDot out;
  out.qdot = x.v;
  if (vtx == Vertex::Flight) {
    out.vdot = checked_mass_ldlt(t.D).solve(rhs);
    return out;
  }
  const ContactJacobian cj = contact_jacobian(x.q, x.v, m);
  Eigen::Matrix<double, 13, 13> K;
  K.setZero();
  K.topLeftCorner<10, 10>() = t.D;
  K.topRightCorner<10, 3>() = -cj.J.transpose();
  K.bottomLeftCorner<3, 10>() = cj.J;
  Eigen::Matrix<double, 13, 1> b;
  b << rhs, -cj.Jdot_v;
  Eigen::FullPivLU<Eigen::Matrix<double, 13, 13>> lu(K);
  if (!lu.isInvertible()) throw SingularKKT("contact KKT system is singular");
  out.vdot = lu.solve(b).head<10>();
  return out;
}

namespace {

State retract(const State& x, const Veloc& qdot, const Vec10& vdot, double h) {
  State out = x;
  out.q.p += h * qdot.pdot;
  out.q.quat = lie_euler_step(x.q.quat, omega_to_algebra(qdot.omega), h);
  out.q.theta += h * qdot.thetadot;
  out.q.ell += h * qdot.elldot;
  out.v = Veloc::from_vec(x.v.vec() + h * vdot);
  return out;
}

}  // namespace

State integrate_step(Vertex vtx, const State& x, const Input& u, double h,
                     const ModelParams& m) {
  const StateDot k1 = vector_field(vtx, x, u, m);
  const StateDot k2 = vector_field(vtx, retract(x, k1.qdot, k1.vdot, 0.5 * h), u, m);
  const StateDot k3 = vector_field(vtx, retract(x, k2.qdot, k2.vdot, 0.5 * h), u, m);
  const StateDot k4 = vector_field(vtx, retract(x, k3.qdot, k3.vdot, h), u, m);
  const Vec10 qdot_avg = (k1.qdot.vec() + 2.0 * k2.qdot.vec() + 2.0 * k3.qdot.vec() +
                          k4.qdot.vec()) /
                         6.0;
  const Vec10 vdot_avg = (k1.vdot + 2.0 * k2.vdot + 2.0 * k3.vdot + k4.vdot) / 6.0;
  return retract(x, Veloc::from_vec(qdot_avg), vdot_avg, h);
}

Veloc plastic_impact(const Config& q, const Veloc& v, const ModelParams& m) {
  const DynamicsTerms t = dynamics_terms(q, v, m);
  const ContactJacobian cj = contact_jacobian(q, v, m);
  const auto ldlt = checked_mass_ldlt(t.D);
  const Eigen::Matrix<double, 10, 3> DinvJt = ldlt.solve(cj.J.transpose());
  const Eigen::Matrix3d G = cj.J * DinvJt;
  const Eigen::Vector3d lam = G.ldlt().solve(cj.J * v.vec());
  return Veloc::from_vec(v.vec() - DinvJt * lam);
}

double kinetic_energy(const Config& q, const Veloc& v, const ModelParams& m) {
  const DynamicsTerms t = dynamics_terms(q, v, m);
  return 0.5 * v.vec().dot(t.D * v.vec());
}

double potential_energy(const Config& q, const ModelParams& m) {
  const Eigen::Vector3d pf = foot_kinematics(q, Veloc{}, m).p_foot;
  return m.m_body * m.g * q.p.z() + m.m_foot * m.g * pf.z() +
         0.5 * m.k_spring * q.ell * q.ell;
}

}  // namespace hopper
