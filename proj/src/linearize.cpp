#include "hopper/linearize.hpp"

#include <Eigen/LU>
#include <cmath>

namespace hopper {

namespace {
constexpr double kFdStep = 1e-6;
}

LocalState to_local(const State& x, const UnitQuat& anchor) {
  LocalState out;
  out.anchor = anchor;
  out.z.segment<3>(0) = x.q.p;
  out.z.segment<3>(3) = log_map(quat_mul(quat_conj(anchor), x.q.quat));
  out.z.segment<3>(6) = x.q.theta;
  out.z(9) = x.q.ell;
  out.z.segment<10>(10) = x.v.vec();
  out.z.segment<3>(13) = omega_to_algebra(x.v.omega);
  return out;
}

State recover_state(const LocalState& zs) {
  State x;
  x.q.p = zs.z.segment<3>(0);
  x.q.quat = quat_mul(zs.anchor, exp_map(zs.z.segment<3>(3)));
  x.q.theta = zs.z.segment<3>(6);
  x.q.ell = zs.z(9);
  x.v = Veloc::from_vec(zs.z.segment<10>(10));
  x.v.omega = omega_to_physical(zs.z.segment<3>(13));
  return x;
}

namespace {

// Acceleration half of the local rates (the only part that needs the model).
Vec10 local_accel(Vertex vtx, const Vec20& z, const UnitQuat& anchor, const Input& u,
                  const ModelParams& m) {
  const State x = recover_state({z, anchor});
  Vec10 a = vector_field(vtx, x, u, m).vdot;
  a.segment<3>(3) *= 0.5;  // physical angular acceleration -> algebra rate
  return a;
}

}  // namespace

Vec20 local_vector_field(Vertex vtx, const Vec20& z, const UnitQuat& anchor,
                         const Input& u, const ModelParams& m) {
  Vec20 zdot;
  zdot.segment<10>(0) = z.segment<10>(10);
  zdot.segment<10>(10) = local_accel(vtx, z, anchor, u, m);
  return zdot;
}

ContinuousAffine linearize_flow_continuous(Vertex vtx, const State& xbar,
                                           const Input& ubar, const UnitQuat& anchor,
                                           const ModelParams& m) {
  const Vec20 zbar = to_local(xbar, anchor).z;
  ContinuousAffine out;
  out.A.setZero();
  out.A.topRightCorner<10, 10>().setIdentity();
  out.B.setZero();

  // Differenced columns: xi, ell, and the full velocity block. The dynamics
  // do not depend on p (uniform gravity, flat ground) or on the wheel angles
  // (cyclic), so those columns stay zero.
  const int cols[] = {3, 4, 5, 9, 10, 11, 12, 13, 14, 15, 16, 17, 18, 19};
  for (int col : cols) {
    Vec20 zp = zbar, zm = zbar;
    zp(col) += kFdStep;
    zm(col) -= kFdStep;
    out.A.block<10, 1>(10, col) =
        (local_accel(vtx, zp, anchor, ubar, m) - local_accel(vtx, zm, anchor, ubar, m)) /
        (2.0 * kFdStep);
  }
  for (int j = 0; j < 4; ++j) {
    Input up = ubar, um = ubar;
    up(j) += kFdStep;
    um(j) -= kFdStep;
    out.B.block<10, 1>(10, j) =
        (local_accel(vtx, zbar, anchor, up, m) - local_accel(vtx, zbar, anchor, um, m)) /
        (2.0 * kFdStep);
  }
  out.C = local_vector_field(vtx, zbar, anchor, ubar, m) - out.A * zbar - out.B * ubar;
  return out;
}

AffineFlow discretize(const ContinuousAffine& c, double h, DiscretizeMethod method) {
  AffineFlow out;
  if (method == DiscretizeMethod::Euler) {
    out.A = Mat20::Identity() + h * c.A;
    out.B = h * c.B;
    out.C = h * c.C;
    return out;
  }
  // exp of the augmented generator gives the exact flow of the frozen model:
  // the top-right block is int_0^h exp(A s) ds [B C].
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(25, 25);
  M.topLeftCorner<20, 20>() = c.A;
  M.block<20, 4>(0, 20) = c.B;
  M.block<20, 1>(0, 24) = c.C;
  const Eigen::MatrixXd E = expm(h * M);
  out.A = E.topLeftCorner<20, 20>();
  out.B = E.block<20, 4>(0, 20);
  out.C = E.block<20, 1>(0, 24);
  return out;
}

AffineFlow build_affine_flow(Vertex vtx, const State& xbar, const Input& ubar,
                             const UnitQuat& anchor, double h, DiscretizeMethod method,
                             const ModelParams& m) {
  return discretize(linearize_flow_continuous(vtx, xbar, ubar, anchor, m), h, method);
}

AffineReset linearize_reset(Edge e, const State& xbar, const UnitQuat& anchor,
                            const ModelParams& m) {
  AffineReset out;
  if (e == Edge::GroundToFlight) {
    out.D = Mat20::Identity();
    out.E = Vec20::Zero();
    return out;
  }
  const Vec20 zbar = to_local(xbar, anchor).z;
  const auto reset_local_vel = [&](const Vec20& z) -> Vec10 {
    const State xm = recover_state({z, anchor});
    const State xp = extended_reset(e, xm, m);
    Vec10 vp = xp.v.vec();
    vp.segment<3>(3) = omega_to_algebra(xp.v.omega);
    return vp;
  };
  out.D.setZero();
  out.D.topLeftCorner<10, 10>().setIdentity();  // impact leaves the configuration
  for (int col = 0; col < 20; ++col) {
    Vec20 zp = zbar, zm = zbar;
    zp(col) += kFdStep;
    zm(col) -= kFdStep;
    out.D.block<10, 1>(10, col) =
        (reset_local_vel(zp) - reset_local_vel(zm)) / (2.0 * kFdStep);
  }
  Vec20 plus = zbar;
  plus.segment<10>(10) = reset_local_vel(zbar);
  out.E = plus - out.D * zbar;
  return out;
}

AttitudeJacobians attitude_jacobians(Vertex vtx, const State& xbar, const Input& ubar,
                                     const ModelParams& m) {
  const auto omegadot = [&](const State& x, const Input& u) -> Eigen::Vector3d {
    return vector_field(vtx, x, u, m).vdot.segment<3>(3);
  };
  AttitudeJacobians out;
  for (int i = 0; i < 3; ++i) {
    ImQuat3 eta = ImQuat3::Zero();
    eta(i) = kFdStep;
    State xp = xbar, xm = xbar;
    xp.q.quat = quat_mul(xbar.q.quat, exp_map(eta));
    xm.q.quat = quat_mul(xbar.q.quat, exp_map(-eta));
    out.df_deta.col(i) = (omegadot(xp, ubar) - omegadot(xm, ubar)) / (2.0 * kFdStep);

    State wp = xbar, wm = xbar;
    wp.v.omega(i) += kFdStep;
    wm.v.omega(i) -= kFdStep;
    out.df_domega.col(i) = (omegadot(wp, ubar) - omegadot(wm, ubar)) / (2.0 * kFdStep);
  }
  for (int j = 0; j < 4; ++j) {
    Input up = ubar, um = ubar;
    up(j) += kFdStep;
    um(j) -= kFdStep;
    out.df_du.col(j) = (omegadot(xbar, up) - omegadot(xbar, um)) / (2.0 * kFdStep);
  }
  return out;
}

Eigen::MatrixXd expm(const Eigen::MatrixXd& M) {
  const int n = static_cast<int>(M.rows());
  // (6,6) Pade coefficients c_{j+1} = c_j (6-j)/((12-j)(j+1)).
  double c[7];
  c[0] = 1.0;
  for (int j = 0; j < 6; ++j) c[j + 1] = c[j] * (6.0 - j) / ((12.0 - j) * (j + 1.0));

  const double nrm = M.cwiseAbs().rowwise().sum().maxCoeff();
  int s = 0;
  if (nrm > 0.5) s = std::max(0, static_cast<int>(std::ceil(std::log2(nrm / 0.5))));
  const Eigen::MatrixXd A = M / std::ldexp(1.0, s);

  const Eigen::MatrixXd A2 = A * A;
  const Eigen::MatrixXd A4 = A2 * A2;
  const Eigen::MatrixXd A6 = A4 * A2;
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd U = A * (c[1] * I + c[3] * A2 + c[5] * A4);
  const Eigen::MatrixXd V = c[0] * I + c[2] * A2 + c[4] * A4 + c[6] * A6;
  Eigen::MatrixXd E = (V - U).partialPivLu().solve(V + U);
  for (int i = 0; i < s; ++i) E = E * E;
  return E;
}

}  // namespace hopper
