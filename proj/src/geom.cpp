#include "hopper/geom.hpp"

#include <Eigen/Geometry>
#include <cmath>

namespace hopper {

namespace {
// Below this angle the closed forms switch to 2-term Taylor expansions.
constexpr double kSmallAngle = 1e-8;
// w below this (after hemisphere flip) means the rotation is within ~1e-9
// of pi and the canonical axis is ambiguous.
constexpr double kAntipodeW = 5e-10;
}  // namespace

double UnitQuat::norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }

UnitQuat quat_mul(const UnitQuat& a, const UnitQuat& b) {
  return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
          a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
          a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
          a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
}

UnitQuat quat_conj(const UnitQuat& q) { return {q.w, -q.x, -q.y, -q.z}; }

UnitQuat quat_normalize(const UnitQuat& q) {
  const double n = q.norm();
  return {q.w / n, q.x / n, q.y / n, q.z / n};
}

UnitQuat exp_map(const ImQuat3& v) {
  const double th = v.norm();
  double c, k;  // cos(th), sin(th)/th
  if (th < kSmallAngle) {
    const double th2 = th * th;
    c = 1.0 - 0.5 * th2;
    k = 1.0 - th2 / 6.0;
  } else {
    c = std::cos(th);
    k = std::sin(th) / th;
  }
  return {c, k * v.x(), k * v.y(), k * v.z()};
}

ImQuat3 log_map(const UnitQuat& q_in) {
  UnitQuat q = q_in;
  if (q.w < 0.0) q = {-q.w, -q.x, -q.y, -q.z};
  const double vn = q.im().norm();
  if (q.w < kAntipodeW)
    throw AntipodeError("log_map: rotation within tolerance of pi, axis ambiguous");
  if (vn < kSmallAngle * q.w) {
    // th/sin(th) ~ 1 + th^2/6 with th ~ vn/w
    const double t = vn / q.w;
    return (1.0 + t * t / 6.0) / q.w * q.im();
  }
  const double th = std::atan2(vn, q.w);
  return (th / vn) * q.im();
}

ImQuat3 lie_bracket(const ImQuat3& a, const ImQuat3& b) { return 2.0 * a.cross(b); }

UnitQuat lie_euler_step(const UnitQuat& q, const ImQuat3& w, double h) {
  return quat_normalize(quat_mul(q, exp_map(h * w)));
}

UnitQuat quat_interp(const UnitQuat& q0, const UnitQuat& q1, double s) {
  const ImQuat3 d = log_map(quat_mul(quat_conj(q0), q1));
  return quat_mul(q0, exp_map(s * d));
}

Eigen::Matrix3d rotation_matrix(const UnitQuat& q) {
  const double w = q.w, x = q.x, y = q.y, z = q.z;
  Eigen::Matrix3d R;
  R << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
      2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
      2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return R;
}

Eigen::Vector3d rotate(const UnitQuat& q, const Eigen::Vector3d& v) {
  // v + 2w (im x v) + 2 im x (im x v)
  const Eigen::Vector3d im = q.im();
  const Eigen::Vector3d t = im.cross(v);
  return v + 2.0 * q.w * t + 2.0 * im.cross(t);
}

}  // namespace hopper
