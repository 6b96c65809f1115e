// Copyright 2026 The Teleop Retarget Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "teleop/geometry.hpp"

#include <cmath>

#include "teleop/error.hpp"

namespace teleop {

Rotation Rotation::from_matrix(const Mat3& m, double tol) {
  Rotation r(m);
  if (!r.is_valid(tol)) {
    throw Error(ErrorCode::kInvalidArgument, "matrix is not a rotation");
  }
  return r;
}

Rotation Rotation::about_x(double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  Mat3 m;
  m << 1, 0, 0,
       0, c, -s,
       0, s, c;
  return Rotation(m);
}

Rotation Rotation::about_y(double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  Mat3 m;
  m << c, 0, s,
       0, 1, 0,
       -s, 0, c;
  return Rotation(m);
}

Rotation Rotation::about_z(double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  Mat3 m;
  m << c, -s, 0,
       s, c, 0,
       0, 0, 1;
  return Rotation(m);
}

Rotation Rotation::about_axis(const Vec3& unit_axis, double angle) {
  return Rotation(Eigen::AngleAxisd(angle, unit_axis.normalized()).toRotationMatrix());
}

Rotation Rotation::from_rpy(double roll, double pitch, double yaw) {
  return about_z(yaw) * about_y(pitch) * about_x(roll);
}

bool Rotation::is_valid(double tol) const {
  if (!m_.allFinite()) return false;
  const Mat3 gram = m_.transpose() * m_;
  if ((gram - Mat3::Identity()).cwiseAbs().maxCoeff() > tol) return false;
  return std::abs(m_.determinant() - 1.0) <= tol;
}

UnitQuat UnitQuat::from_wxyz(double w, double x, double y, double z) {
  const double n = std::sqrt(w * w + x * x + y * y + z * z);
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw Error(ErrorCode::kInvalidArgument, "quaternion has zero or non-finite norm");
  }
  return UnitQuat{w / n, Vec3(x, y, z) / n}.canonical();
}

UnitQuat UnitQuat::canonical() const {
  return eta < 0.0 ? negated() : *this;
}

UnitQuat UnitQuat::operator*(const UnitQuat& o) const {
  return {eta * o.eta - eps.dot(o.eps), eta * o.eps + o.eta * eps + eps.cross(o.eps)};
}

UnitQuat slerp(const UnitQuat& from, const UnitQuat& to, double t) {
  UnitQuat target = to;
  double cos_half = from.dot(to);
  if (cos_half < 0.0) {
    target = to.negated();
    cos_half = -cos_half;
  }
  double wa, wb;
  if (cos_half > 1.0 - 1e-12) {
    wa = 1.0 - t;
    wb = t;
  } else {
    const double half = std::acos(std::min(cos_half, 1.0));
    const double s = std::sin(half);
    wa = std::sin((1.0 - t) * half) / s;
    wb = std::sin(t * half) / s;
  }
  UnitQuat out{wa * from.eta + wb * target.eta, wa * from.eps + wb * target.eps};
  const double n = out.norm();
  return UnitQuat{out.eta / n, out.eps / n}.canonical();
}

Transform compose(const Transform& a, const Transform& b) {
  return {a.rot * b.rot, a.pos + a.rot * b.pos};
}

Transform invert(const Transform& t) {
  const Rotation rt = t.rot.transpose();
  return {rt, -(rt * t.pos)};
}

UnitQuat quat_from_rotation(const Rotation& r) {
  // Shepperd: branch on the largest of the four squared components.
  const Mat3& m = r.matrix();
  const double tr = m.trace();
  double w, x, y, z;
  if (tr >= m(0, 0) && tr >= m(1, 1) && tr >= m(2, 2)) {
    const double s = 2.0 * std::sqrt(1.0 + tr);
    w = 0.25 * s;
    x = (m(2, 1) - m(1, 2)) / s;
    y = (m(0, 2) - m(2, 0)) / s;
    z = (m(1, 0) - m(0, 1)) / s;
  } else if (m(0, 0) >= m(1, 1) && m(0, 0) >= m(2, 2)) {
    const double s = 2.0 * std::sqrt(1.0 + m(0, 0) - m(1, 1) - m(2, 2));
    w = (m(2, 1) - m(1, 2)) / s;
    x = 0.25 * s;
    y = (m(0, 1) + m(1, 0)) / s;
    z = (m(0, 2) + m(2, 0)) / s;
  } else if (m(1, 1) >= m(2, 2)) {
    const double s = 2.0 * std::sqrt(1.0 + m(1, 1) - m(0, 0) - m(2, 2));
    w = (m(0, 2) - m(2, 0)) / s;
    x = (m(0, 1) + m(1, 0)) / s;
    y = 0.25 * s;
    z = (m(1, 2) + m(2, 1)) / s;
  } else {
    const double s = 2.0 * std::sqrt(1.0 + m(2, 2) - m(0, 0) - m(1, 1));
    w = (m(1, 0) - m(0, 1)) / s;
    x = (m(0, 2) + m(2, 0)) / s;
    y = (m(1, 2) + m(2, 1)) / s;
    z = 0.25 * s;
  }
  return UnitQuat::from_wxyz(w, x, y, z);
}

Rotation rotation_from_quat(const UnitQuat& q) {
  const double w = q.eta, x = q.eps.x(), y = q.eps.y(), z = q.eps.z();
  Mat3 m;
  m << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
       2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
       2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return Rotation::from_matrix_unchecked(m);
}

Vec3 quat_error(const UnitQuat& desired, const UnitQuat& actual) {
  const UnitQuat a = desired.dot(actual) < 0.0 ? actual.negated() : actual;
  return desired.eta * a.eps - a.eta * desired.eps + desired.eps.cross(a.eps);
}

double rotation_angle_between(const Rotation& a, const Rotation& b) {
  const UnitQuat rel = quat_from_rotation(a.transpose() * b);
  return 2.0 * std::atan2(rel.eps.norm(), std::abs(rel.eta));
}

namespace {

double angle_from_vertical(const Vec3& axis) {
  return std::atan2(std::hypot(axis.x(), axis.y()), std::abs(axis.z()));
}

}  // namespace

Rotation upright(const Rotation& r) {
  if (angle_from_vertical(r.axis(1)) < kUprightSingularTol) {
    throw Error(ErrorCode::kSingular, "upright: y-axis is vertical");
  }
  // Rotating by a about body x moves y to cos(a)*y + sin(a)*z.
  const Vec3 y = r.axis(1), z = r.axis(2);
  const double a = std::atan2(-y.z() * (z.z() >= 0.0 ? 1.0 : -1.0), std::abs(z.z()));
  const Rotation step_one = r * Rotation::about_x(a);

  const Vec3 x1 = step_one.axis(0), z1 = step_one.axis(2);
  if (angle_from_vertical(x1) < kUprightSingularTol) {
    throw Error(ErrorCode::kSingular, "upright: x-axis is vertical after leveling y");
  }
  // Rotating by b about body y moves x to cos(b)*x - sin(b)*z.
  const double b = std::atan2(x1.z() * (z1.z() >= 0.0 ? 1.0 : -1.0), std::abs(z1.z()));
  return step_one * Rotation::about_y(b);
}

}  // namespace teleop
