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

#pragma once

// Rigid-body math for the two frame trees: rotations, unit quaternions and
// homogeneous transforms T = (R, p). All angles are radians.

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>

namespace teleop {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Element of SO(3). Construction from an arbitrary matrix is checked; the
// composition operators keep orthonormality up to round-off.
class Rotation {
 public:
  Rotation() : m_(Mat3::Identity()) {}

  // Throws Error(kInvalidArgument) unless m is orthonormal with det +1
  // within `tol` per entry.
  static Rotation from_matrix(const Mat3& m, double tol = 1e-9);
  // No validation; for values produced by trusted arithmetic.
  static Rotation from_matrix_unchecked(const Mat3& m) { return Rotation(m); }

  static Rotation identity() { return Rotation(); }
  static Rotation about_x(double angle);
  static Rotation about_y(double angle);
  static Rotation about_z(double angle);
  static Rotation about_axis(const Vec3& unit_axis, double angle);
  // R = Rz(yaw) * Ry(pitch) * Rx(roll).
  static Rotation from_rpy(double roll, double pitch, double yaw);

  const Mat3& matrix() const { return m_; }
  double operator()(int r, int c) const { return m_(r, c); }
  Vec3 axis(int i) const { return m_.col(i); }

  Rotation transpose() const { return Rotation(m_.transpose()); }
  Rotation operator*(const Rotation& o) const { return Rotation(m_ * o.m_); }
  Vec3 operator*(const Vec3& v) const { return m_ * v; }

  bool is_valid(double tol = 1e-9) const;

 private:
  explicit Rotation(const Mat3& m) : m_(m) {}
  Mat3 m_;
};

// Unit quaternion (eta, eps) with eta = cos(phi/2), eps = r sin(phi/2).
struct UnitQuat {
  double eta = 1.0;
  Vec3 eps = Vec3::Zero();

  static UnitQuat identity() { return {}; }
  // Normalizes and flips to eta >= 0. Throws on a zero-norm input.
  static UnitQuat from_wxyz(double w, double x, double y, double z);

  double norm() const { return std::sqrt(eta * eta + eps.squaredNorm()); }
  UnitQuat canonical() const;
  UnitQuat negated() const { return {-eta, -eps}; }
  double dot(const UnitQuat& o) const { return eta * o.eta + eps.dot(o.eps); }
  UnitQuat conjugate() const { return {eta, -eps}; }
  UnitQuat operator*(const UnitQuat& o) const;
  std::array<double, 4> wxyz() const { return {eta, eps.x(), eps.y(), eps.z()}; }
};

// Spherical interpolation along the short arc; t in [0, 1].
UnitQuat slerp(const UnitQuat& from, const UnitQuat& to, double t);

struct Transform {
  Rotation rot;
  Vec3 pos = Vec3::Zero();

  static Transform identity() { return {}; }
  static Transform translation(const Vec3& p) { return {Rotation(), p}; }

  Vec3 operator*(const Vec3& point) const { return rot * point + pos; }
};

Transform compose(const Transform& a, const Transform& b);
inline Transform operator*(const Transform& a, const Transform& b) { return compose(a, b); }
Transform invert(const Transform& t);

UnitQuat quat_from_rotation(const Rotation& r);
Rotation rotation_from_quat(const UnitQuat& q);

// Orientation error e = eta_d*eps - eta*eps_d + eps_d x eps, evaluated with
// `actual` moved into the hemisphere of `desired` so e describes the short
// rotation. ||e|| <= 1.
Vec3 quat_error(const UnitQuat& desired, const UnitQuat& actual);

// Angle between two rotations, in [0, pi].
double rotation_angle_between(const Rotation& a, const Rotation& b);

// Levels the frame: rotate about its own x-axis until y is horizontal, then
// about its own y-axis until x is horizontal. Each step uses the smallest
// such rotation. Throws Error(kSingular) when y (or x after step one) is
// within kUprightSingularTol of vertical.
inline constexpr double kUprightSingularTol = 1e-6;
Rotation upright(const Rotation& r);

}  // namespace teleop
