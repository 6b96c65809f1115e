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

#include "teleop/kinematics.hpp"

#include <cmath>
#include <numbers>

#include "teleop/error.hpp"

namespace teleop {

namespace {

void check_bounds(const JointBounds& b, const char* field) {
  if (!b.lower.allFinite() || !b.upper.allFinite() || !(b.lower.array() < b.upper.array()).all()) {
    throw Error(ErrorCode::kInvalidArgument, std::string("robot model: ") + field +
                                                 " lower bound must be below upper bound");
  }
}

JointVector uniform(double v) { return JointVector::Constant(v); }

}  // namespace

void RobotModel::validate() const {
  for (const DHRow& row : dh) {
    if (!std::isfinite(row.a) || !std::isfinite(row.d) || !std::isfinite(row.alpha) ||
        !std::isfinite(row.theta_offset)) {
      throw Error(ErrorCode::kInvalidArgument, "robot model: dh entries must be finite");
    }
  }
  check_bounds(q_limits, "q");
  check_bounds(qd_limits, "qd");
  check_bounds(u_limits, "u");
  if (!base.rot.is_valid() || !base.pos.allFinite()) {
    throw Error(ErrorCode::kInvalidArgument, "robot model: base is not a rigid transform");
  }
}

std::vector<std::string> preset_names() { return {"ur5e"}; }

RobotModel preset(const std::string& name) {
  if (name != "ur5e") {
    throw Error(ErrorCode::kInvalidArgument, "unknown robot preset '" + name + "'");
  }
  constexpr double pi = std::numbers::pi;
  RobotModel m;
  m.name = "ur5e";
  // Universal Robots published D-H table for the UR5e.
  m.dh = {{
      {0.0, 0.1625, pi / 2, 0.0},
      {-0.425, 0.0, 0.0, 0.0},
      {-0.3922, 0.0, 0.0, 0.0},
      {0.0, 0.1333, pi / 2, 0.0},
      {0.0, 0.0997, -pi / 2, 0.0},
      {0.0, 0.0996, 0.0, 0.0},
  }};
  m.q_limits = {uniform(-2 * pi), uniform(2 * pi)};
  m.q_limits.lower[2] = -pi;
  m.q_limits.upper[2] = pi;
  m.qd_limits = {uniform(-pi), uniform(pi)};
  m.u_limits = {uniform(-10.0), uniform(10.0)};
  return m;
}

Transform dh_link_transform(const DHRow& row, double q) {
  const double theta = q + row.theta_offset;
  const double ct = std::cos(theta), st = std::sin(theta);
  const double ca = std::cos(row.alpha), sa = std::sin(row.alpha);
  Mat3 r;
  r << ct, -st * ca, st * sa,
       st, ct * ca, -ct * sa,
       0.0, sa, ca;
  return {Rotation::from_matrix_unchecked(r), Vec3(row.a * ct, row.a * st, row.d)};
}

std::array<Transform, kNumJoints + 1> link_frames(const RobotModel& model, const JointVector& q) {
  std::array<Transform, kNumJoints + 1> frames;
  frames[0] = model.base;
  for (int j = 0; j < kNumJoints; ++j) {
    frames[j + 1] = frames[j] * dh_link_transform(model.dh[j], q[j]);
  }
  return frames;
}

Transform forward_kinematics(const RobotModel& model, const JointVector& q) {
  return link_frames(model, q)[kNumJoints];
}

KinematicState evaluate_kinematics(const RobotModel& model, const JointVector& q) {
  const auto frames = link_frames(model, q);
  KinematicState ks;
  ks.pose = frames[kNumJoints];
  ks.quat = quat_from_rotation(ks.pose.rot);
  const Vec3& pe = ks.pose.pos;
  for (int j = 0; j < kNumJoints; ++j) {
    const Vec3 z = frames[j].rot.axis(2);
    ks.angular.col(j) = z;
    ks.linear.col(j) = z.cross(pe - frames[j].pos);
  }
  return ks;
}

PositionJacobian position_jacobian(const RobotModel& model, const JointVector& q) {
  return evaluate_kinematics(model, q).linear;
}

QuaternionJacobian quaternion_jacobian(const KinematicState& ks) {
  // For a world-frame angular velocity w: d(alpha)/dt = 1/2 (0, w) * alpha.
  QuaternionJacobian jq;
  const double eta = ks.quat.eta;
  const Vec3& eps = ks.quat.eps;
  for (int j = 0; j < kNumJoints; ++j) {
    const Vec3 w = ks.angular.col(j);
    jq(0, j) = -0.5 * w.dot(eps);
    jq.block<3, 1>(1, j) = 0.5 * (eta * w + w.cross(eps));
  }
  return jq;
}

QuaternionJacobian quaternion_jacobian(const RobotModel& model, const JointVector& q) {
  return quaternion_jacobian(evaluate_kinematics(model, q));
}

PositionJacobian orientation_error_jacobian(const KinematicState& ks, const UnitQuat& desired) {
  // quat_error is linear in the actual quaternion once the hemisphere is fixed.
  const double sign = desired.dot(ks.quat) < 0.0 ? -1.0 : 1.0;
  const QuaternionJacobian jq = quaternion_jacobian(ks);
  Mat3 cross_d;
  cross_d << 0.0, -desired.eps.z(), desired.eps.y(),
             desired.eps.z(), 0.0, -desired.eps.x(),
             -desired.eps.y(), desired.eps.x(), 0.0;
  const Mat3 d_eps = desired.eta * Mat3::Identity() + cross_d;
  PositionJacobian je;
  for (int j = 0; j < kNumJoints; ++j) {
    je.col(j) = sign * (d_eps * jq.block<3, 1>(1, j) - jq(0, j) * desired.eps);
  }
  return je;
}

PositionJacobian orientation_error_jacobian(const RobotModel& model, const JointVector& q,
                                            const UnitQuat& desired) {
  return orientation_error_jacobian(evaluate_kinematics(model, q), desired);
}

double max_reach(const RobotModel& model) {
  double reach = 0.0;
  for (int j = 0; j < kNumJoints; ++j) {
    reach += std::abs(model.dh[j].a);
    if (j > 0) reach += std::abs(model.dh[j].d);
  }
  return reach;
}

Vec3 reach_center(const RobotModel& model) {
  return model.base * Vec3(0.0, 0.0, model.dh[0].d);
}

}  // namespace teleop
