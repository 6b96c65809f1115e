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

// Serial-chain kinematics of a six-joint arm described by standard
// (distal) Denavit-Hartenberg parameters.

#include <Eigen/Core>

#include <array>
#include <string>
#include <vector>

#include "teleop/geometry.hpp"

namespace teleop {

inline constexpr int kNumJoints = 6;

using JointVector = Eigen::Matrix<double, kNumJoints, 1>;
using PositionJacobian = Eigen::Matrix<double, 3, kNumJoints>;
using QuaternionJacobian = Eigen::Matrix<double, 4, kNumJoints>;

// Link transform Rz(theta + theta_offset) Tz(d) Tx(a) Rx(alpha).
struct DHRow {
  double a = 0.0;
  double d = 0.0;
  double alpha = 0.0;
  double theta_offset = 0.0;
};

struct JointBounds {
  JointVector lower;
  JointVector upper;

  bool contains(const JointVector& v, double tol = 0.0) const {
    return ((v - lower).array() >= -tol).all() && ((upper - v).array() >= -tol).all();
  }
};

struct RobotModel {
  std::string name;
  std::array<DHRow, kNumJoints> dh{};
  JointBounds q_limits;
  JointBounds qd_limits;
  JointBounds u_limits;
  // Pose of the D-H base frame expressed in {0_M}.
  Transform base;

  // Throws Error(kInvalidArgument) naming the first offending field.
  void validate() const;
};

// Built-in models. "ur5e" is the only preset for now.
std::vector<std::string> preset_names();
// Throws Error(kInvalidArgument) for an unknown name.
RobotModel preset(const std::string& name);

Transform dh_link_transform(const DHRow& row, double q);

Transform forward_kinematics(const RobotModel& model, const JointVector& q);

// Frames {0} (base) through {6} (flange), all in {0_M}.
std::array<Transform, kNumJoints + 1> link_frames(const RobotModel& model, const JointVector& q);

// Pose together with the geometric Jacobian: column j of `linear` is
// z_j x (p_e - o_j) and column j of `angular` is z_j, where z_j, o_j are the
// axis and origin of joint j.
struct KinematicState {
  Transform pose;
  UnitQuat quat;
  PositionJacobian linear;
  PositionJacobian angular;
};

KinematicState evaluate_kinematics(const RobotModel& model, const JointVector& q);

PositionJacobian position_jacobian(const RobotModel& model, const JointVector& q);

// d(eta, eps)/dq of the eta >= 0 flange quaternion, rows ordered w, x, y, z.
QuaternionJacobian quaternion_jacobian(const KinematicState& ks);
QuaternionJacobian quaternion_jacobian(const RobotModel& model, const JointVector& q);

// d quat_error(desired, quat(FK(q))) / dq.
PositionJacobian orientation_error_jacobian(const KinematicState& ks, const UnitQuat& desired);
PositionJacobian orientation_error_jacobian(const RobotModel& model, const JointVector& q,
                                            const UnitQuat& desired);

// Conservative reach radius: sum of |a_i| over all links plus |d_i| over
// links 2..6. The sphere is centered at reach_center().
double max_reach(const RobotModel& model);
Vec3 reach_center(const RobotModel& model);

}  // namespace teleop
