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

#include "teleop/oracles/fk_chain.hpp"

#include <cmath>

namespace teleop::oracles {

Eigen::Matrix4d dh_matrix(double a, double d, double alpha, double theta) {
  Eigen::Matrix4d rz = Eigen::Matrix4d::Identity();
  rz(0, 0) = std::cos(theta);
  rz(0, 1) = -std::sin(theta);
  rz(1, 0) = std::sin(theta);
  rz(1, 1) = std::cos(theta);
  Eigen::Matrix4d tz = Eigen::Matrix4d::Identity();
  tz(2, 3) = d;
  Eigen::Matrix4d tx = Eigen::Matrix4d::Identity();
  tx(0, 3) = a;
  Eigen::Matrix4d rx = Eigen::Matrix4d::Identity();
  rx(1, 1) = std::cos(alpha);
  rx(1, 2) = -std::sin(alpha);
  rx(2, 1) = std::sin(alpha);
  rx(2, 2) = std::cos(alpha);
  return rz * tz * tx * rx;
}

Eigen::Matrix4d to_matrix(const Transform& t) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = t.rot.matrix();
  m.topRightCorner<3, 1>() = t.pos;
  return m;
}

Eigen::Matrix4d fk_matrix_chain(const RobotModel& model, const JointVector& q) {
  Eigen::Matrix4d t = to_matrix(model.base);
  for (int j = 0; j < kNumJoints; ++j) {
    const DHRow& r = model.dh[j];
    t = t * dh_matrix(r.a, r.d, r.alpha, q[j] + r.theta_offset);
  }
  return t;
}

}  // namespace teleop::oracles
