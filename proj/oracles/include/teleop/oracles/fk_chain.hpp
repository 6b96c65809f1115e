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

// Forward kinematics by explicit multiplication of the six 4x4 D-H
// matrices. Shares nothing with teleop::forward_kinematics beyond the model
// parameters.

#include <Eigen/Core>

#include "teleop/kinematics.hpp"

namespace teleop::oracles {

Eigen::Matrix4d dh_matrix(double a, double d, double alpha, double theta);
Eigen::Matrix4d fk_matrix_chain(const RobotModel& model, const JointVector& q);
Eigen::Matrix4d to_matrix(const Transform& t);

}  // namespace teleop::oracles
