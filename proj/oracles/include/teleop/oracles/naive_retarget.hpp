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

// Literal transcription of the relative retargeting loop on 4x4 matrices,
// recomputing every quantity from scratch each pass. Used as an oracle for
// teleop::retarget's event-sourced state machine.

#include <Eigen/Core>

#include "teleop/retarget.hpp"

namespace teleop::oracles {

class NaiveRetargeting {
 public:
  // Chooses the robot-tree orientations at the initial
  // end-effector pose, clutch off.
  NaiveRetargeting(const retarget::RetargetConfig& cfg, const Eigen::Matrix4d& T_0Me);

  // One pass of the loop body with the sampled device pose and clutch
  // button level; returns T_0Med.
  Eigen::Matrix4d iterate(const Eigen::Matrix4d& T_0Id, bool button);

  bool clutch() const { return clutch_; }

 private:
  Eigen::Matrix3d choose_input(const retarget::OrientationStrategy& s,
                               const Eigen::Matrix4d& T_0Id) const;
  Eigen::Matrix3d choose_robot(const retarget::OrientationStrategy& s,
                               const Eigen::Matrix4d& T_0Me,
                               const Eigen::Matrix3d& previous) const;
  Eigen::Matrix4d desired() const;

  retarget::RetargetConfig cfg_;
  bool clutch_ = false;
  Eigen::Matrix4d T_0ItI_ = Eigen::Matrix4d::Identity();
  Eigen::Matrix4d T_0IrI_ = Eigen::Matrix4d::Identity();
  Eigen::Matrix4d T_0MtM_ = Eigen::Matrix4d::Identity();
  Eigen::Matrix4d T_0MrM_ = Eigen::Matrix4d::Identity();
  Eigen::Matrix4d T_tId_ = Eigen::Matrix4d::Identity();
  Eigen::Matrix4d T_rId_ = Eigen::Matrix4d::Identity();
};

// Leveling by solving each body-axis angle in closed form and picking the
// smallest of the candidate solutions. Returns false when singular.
bool naive_upright(const Eigen::Matrix3d& r, Eigen::Matrix3d& out);

}  // namespace teleop::oracles
