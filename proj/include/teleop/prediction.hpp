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

#include <vector>

#include "teleop/geometry.hpp"

namespace teleop {

// Desired end-effector poses at the planner's shooting nodes.
struct ReferenceTrajectory {
  std::vector<Vec3> positions;
  std::vector<UnitQuat> orientations;
  double dt = 0.0;

  int horizon() const { return static_cast<int>(positions.size()) - 1; }
  // Constant trajectory at `pose`.
  static ReferenceTrajectory hold(const Transform& pose, int horizon, double dt);
};

// Extrapolated reference speeds are capped at this value.
inline constexpr double kMaxReferenceSpeed = 2.0;  // m/s

// Radial projection onto the sphere (center, reach) for points outside it.
Vec3 clip_to_reach(const Vec3& p, const Vec3& center, double reach);

// Constant-velocity straight-line extrapolation from the last two desired
// poses, constant orientation, clipped to the reach sphere.
ReferenceTrajectory predict(const Transform& prev, const Transform& curr, double sample_dt,
                            int horizon, double plan_dt, const Vec3& reach_center, double reach);

}  // namespace teleop
