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

#include "teleop/prediction.hpp"

#include "teleop/error.hpp"

namespace teleop {

ReferenceTrajectory ReferenceTrajectory::hold(const Transform& pose, int horizon, double dt) {
  ReferenceTrajectory ref;
  ref.dt = dt;
  ref.positions.assign(horizon + 1, pose.pos);
  ref.orientations.assign(horizon + 1, quat_from_rotation(pose.rot));
  return ref;
}

Vec3 clip_to_reach(const Vec3& p, const Vec3& center, double reach) {
  const Vec3 offset = p - center;
  const double dist = offset.norm();
  if (dist <= reach || dist == 0.0) return p;
  return center + (reach / dist) * offset;
}

ReferenceTrajectory predict(const Transform& prev, const Transform& curr, double sample_dt,
                            int horizon, double plan_dt, const Vec3& reach_center, double reach) {
  if (!(sample_dt > 0.0) || horizon < 1) {
    throw Error(ErrorCode::kInvalidArgument, "predict: sample_dt must be positive and horizon >= 1");
  }
  Vec3 velocity = (curr.pos - prev.pos) / sample_dt;
  const double speed = velocity.norm();
  if (speed > kMaxReferenceSpeed) velocity *= kMaxReferenceSpeed / speed;

  ReferenceTrajectory ref;
  ref.dt = plan_dt;
  ref.positions.reserve(horizon + 1);
  for (int k = 0; k <= horizon; ++k) {
    ref.positions.push_back(
        clip_to_reach(curr.pos + (k * plan_dt) * velocity, reach_center, reach));
  }
  ref.orientations.assign(horizon + 1, quat_from_rotation(curr.rot));
  return ref;
}

}  // namespace teleop
