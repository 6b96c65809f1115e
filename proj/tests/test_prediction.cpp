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

#include <gtest/gtest.h>

#include "support.hpp"
#include "teleop/error.hpp"
#include "teleop/prediction.hpp"

using namespace teleop;
using teleop::testing::max_abs_diff;

namespace {

const Vec3 kCenter(0, 0, 0.1625);
constexpr double kReach = 1.1498;

}  // namespace

TEST(Clip, InsideUnchanged) {
  EXPECT_EQ(clip_to_reach(Vec3(0.1, 0.2, 0.3), Vec3::Zero(), 1.0), Vec3(0.1, 0.2, 0.3));
}

TEST(Clip, ProjectsRadially) {
  EXPECT_LT(max_abs_diff(clip_to_reach(Vec3(2, 0, 0), Vec3::Zero(), 1.0), Vec3(1, 0, 0)), 1e-15);
  const Vec3 c(1, 1, 1);
  const Vec3 out = clip_to_reach(c + Vec3(3, 4, 0), c, 2.0);
  EXPECT_LT(max_abs_diff(out, c + Vec3(1.2, 1.6, 0)), 1e-15);
}

TEST(Clip, CenterIsFixedPoint) {
  EXPECT_EQ(clip_to_reach(Vec3(1, 2, 3), Vec3(1, 2, 3), 0.5), Vec3(1, 2, 3));
}

TEST(Predict, StationaryInputHolds) {
  const Transform p{Rotation::about_x(0.4), Vec3(0.3, 0.1, 0.5)};
  const ReferenceTrajectory ref = predict(p, p, 0.1, 10, 0.1, kCenter, kReach);
  ASSERT_EQ(ref.horizon(), 10);
  EXPECT_EQ(ref.dt, 0.1);
  for (int k = 0; k <= 10; ++k) {
    EXPECT_EQ(ref.positions[k], p.pos);
    EXPECT_LT(max_abs_diff(rotation_from_quat(ref.orientations[k]).matrix(), p.rot.matrix()), 1e-15);
  }
}

TEST(Predict, ExtrapolatesAtConstantVelocity) {
  const Transform prev = Transform::translation(Vec3(0, 0, 0.3));
  const Transform curr = Transform::translation(Vec3(0.01, 0, 0.3));
  const ReferenceTrajectory ref = predict(prev, curr, 0.1, 10, 0.1, kCenter, kReach);
  for (int k = 0; k <= 10; ++k) {
    EXPECT_LT(max_abs_diff(ref.positions[k], Vec3(0.01 * (1 + k), 0, 0.3)), 1e-15);
  }
}

TEST(Predict, OrientationIsHeldAtCurrent) {
  const Transform prev{Rotation::about_z(0.1), Vec3(0, 0, 0.3)};
  const Transform curr{Rotation::about_z(0.4), Vec3(0, 0, 0.3)};
  const ReferenceTrajectory ref = predict(prev, curr, 0.1, 5, 0.1, kCenter, kReach);
  for (const auto& q : ref.orientations) {
    EXPECT_LT(max_abs_diff(rotation_from_quat(q).matrix(), curr.rot.matrix()), 1e-15);
  }
}

TEST(Predict, ClipsAtReachSphere) {
  const Transform prev = Transform::translation(kCenter + Vec3(0.9, 0, 0));
  const Transform curr = Transform::translation(kCenter + Vec3(1.0, 0, 0));
  const ReferenceTrajectory ref = predict(prev, curr, 0.1, 10, 0.1, kCenter, kReach);
  bool clipped = false;
  for (const Vec3& p : ref.positions) {
    const double r = (p - kCenter).norm();
    EXPECT_LE(r, kReach + 1e-12);
    if (r > kReach - 1e-12) {
      clipped = true;
      EXPECT_NEAR(p.y(), 0.0, 1e-15);
    }
  }
  EXPECT_TRUE(clipped);
  EXPECT_LT(max_abs_diff(ref.positions[0], curr.pos), 1e-15);
}

TEST(Predict, VelocityLinear) {
  const Transform prev = Transform::translation(Vec3(0.2, 0.1, 0.4));
  const Vec3 step(0.003, -0.002, 0.001);
  const Transform a{Rotation(), prev.pos + step};
  const Transform b{Rotation(), prev.pos + 3.0 * step};
  const auto ra = predict(prev, a, 0.1, 10, 0.1, kCenter, kReach);
  const auto rb = predict(prev, b, 0.1, 10, 0.1, kCenter, kReach);
  for (int k = 0; k <= 10; ++k) {
    EXPECT_LT(max_abs_diff(rb.positions[k] - prev.pos, 3.0 * (ra.positions[k] - prev.pos)), 1e-14);
  }
}

TEST(Predict, CapsReferenceSpeed) {
  const Transform prev = Transform::translation(Vec3(0, 0, 0.4));
  const Transform curr = Transform::translation(Vec3(0.1, 0, 0.4));
  const auto ref = predict(prev, curr, 0.01, 2, 0.1, kCenter, kReach);
  EXPECT_NEAR(ref.positions[1].x() - ref.positions[0].x(), kMaxReferenceSpeed * 0.1, 1e-15);
}

TEST(Predict, RejectsBadArguments) {
  const Transform p = Transform::identity();
  EXPECT_THROW(predict(p, p, 0.0, 10, 0.1, kCenter, kReach), Error);
  EXPECT_THROW(predict(p, p, 0.1, 0, 0.1, kCenter, kReach), Error);
}

TEST(Hold, BuildsConstantTrajectory) {
  const Transform p{Rotation::about_y(0.2), Vec3(1, 2, 3)};
  const auto ref = ReferenceTrajectory::hold(p, 4, 0.1);
  EXPECT_EQ(ref.horizon(), 4);
  EXPECT_EQ(ref.positions.back(), p.pos);
}
