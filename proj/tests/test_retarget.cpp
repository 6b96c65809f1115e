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

#include <cmath>
#include <numbers>
#include <random>

#include "support.hpp"
#include "teleop/error.hpp"
#include "teleop/oracles/suites.hpp"
#include "teleop/retarget.hpp"

using namespace teleop;
using namespace teleop::retarget;
using teleop::testing::max_abs_diff;
using teleop::testing::pose_error;

namespace {

constexpr double kPi = std::numbers::pi;

RetargetConfig mixed() { return {}; }

RetargetConfig fixed_frames() {
  RetargetConfig c;
  c.input_rotation = CalibratedFixed{};
  c.robot_rotation = CalibratedFixed{};
  return c;
}

const Transform kEe{Rotation::about_x(kPi), Vec3(0.5, 0.0, 0.3)};

template <typename Fn>
void expect_code(ErrorCode code, Fn&& fn) {
  try {
    fn();
    ADD_FAILURE() << "expected " << to_string(code);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), code) << e.what();
  }
}

}  // namespace

TEST(Strategies, NamesRoundTrip) {
  for (const OrientationStrategy& s :
       {OrientationStrategy{CalibratedFixed{}}, OrientationStrategy{DeviceAtClutch{}},
        OrientationStrategy{EndEffectorAtRelease{}}, OrientationStrategy{UprightAtRelease{}},
        OrientationStrategy{WorldIdentity{}}}) {
    const auto back = strategy_from_name(strategy_name(s));
    ASSERT_TRUE(back.has_value());
    EXPECT_EQ(back->index(), s.index());
  }
  EXPECT_FALSE(strategy_from_name("bogus"));
  EXPECT_EQ(mode_from_name("absolute"), Mode::kAbsolute);
  EXPECT_EQ(mode_name(Mode::kRelative), "relative");
  EXPECT_FALSE(mode_from_name("both"));
}

TEST(Config, RejectsStrategiesOnWrongTree) {
  RetargetConfig c;
  c.robot_rotation = DeviceAtClutch{};
  expect_code(ErrorCode::kStrategyMismatch, [&] { c.validate(); });
  c = {};
  c.input_rotation = UprightAtRelease{};
  expect_code(ErrorCode::kStrategyMismatch, [&] { initial_state(c, kEe); });
  c = {};
  c.input_translation = EndEffectorAtRelease{};
  expect_code(ErrorCode::kStrategyMismatch, [&] { c.validate(); });
}

TEST(InitialState, DesiredPoseIsEndEffector) {
  RetargetConfig c;
  c.robot_rotation = EndEffectorAtRelease{};
  const RetargetState s = initial_state(c, kEe);
  EXPECT_FALSE(s.engaged);
  EXPECT_LT(pose_error(desired_pose(s), kEe), 1e-15);
}

TEST(Calibrate, AlignedFramesMapDirectly) {
  RetargetState s = calibrate(initial_state(fixed_frames(), kEe), Rotation(), Rotation());
  const Transform dev0{Rotation(), Vec3(1, 1, 1)};
  s = ingest(s, dev0, true);
  s = ingest(s, {Rotation(), Vec3(1.1, 1, 1)}, true);
  EXPECT_LT(max_abs_diff(desired_pose(s).pos - kEe.pos, Vec3(0.1, 0, 0)), 1e-15);
}

TEST(Calibrate, HalfTurnMirrorsTranslation) {
  RetargetState s = calibrate(initial_state(mixed(), kEe), Rotation(), Rotation::about_z(kPi));
  const Transform dev0{Rotation(), Vec3(1, 1, 1)};
  s = ingest(s, dev0, true);
  s = ingest(s, {Rotation(), Vec3(1.1, 1, 1)}, true);
  EXPECT_LT(max_abs_diff(desired_pose(s).pos - kEe.pos, Vec3(-0.1, 0, 0)), 1e-15);
}

TEST(Calibrate, LastWriteWinsAndKeepsPositions) {
  RetargetState s = initial_state(mixed(), kEe);
  s = calibrate(s, Rotation::about_x(0.2), Rotation::about_y(0.4));
  s = calibrate(s, Rotation::about_z(0.3), Rotation::about_z(-0.3));
  EXPECT_LT(max_abs_diff(s.T_0I_tI.rot.matrix(), Rotation::about_z(0.3).matrix()), 1e-15);
  EXPECT_LT(max_abs_diff(s.T_0M_tM.rot.matrix(), Rotation::about_z(-0.3).matrix()), 1e-15);
  EXPECT_LT(max_abs_diff(s.T_0M_tM.pos, kEe.pos), 1e-15);
  EXPECT_EQ(std::get<CalibratedFixed>(s.config.robot_translation).rotation.matrix(),
            Rotation::about_z(-0.3).matrix());
}

TEST(Calibrate, RequiresFixedTranslationStrategies) {
  RetargetConfig c;
  c.input_translation = DeviceAtClutch{};
  const RetargetState s = initial_state(c, kEe);
  expect_code(ErrorCode::kStrategyMismatch, [&] { calibrate(s, Rotation(), Rotation()); });
}

TEST(Activate, ResetsInputFramesAtDevice) {
  const Transform dev{Rotation::about_x(kPi / 6), Vec3(1, 2, 3)};
  const RetargetState s = on_clutch_activate(initial_state(mixed(), kEe), dev);
  EXPECT_TRUE(s.engaged);
  EXPECT_LT(pose_error(s.T_0I_rI, dev), 1e-15);
  EXPECT_LT(pose_error(s.T_0I_tI, Transform::translation(dev.pos)), 1e-15);
  expect_code(ErrorCode::kAlreadyEngaged, [&] { on_clutch_activate(s, dev); });
}

TEST(Activate, AbsoluteModeKeepsFrames) {
  RetargetConfig c;
  c.mode = Mode::kAbsolute;
  const RetargetState before = initial_state(c, kEe);
  const RetargetState after = on_clutch_activate(before, {Rotation::about_y(0.4), Vec3(3, 2, 1)});
  EXPECT_TRUE(after.engaged);
  EXPECT_LT(pose_error(after.T_0I_tI, before.T_0I_tI), 0.0 + 1e-300);
  EXPECT_LT(pose_error(after.T_0I_rI, before.T_0I_rI), 1e-300);
}

TEST(Deactivate, StoresUprightOrExactRotation) {
  const Rotation tilted = Rotation::about_z(0.4) * Rotation::about_x(kPi) * Rotation::about_y(0.3);
  const Transform ee{tilted, Vec3(0.2, 0.3, 0.4)};
  RetargetState s = on_clutch_activate(initial_state(mixed(), kEe), Transform::identity());
  s = on_clutch_deactivate(s, ee);
  EXPECT_FALSE(s.engaged);
  EXPECT_NEAR(s.T_0M_rM.rot.axis(0).z(), 0.0, 1e-9);
  EXPECT_NEAR(s.T_0M_rM.rot.axis(1).z(), 0.0, 1e-9);
  EXPECT_LT(max_abs_diff(s.T_0M_rM.pos, ee.pos), 1e-15);
  EXPECT_LT(pose_error(s.T_tI_d, Transform::identity()), 1e-300);
  expect_code(ErrorCode::kNotEngaged, [&] { on_clutch_deactivate(s, ee); });

  RetargetConfig c;
  c.robot_rotation = EndEffectorAtRelease{};
  RetargetState e = on_clutch_activate(initial_state(c, kEe), Transform::identity());
  e = on_clutch_deactivate(e, ee);
  EXPECT_EQ(e.T_0M_rM.rot.matrix(), tilted.matrix());
}

TEST(Deactivate, SingularUprightKeepsPreviousRotation) {
  RetargetState s = on_clutch_activate(initial_state(mixed(), kEe), Transform::identity());
  const Rotation previous = s.T_0M_rM.rot;
  const Transform pointing_up{Rotation::about_y(-kPi / 2), Vec3(0.1, 0.2, 0.9)};
  s = on_clutch_deactivate(s, pointing_up);
  EXPECT_EQ(s.T_0M_rM.rot.matrix(), previous.matrix());
  EXPECT_LT(max_abs_diff(s.T_0M_rM.pos, pointing_up.pos), 1e-15);
}

TEST(Displacements, ExpressedInReferenceFrames) {
  const Transform dev{Rotation::about_z(0.3), Vec3(1, 2, 3)};
  RetargetState s = on_clutch_activate(initial_state(mixed(), kEe), dev);
  s = update_displacements(s, dev);
  EXPECT_LT(s.T_tI_d.pos.norm(), 1e-15);
  EXPECT_LT(pose_error(s.T_rI_d, Transform::identity()), 1e-15);

  RetargetState c = calibrate(initial_state(mixed(), kEe), Rotation::about_z(kPi / 2), Rotation());
  c = on_clutch_activate(c, dev);
  c = update_displacements(c, {dev.rot, dev.pos + Rotation::about_z(kPi / 2) * Vec3(0.1, 0, 0)});
  EXPECT_LT(max_abs_diff(c.T_tI_d.pos, Vec3(0.1, 0, 0)), 1e-15);

  s = update_displacements(s, {dev.rot * Rotation::about_z(kPi / 2), dev.pos});
  EXPECT_LT(max_abs_diff(s.T_rI_d.rot.matrix(), Rotation::about_z(kPi / 2).matrix()), 1e-15);

  expect_code(ErrorCode::kNotEngaged,
              [&] { update_displacements(initial_state(mixed(), kEe), dev); });
}

TEST(DesiredPose, ComposesTranslationAndRotationTrees) {
  RetargetState s = initial_state(mixed(), kEe);
  s.T_0M_tM = {Rotation::about_z(kPi), Vec3(0.5, 0, 0.3)};
  s.T_0M_rM = Transform::identity();
  s.T_tI_d = Transform::translation(Vec3(0.1, 0, 0));
  s.T_rI_d = {Rotation::about_z(kPi / 2), Vec3(9, 9, 9)};
  const Transform d = desired_pose(s);
  EXPECT_LT(max_abs_diff(d.pos, Vec3(0.4, 0, 0.3)), 1e-15);
  EXPECT_LT(max_abs_diff(d.rot.matrix(), Rotation::about_z(kPi / 2).matrix()), 1e-15);
}

TEST(Ingest, ClutchOffFreezesDesiredPose) {
  std::mt19937_64 rng(31);
  RetargetState s = initial_state(mixed(), kEe);
  const Transform held = desired_pose(s);
  for (int i = 0; i < 500; ++i) {
    s = ingest(s, oracles::random_transform(rng), false);
    EXPECT_EQ(oracles::pose_discrepancy(desired_pose(s), held), 0.0);
  }
}

TEST(Ingest, EngagingAndReleasingDoNotJump) {
  std::mt19937_64 rng(32);
  for (const RetargetConfig& cfg : {mixed(), fixed_frames()}) {
    RetargetState s = initial_state(cfg, kEe);
    for (int i = 0; i < 200; ++i) {
      const Transform dev = oracles::random_transform(rng);
      const bool clutch = !s.engaged;
      const Transform before = desired_pose(clutch ? s : ingest(s, dev, true));
      s = ingest(s, dev, clutch);
      if (clutch && std::holds_alternative<DeviceAtClutch>(cfg.input_rotation)) {
        EXPECT_LT(oracles::pose_discrepancy(desired_pose(s), before), 1e-9);
      } else {
        // A fixed input rotation frame makes the device attitude absolute, and
        // the upright projection may turn the rotation tree on release, so
        // only the position is continuous in those cases.
        EXPECT_LT(max_abs_diff(desired_pose(s).pos, before.pos), 1e-9);
      }
      s = ingest(s, oracles::random_transform(rng), s.engaged);
    }
  }
}

TEST(Ingest, ReleaseIsContinuousWithExactRotationCopy) {
  RetargetConfig c;
  c.robot_rotation = EndEffectorAtRelease{};
  std::mt19937_64 rng(33);
  RetargetState s = initial_state(c, kEe);
  for (int i = 0; i < 200; ++i) {
    s = ingest(s, oracles::random_transform(rng), true);
    const Transform dev = oracles::random_transform(rng);
    const RetargetState moved = ingest(s, dev, true);
    s = ingest(s, dev, false);
    EXPECT_LT(oracles::pose_discrepancy(desired_pose(s), desired_pose(moved)), 1e-9);
  }
}

TEST(Ingest, RotationAndTranslationAreSeparated) {
  std::mt19937_64 rng(34);
  for (const RetargetConfig& cfg : {mixed(), fixed_frames()}) {
    for (int i = 0; i < 200; ++i) {
      RetargetState s = calibrate(initial_state(cfg, kEe), oracles::random_rotation(rng),
                                  oracles::random_rotation(rng));
      const Transform dev = oracles::random_transform(rng);
      s = ingest(s, dev, true);
      const Transform base = desired_pose(s);
      const Transform rotated = desired_pose(ingest(s, {oracles::random_rotation(rng), dev.pos}, true));
      EXPECT_EQ(rotated.pos, base.pos);
      const Transform moved =
          desired_pose(ingest(s, {dev.rot, dev.pos + Vec3(0.1, -0.2, 0.3)}, true));
      EXPECT_EQ(moved.rot.matrix(), base.rot.matrix());
    }
  }
}

TEST(Ingest, MirrorHoldsForAllDisplacements) {
  std::mt19937_64 rng(35);
  RetargetState s = calibrate(initial_state(mixed(), kEe), Rotation(), Rotation::about_z(kPi));
  const Transform dev0 = oracles::random_transform(rng);
  s = ingest(s, dev0, true);
  const Vec3 p0 = desired_pose(s).pos;
  for (int i = 0; i < 500; ++i) {
    const Transform dev = oracles::random_transform(rng);
    const Vec3 dp = desired_pose(ingest(s, dev, true)).pos - p0;
    EXPECT_LT(max_abs_diff(dp, Rotation::about_z(kPi) * (dev.pos - dev0.pos)), 1e-12);
  }
}

TEST(Absolute, CalibrationAnchorsBothTrees) {
  RetargetConfig c;
  c.mode = Mode::kAbsolute;
  c.robot_rotation = EndEffectorAtRelease{};
  const Transform dev0{Rotation::about_z(0.2), Vec3(0.3, 0.1, 1.2)};
  RetargetState s = calibrate_absolute(initial_state(c, kEe), dev0, kEe);
  EXPECT_LT(pose_error(desired_pose(s), kEe), 1e-15);
  s = ingest(s, {dev0.rot, dev0.pos + Vec3(0.05, 0, 0)}, true);
  EXPECT_LT(max_abs_diff(desired_pose(s).pos, kEe.pos + Vec3(0.05, 0, 0)), 1e-15);
  // Release and re-engage elsewhere: absolute mode keeps the original anchors.
  s = ingest(s, {dev0.rot, dev0.pos + Vec3(0.05, 0, 0)}, false);
  s = ingest(s, {dev0.rot, dev0.pos + Vec3(0.0, 0.07, 0)}, true);
  EXPECT_LT(max_abs_diff(desired_pose(s).pos, kEe.pos + Vec3(0.0, 0.07, 0)), 1e-15);
}

TEST(WithConfig, SwapsStrategiesWithoutMovingFrames) {
  const RetargetState s = initial_state(mixed(), kEe);
  RetargetConfig c;
  c.robot_rotation = EndEffectorAtRelease{};
  const RetargetState t = with_config(s, c);
  EXPECT_EQ(t.config.robot_rotation.index(), c.robot_rotation.index());
  EXPECT_EQ(oracles::pose_discrepancy(desired_pose(t), desired_pose(s)), 0.0);
  c.robot_rotation = DeviceAtClutch{};
  expect_code(ErrorCode::kStrategyMismatch, [&] { with_config(s, c); });
}

TEST(InputFilter, SmoothsTowardsInput) {
  InputFilter f(0.2);
  const Transform a = Transform::identity();
  const Transform b{Rotation::about_z(1.0), Vec3(1, 0, 0)};
  EXPECT_LT(pose_error(f.filter(0.0, a), a), 1e-15);
  const Transform one = f.filter(0.01, b);
  EXPECT_NEAR(one.pos.x(), 0.2, 1e-12);
  EXPECT_NEAR(rotation_angle_between(Rotation(), one.rot), 0.2, 1e-9);
  // Half the sample period gives the matching fractional step.
  InputFilter g(0.2);
  g.filter(0.0, a);
  g.filter(0.005, b);
  EXPECT_NEAR(g.filter(0.01, b).pos.x(), 0.2, 1e-12);
  Transform last;
  for (int i = 2; i < 200; ++i) last = f.filter(0.01 * i, b);
  EXPECT_LT(pose_error(last, b), 1e-9);
  f.reset();
  EXPECT_LT(pose_error(f.filter(5.0, a), a), 1e-15);
}

TEST(RetargetSuite, MatchesNaiveReplay) {
  const auto r = oracles::run_retarget_suite(2000);
  for (const auto& c : r.checks) EXPECT_TRUE(c.passed) << c.name << ": " << c.detail;
}
