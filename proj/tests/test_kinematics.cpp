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
#include <random>

#include "support.hpp"
#include "teleop/error.hpp"
#include "teleop/kinematics.hpp"
#include "teleop/oracles/finite_difference.hpp"
#include "teleop/oracles/fk_chain.hpp"
#include "teleop/oracles/suites.hpp"

using namespace teleop;
using teleop::testing::max_abs_diff;
using teleop::testing::pose_error;

namespace {

RobotModel bare_ur5e() {
  RobotModel m = preset("ur5e");
  m.base = Transform::identity();
  return m;
}

}  // namespace

TEST(Presets, ListsAndLoads) {
  const auto names = preset_names();
  ASSERT_FALSE(names.empty());
  for (const auto& n : names) {
    const RobotModel m = preset(n);
    EXPECT_EQ(m.name, n);
    EXPECT_NO_THROW(m.validate());
  }
  EXPECT_THROW(preset("nope"), Error);
}

TEST(RobotModel, ValidateRejectsInvertedBounds) {
  RobotModel m = preset("ur5e");
  m.q_limits.lower[2] = m.q_limits.upper[2] + 1.0;
  EXPECT_THROW(m.validate(), Error);
  m = preset("ur5e");
  m.dh[1].a = NAN;
  EXPECT_THROW(m.validate(), Error);
}

TEST(ForwardKinematics, ZeroConfigurationMatchesTable) {
  const Transform t = forward_kinematics(bare_ur5e(), JointVector::Zero());
  EXPECT_NEAR(t.pos.x(), -0.8172, 1e-12);
  EXPECT_NEAR(t.pos.y(), -0.2329, 1e-12);
  EXPECT_NEAR(t.pos.z(), 0.0628, 1e-12);
}

TEST(ForwardKinematics, MatchesMatrixChainOracle) {
  std::mt19937_64 rng(21);
  for (const auto& name : preset_names()) {
    const RobotModel m = preset(name);
    for (int i = 0; i < 1000; ++i) {
      const JointVector q = oracles::random_joints(rng, m.q_limits);
      const Transform t = forward_kinematics(m, q);
      EXPECT_LT(max_abs_diff(oracles::to_matrix(t), oracles::fk_matrix_chain(m, q)), 1e-12);
      EXPECT_TRUE(t.rot.is_valid());
    }
  }
}

TEST(ForwardKinematics, FirstJointRotatesAboutBaseZ) {
  const RobotModel m = bare_ur5e();
  std::mt19937_64 rng(22);
  for (int i = 0; i < 100; ++i) {
    JointVector q = oracles::random_joints(rng, m.q_limits);
    const double theta = 0.7;
    const Vec3 p0 = forward_kinematics(m, q).pos;
    q[0] += theta;
    const Vec3 p1 = forward_kinematics(m, q).pos;
    EXPECT_LT(max_abs_diff(p1, Rotation::about_z(theta) * p0), 1e-9);
  }
}

TEST(ForwardKinematics, LinkFramesEndAtFlange) {
  const RobotModel m = preset("ur5e");
  const JointVector q = (JointVector() << 0.1, -1.2, 1.4, -0.3, 0.5, 2.0).finished();
  const auto frames = link_frames(m, q);
  EXPECT_LT(pose_error(frames.front(), m.base), 1e-15);
  EXPECT_LT(pose_error(frames.back(), forward_kinematics(m, q)), 1e-14);
}

TEST(Jacobians, MatchFiniteDifferences) {
  const RobotModel m = preset("ur5e");
  std::mt19937_64 rng(23);
  const UnitQuat desired = quat_from_rotation(oracles::random_rotation(rng));
  for (int i = 0; i < 100; ++i) {
    const JointVector q = i == 0 ? JointVector::Zero() : oracles::random_joints(rng, m.q_limits);
    const Eigen::MatrixXd jp = oracles::central_jacobian(
        [&](const Eigen::VectorXd& x) -> Eigen::VectorXd { return forward_kinematics(m, x).pos; }, q);
    EXPECT_LT(oracles::relative_error(position_jacobian(m, q), jp), 1e-5);
    const Eigen::MatrixXd jo = oracles::central_jacobian(
        [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
          return quat_error(desired, quat_from_rotation(forward_kinematics(m, x).rot));
        },
        q);
    EXPECT_LT(oracles::relative_error(orientation_error_jacobian(m, q, desired), jo), 1e-5);
  }
}

TEST(Jacobians, QuaternionJacobianMatchesFiniteDifferences) {
  const RobotModel m = preset("ur5e");
  std::mt19937_64 rng(24);
  for (int i = 0; i < 50; ++i) {
    const JointVector q = oracles::random_joints(rng, m.q_limits);
    const UnitQuat q0 = quat_from_rotation(forward_kinematics(m, q).rot);
    const Eigen::MatrixXd fd = oracles::central_jacobian(
        [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
          UnitQuat u = quat_from_rotation(forward_kinematics(m, x).rot);
          if (u.dot(q0) < 0) u = u.negated();
          return Eigen::Vector4d(u.eta, u.eps.x(), u.eps.y(), u.eps.z());
        },
        q);
    EXPECT_LT(oracles::relative_error(quaternion_jacobian(m, q), fd), 1e-5);
  }
}

TEST(Jacobians, LastJointDoesNotMoveFlangeOrigin) {
  const RobotModel m = preset("ur5e");
  std::mt19937_64 rng(25);
  for (int i = 0; i < 100; ++i) {
    const JointVector q = oracles::random_joints(rng, m.q_limits);
    EXPECT_LT(position_jacobian(m, q).col(5).norm(), 1e-9);
  }
}

TEST(Jacobians, EvaluateKinematicsIsConsistent) {
  const RobotModel m = preset("ur5e");
  const JointVector q = (JointVector() << 0.3, -1.0, 1.1, -0.4, -1.3, 0.2).finished();
  const KinematicState ks = evaluate_kinematics(m, q);
  EXPECT_LT(pose_error(ks.pose, forward_kinematics(m, q)), 1e-15);
  EXPECT_LT(max_abs_diff(ks.linear, position_jacobian(m, q)), 1e-15);
  EXPECT_LT(max_abs_diff(rotation_from_quat(ks.quat).matrix(), ks.pose.rot.matrix()), 1e-14);
}

TEST(Reach, SumsLinkLengthsPastShoulder) {
  EXPECT_NEAR(max_reach(preset("ur5e")), 1.1498, 1e-12);
  RobotModel zero = preset("ur5e");
  for (auto& r : zero.dh) r.a = r.d = 0.0;
  EXPECT_EQ(max_reach(zero), 0.0);
  RobotModel twice = preset("ur5e");
  for (auto& r : twice.dh) {
    r.a *= 2;
    r.d *= 2;
  }
  EXPECT_NEAR(max_reach(twice), 2 * 1.1498, 1e-12);
}

TEST(Reach, CenterSitsAtShoulder) {
  RobotModel m = preset("ur5e");
  m.base = {Rotation::about_z(0.5), Vec3(1, 2, 3)};
  EXPECT_LT(max_abs_diff(reach_center(m), Vec3(1, 2, 3 + 0.1625)), 1e-15);
}

TEST(Reach, ForwardKinematicsStaysInsideSphere) {
  const RobotModel m = preset("ur5e");
  std::mt19937_64 rng(26);
  for (int i = 0; i < 1000; ++i) {
    const JointVector q = oracles::random_joints(rng, m.q_limits);
    EXPECT_LE((forward_kinematics(m, q).pos - reach_center(m)).norm(), max_reach(m) + 1e-12);
  }
}

TEST(FkSuite, PassesForEveryPreset) {
  for (const auto& name : preset_names()) {
    const auto r = oracles::run_fk_suite(preset(name), 200);
    EXPECT_TRUE(r.passed()) << name;
  }
}
