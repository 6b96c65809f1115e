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

#include "teleop/oracles/suites.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "teleop/error.hpp"
#include "teleop/oracles/fk_chain.hpp"
#include "teleop/oracles/finite_difference.hpp"
#include "teleop/oracles/naive_retarget.hpp"
#include "teleop/planner.hpp"

namespace teleop::oracles {

namespace {

std::string fmt(const char* label, double value, double limit) {
  std::ostringstream os;
  os.precision(3);
  os << label << ' ' << std::scientific << value << " (limit " << limit << ")";
  return os.str();
}

Check check_max(const std::string& name, const char* label, double value, double limit) {
  return {name, value <= limit, fmt(label, value, limit)};
}

Transform from_matrix(const Eigen::Matrix4d& m) {
  return {Rotation::from_matrix_unchecked(m.topLeftCorner<3, 3>()), m.topRightCorner<3, 1>()};
}

}  // namespace

bool SuiteResult::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

std::vector<std::string> suite_names() { return {"fk", "gradients", "retarget"}; }

Rotation random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  return rotation_from_quat(UnitQuat::from_wxyz(n(rng), n(rng), n(rng), n(rng)));
}

Transform random_transform(std::mt19937_64& rng, double pos_scale) {
  std::uniform_real_distribution<double> u(-pos_scale, pos_scale);
  return {random_rotation(rng), Vec3(u(rng), u(rng), u(rng))};
}

JointVector random_joints(std::mt19937_64& rng, const JointBounds& bounds) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  JointVector q;
  for (int i = 0; i < kNumJoints; ++i) {
    q[i] = bounds.lower[i] + u(rng) * (bounds.upper[i] - bounds.lower[i]);
  }
  return q;
}

std::vector<TraceStep> random_trace(std::mt19937_64& rng, int steps, double toggle_probability) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::bernoulli_distribution toggle(toggle_probability);
  std::vector<TraceStep> trace;
  trace.reserve(steps);
  TraceStep cur{random_transform(rng, 0.5), false};
  for (int i = 0; i < steps; ++i) {
    cur.device.pos += 0.01 * Vec3(n(rng), n(rng), n(rng));
    const Vec3 axis(n(rng), n(rng), n(rng));
    cur.device.rot = cur.device.rot * Rotation::about_axis(axis.normalized(), 0.05 * n(rng));
    if (toggle(rng)) cur.clutch = !cur.clutch;
    trace.push_back(cur);
  }
  return trace;
}

double pose_discrepancy(const Transform& a, const Transform& b) {
  return std::max((a.pos - b.pos).cwiseAbs().maxCoeff(),
                  (a.rot.matrix() - b.rot.matrix()).cwiseAbs().maxCoeff());
}

SuiteResult run_fk_suite(const RobotModel& model, int samples, std::uint64_t seed) {
  SuiteResult result{"fk", {}};
  std::mt19937_64 rng(seed);

  double worst = 0.0;
  for (int i = 0; i < samples; ++i) {
    const JointVector q = random_joints(rng, model.q_limits);
    const Eigen::Matrix4d expected = fk_matrix_chain(model, q);
    const Eigen::Matrix4d actual = to_matrix(forward_kinematics(model, q));
    worst = std::max(worst, (expected - actual).cwiseAbs().maxCoeff());
  }
  result.checks.push_back(check_max("fk_matrix_chain", "max entry error", worst, 1e-12));

  if (model.name == "ur5e") {
    const Vec3 p = forward_kinematics(model, JointVector::Zero()).pos;
    const double err = (p - Vec3(-0.8172, -0.2329, 0.0628)).cwiseAbs().maxCoeff();
    result.checks.push_back(check_max("fk_zero_config", "position error [m]", err, 1e-4));
  }

  double worst_jp = 0.0, worst_je = 0.0;
  for (int i = 0; i < 100; ++i) {
    const JointVector q = random_joints(rng, model.q_limits);
    const UnitQuat desired = quat_from_rotation(forward_kinematics(model, q).rot *
                                                Rotation::about_axis(Vec3(1, 2, 3).normalized(), 0.4));
    const Eigen::VectorXd q0 = q;
    const Eigen::MatrixXd fd_p = central_jacobian(
        [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
          return forward_kinematics(model, JointVector(x)).pos;
        },
        q0);
    const Eigen::MatrixXd fd_e = central_jacobian(
        [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
          return quat_error(desired, quat_from_rotation(forward_kinematics(model, JointVector(x)).rot));
        },
        q0);
    worst_jp = std::max(worst_jp, relative_error(position_jacobian(model, q), fd_p));
    worst_je = std::max(worst_je, relative_error(orientation_error_jacobian(model, q, desired), fd_e));
  }
  result.checks.push_back(check_max("position_jacobian_fd", "relative error", worst_jp, 1e-5));
  result.checks.push_back(check_max("orientation_jacobian_fd", "relative error", worst_je, 1e-5));
  return result;
}

SuiteResult run_gradient_suite(const RobotModel& model, int samples, std::uint64_t seed) {
  SuiteResult result{"gradients", {}};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const planner::OcpConfig cfg;
  double worst = 0.0;
  for (int s = 0; s < samples; ++s) {
    planner::JointState x0{random_joints(rng, model.q_limits), JointVector::Zero()};
    for (int i = 0; i < kNumJoints; ++i) x0.qd[i] = u(rng);
    const Transform ee = forward_kinematics(model, x0.q);
    ReferenceTrajectory ref;
    ref.dt = cfg.dt;
    for (int k = 0; k <= cfg.horizon; ++k) {
      ref.positions.push_back(ee.pos + 0.1 * Vec3(u(rng), u(rng), u(rng)));
      ref.orientations.push_back(
          quat_from_rotation(ee.rot * Rotation::about_axis(Vec3(u(rng), u(rng), u(rng)).normalized(), 0.5 * u(rng))));
    }
    const planner::MultipleShootingProblem nlp(cfg, model, x0, ref);
    Eigen::VectorXd w(nlp.num_variables());
    for (int k = 0; k < cfg.horizon; ++k) {
      for (int i = 0; i < kNumJoints; ++i) {
        w[12 * k + i] = x0.q[i] + 0.3 * u(rng);
        w[12 * k + 6 + i] = u(rng);
        w[12 * cfg.horizon + 6 * k + i] = 5.0 * u(rng);
      }
    }
    const Eigen::VectorXd analytic = nlp.gradient(w);
    const Eigen::VectorXd numeric =
        central_gradient([&](const Eigen::VectorXd& v) { return nlp.objective(v); }, w);
    worst = std::max(worst, relative_error(analytic, numeric));
  }
  result.checks.push_back(check_max("nlp_gradient_fd", "relative error", worst, 1e-5));
  return result;
}

SuiteResult run_retarget_suite(int steps, std::uint64_t seed) {
  using namespace retarget;
  SuiteResult result{"retarget", {}};
  std::mt19937_64 rng(seed);

  const std::vector<RetargetConfig> configs = {
      {Mode::kRelative, CalibratedFixed{random_rotation(rng)}, DeviceAtClutch{},
       CalibratedFixed{Rotation::about_z(std::numbers::pi)}, UprightAtRelease{}},
      {Mode::kRelative, WorldIdentity{}, DeviceAtClutch{}, EndEffectorAtRelease{},
       EndEffectorAtRelease{}},
      {Mode::kRelative, DeviceAtClutch{}, WorldIdentity{}, UprightAtRelease{}, WorldIdentity{}},
      {Mode::kAbsolute, CalibratedFixed{random_rotation(rng)}, DeviceAtClutch{},
       CalibratedFixed{random_rotation(rng)}, EndEffectorAtRelease{}},
  };
  double worst = 0.0;
  for (const RetargetConfig& cfg : configs) {
    const Transform ee0 = random_transform(rng, 0.5);
    RetargetState state = initial_state(cfg, ee0);
    NaiveRetargeting naive(cfg, to_matrix(ee0));
    for (const TraceStep& step : random_trace(rng, steps)) {
      state = ingest(state, step.device, step.clutch);
      const Transform expected = from_matrix(naive.iterate(to_matrix(step.device), step.clutch));
      worst = std::max(worst, pose_discrepancy(desired_pose(state), expected));
    }
  }
  result.checks.push_back(check_max("algorithm_equivalence", "max pose discrepancy", worst, 1e-9));

  // Clutch-off freeze, no-jump engage, translation/rotation separation.
  const RetargetConfig mixed = configs[0];
  double freeze = 0.0, jump = 0.0;
  bool separated = true;
  RetargetState state = initial_state(mixed, random_transform(rng, 0.5));
  Transform device = random_transform(rng, 0.5);
  for (int episode = 0; episode < 200; ++episode) {
    const Transform frozen = desired_pose(state);
    for (int i = 0; i < 20; ++i) {
      device = random_transform(rng, 0.5);
      state = ingest(state, device, false);
      freeze = std::max(freeze, pose_discrepancy(desired_pose(state), frozen));
    }
    const Transform before = desired_pose(state);
    state = ingest(state, device, true);
    jump = std::max(jump, pose_discrepancy(desired_pose(state), before));

    for (int i = 0; i < 10; ++i) {
      const Transform pre = desired_pose(state);
      Transform rotated = device;
      rotated.rot = device.rot * random_rotation(rng);
      state = ingest(state, rotated, true);
      const Transform mid = desired_pose(state);
      separated = separated && (mid.pos.array() == pre.pos.array()).all();
      Transform moved = rotated;
      moved.pos += random_transform(rng, 0.1).pos;
      state = ingest(state, moved, true);
      separated = separated && (desired_pose(state).rot.matrix().array() == mid.rot.matrix().array()).all();
      device = moved;
    }
    state = ingest(state, device, false);
  }
  result.checks.push_back(check_max("clutch_off_freeze", "max drift", freeze, 1e-12));
  result.checks.push_back(check_max("engage_continuity", "max jump", jump, 1e-9));
  result.checks.push_back({"translation_rotation_separation", separated,
                           separated ? "bit-identical" : "coupling detected"});
  return result;
}

SuiteResult run_suite(const std::string& name, const RobotModel& model) {
  if (name == "fk") return run_fk_suite(model);
  if (name == "gradients") return run_gradient_suite(model);
  if (name == "retarget") return run_retarget_suite();
  throw Error(ErrorCode::kInvalidArgument, "unknown suite '" + name + "'");
}

}  // namespace teleop::oracles
