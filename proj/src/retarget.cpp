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

#include "teleop/retarget.hpp"

#include <cmath>

#include "teleop/error.hpp"

namespace teleop::retarget {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

bool legal_on_input_tree(const OrientationStrategy& s) {
  return std::holds_alternative<CalibratedFixed>(s) || std::holds_alternative<DeviceAtClutch>(s) ||
         std::holds_alternative<WorldIdentity>(s);
}

bool legal_on_robot_tree(const OrientationStrategy& s) {
  return !std::holds_alternative<DeviceAtClutch>(s);
}

Rotation choose_input_rotation(const OrientationStrategy& s, const Transform& T_0Id) {
  return std::visit(Overloaded{
                        [](const CalibratedFixed& c) { return c.rotation; },
                        [&](const DeviceAtClutch&) { return T_0Id.rot; },
                        [](const auto&) { return Rotation::identity(); },
                    },
                    s);
}

Rotation choose_robot_rotation(const OrientationStrategy& s, const Transform& T_0Me,
                               const Rotation& previous) {
  return std::visit(Overloaded{
                        [](const CalibratedFixed& c) { return c.rotation; },
                        [&](const EndEffectorAtRelease&) { return T_0Me.rot; },
                        [&](const UprightAtRelease&) {
                          try {
                            return upright(T_0Me.rot);
                          } catch (const Error& e) {
                            if (e.code() != ErrorCode::kSingular) throw;
                            return previous;
                          }
                        },
                        [](const auto&) { return Rotation::identity(); },
                    },
                    s);
}

void reset_input_frames(RetargetState& s, const Transform& T_0Id) {
  s.T_0I_tI = {choose_input_rotation(s.config.input_translation, T_0Id), T_0Id.pos};
  s.T_0I_rI = {choose_input_rotation(s.config.input_rotation, T_0Id), T_0Id.pos};
}

void reset_robot_frames(RetargetState& s, const Transform& T_0Me) {
  s.T_0M_tM = {choose_robot_rotation(s.config.robot_translation, T_0Me, s.T_0M_tM.rot),
               T_0Me.pos};
  s.T_0M_rM = {choose_robot_rotation(s.config.robot_rotation, T_0Me, s.T_0M_rM.rot), T_0Me.pos};
}

}  // namespace

std::string_view strategy_name(const OrientationStrategy& s) {
  return std::visit(Overloaded{
                        [](const CalibratedFixed&) { return std::string_view("calibrated_fixed"); },
                        [](const DeviceAtClutch&) { return std::string_view("device_at_clutch"); },
                        [](const EndEffectorAtRelease&) { return std::string_view("ee_at_release"); },
                        [](const UprightAtRelease&) { return std::string_view("upright_at_release"); },
                        [](const WorldIdentity&) { return std::string_view("world_identity"); },
                    },
                    s);
}

std::optional<OrientationStrategy> strategy_from_name(std::string_view name) {
  if (name == "calibrated_fixed") return CalibratedFixed{};
  if (name == "device_at_clutch") return DeviceAtClutch{};
  if (name == "ee_at_release") return EndEffectorAtRelease{};
  if (name == "upright_at_release") return UprightAtRelease{};
  if (name == "world_identity") return WorldIdentity{};
  return std::nullopt;
}

std::string_view mode_name(Mode m) { return m == Mode::kRelative ? "relative" : "absolute"; }

std::optional<Mode> mode_from_name(std::string_view name) {
  if (name == "relative") return Mode::kRelative;
  if (name == "absolute") return Mode::kAbsolute;
  return std::nullopt;
}

void RetargetConfig::validate() const {
  if (!legal_on_input_tree(input_translation) || !legal_on_input_tree(input_rotation)) {
    throw Error(ErrorCode::kStrategyMismatch,
                "input-tree strategies must be calibrated_fixed, device_at_clutch or world_identity");
  }
  if (!legal_on_robot_tree(robot_translation) || !legal_on_robot_tree(robot_rotation)) {
    throw Error(ErrorCode::kStrategyMismatch, "device_at_clutch is not a robot-tree strategy");
  }
}

RetargetState initial_state(const RetargetConfig& cfg, const Transform& T_0Me) {
  cfg.validate();
  RetargetState s;
  s.config = cfg;
  s.T_0M_tM.rot = T_0Me.rot;
  s.T_0M_rM.rot = T_0Me.rot;
  reset_robot_frames(s, T_0Me);
  reset_input_frames(s, Transform::identity());
  return s;
}

RetargetState calibrate(const RetargetState& s, const Rotation& R_tI, const Rotation& R_tM) {
  auto* in = std::get_if<CalibratedFixed>(&s.config.input_translation);
  auto* robot = std::get_if<CalibratedFixed>(&s.config.robot_translation);
  if (in == nullptr || robot == nullptr) {
    throw Error(ErrorCode::kStrategyMismatch,
                "calibrate requires calibrated_fixed translation strategies");
  }
  RetargetState out = s;
  out.config.input_translation = CalibratedFixed{R_tI};
  out.config.robot_translation = CalibratedFixed{R_tM};
  out.T_0I_tI.rot = R_tI;
  out.T_0M_tM.rot = R_tM;
  return out;
}

RetargetState calibrate_absolute(const RetargetState& s, const Transform& T_0Id,
                                 const Transform& T_0Me) {
  RetargetState out = s;
  reset_input_frames(out, T_0Id);
  reset_robot_frames(out, T_0Me);
  if (out.engaged) {
    out = update_displacements(out, T_0Id);
  } else {
    out.T_tI_d = Transform::identity();
    out.T_rI_d = Transform::identity();
  }
  return out;
}

RetargetState on_clutch_activate(const RetargetState& s, const Transform& T_0Id) {
  if (s.engaged) throw Error(ErrorCode::kAlreadyEngaged, "clutch is already engaged");
  RetargetState out = s;
  if (out.config.mode == Mode::kRelative) reset_input_frames(out, T_0Id);
  out.engaged = true;
  return out;
}

RetargetState on_clutch_deactivate(const RetargetState& s, const Transform& T_0Me) {
  if (!s.engaged) throw Error(ErrorCode::kNotEngaged, "clutch is not engaged");
  RetargetState out = s;
  if (out.config.mode == Mode::kRelative) reset_robot_frames(out, T_0Me);
  out.T_tI_d = Transform::identity();
  out.T_rI_d = Transform::identity();
  out.engaged = false;
  return out;
}

RetargetState update_displacements(const RetargetState& s, const Transform& T_0Id) {
  if (!s.engaged) throw Error(ErrorCode::kNotEngaged, "clutch is not engaged");
  RetargetState out = s;
  out.T_tI_d = invert(s.T_0I_tI) * T_0Id;
  out.T_rI_d = invert(s.T_0I_rI) * T_0Id;
  return out;
}

Transform desired_pose(const RetargetState& s) {
  return {s.T_0M_rM.rot * s.T_rI_d.rot, s.T_0M_tM.pos + s.T_0M_tM.rot * s.T_tI_d.pos};
}

RetargetState with_config(const RetargetState& s, const RetargetConfig& cfg) {
  cfg.validate();
  RetargetState out = s;
  out.config = cfg;
  return out;
}

RetargetState ingest(const RetargetState& s, const Transform& T_0Id, bool clutch) {
  if (!s.engaged && clutch) {
    return update_displacements(on_clutch_activate(s, T_0Id), T_0Id);
  }
  if (s.engaged && clutch) return update_displacements(s, T_0Id);
  if (s.engaged && !clutch) {
    const RetargetState moved = update_displacements(s, T_0Id);
    return on_clutch_deactivate(moved, desired_pose(moved));
  }
  return s;
}

Transform InputFilter::filter(double t, const Transform& raw) {
  const UnitQuat raw_q = quat_from_rotation(raw.rot);
  if (!last_t_) {
    pos_ = raw.pos;
    quat_ = raw_q;
  } else {
    const double dt = std::max(t - *last_t_, 0.0);
    const double k = 1.0 - std::pow(1.0 - coefficient_, dt / 0.01);
    pos_ += k * (raw.pos - pos_);
    quat_ = slerp(quat_, raw_q, k);
  }
  last_t_ = t;
  return {rotation_from_quat(quat_), pos_};
}

}  // namespace teleop::retarget
