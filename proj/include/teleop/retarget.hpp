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

// Clutch-driven motion retargeting between two disconnected frame trees.
//
// Input tree:  {0_I} -> {d} (device), with reference frames {t_I}, {r_I}.
// Robot tree:  {0_M} -> {e} (end effector), with reference frames {t_M}, {r_M}.
//
// Translational displacements are measured in {t_I} and applied in {t_M};
// rotational displacements are measured in {r_I} and applied in {r_M}. The
// orientation of each reference frame is chosen by its own strategy when the
// frame is reset: input frames on clutch activation, robot frames on clutch
// release (relative mode), or once at calibration (absolute mode).
//
// All transitions are pure functions of the previous state.

#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "teleop/geometry.hpp"

namespace teleop::retarget {

struct CalibratedFixed {
  Rotation rotation;
};
struct DeviceAtClutch {};
struct EndEffectorAtRelease {};
struct UprightAtRelease {};
// Not part of the two-tree method; classic single-frame mapping for baselines.
struct WorldIdentity {};

using OrientationStrategy =
    std::variant<CalibratedFixed, DeviceAtClutch, EndEffectorAtRelease, UprightAtRelease,
                 WorldIdentity>;

std::string_view strategy_name(const OrientationStrategy& s);
// Accepts the wire names; CalibratedFixed comes back with an identity rotation.
std::optional<OrientationStrategy> strategy_from_name(std::string_view name);

enum class Mode { kRelative, kAbsolute };
std::string_view mode_name(Mode m);
std::optional<Mode> mode_from_name(std::string_view name);

struct RetargetConfig {
  Mode mode = Mode::kRelative;
  OrientationStrategy input_translation = CalibratedFixed{};
  OrientationStrategy input_rotation = DeviceAtClutch{};
  OrientationStrategy robot_translation = CalibratedFixed{};
  OrientationStrategy robot_rotation = UprightAtRelease{};

  // Throws Error(kStrategyMismatch) when a strategy is used on the wrong tree.
  void validate() const;
};

struct RetargetState {
  RetargetConfig config;
  bool engaged = false;
  Transform T_0I_tI;
  Transform T_0I_rI;
  Transform T_0M_tM;
  Transform T_0M_rM;
  // Displacements of {d} relative to {t_I} and {r_I}; identity while off.
  Transform T_tI_d;
  Transform T_rI_d;
};

// Starting state: clutch off, robot frames placed at the current end-effector
// pose with orientations chosen by the robot strategies.
RetargetState initial_state(const RetargetConfig& cfg, const Transform& T_0Me);

// Stores the translation-frame orientations into the CalibratedFixed
// strategies and applies them to {t_I}, {t_M}. Positions are unchanged.
// Throws Error(kStrategyMismatch) when the translation strategies are not
// CalibratedFixed.
RetargetState calibrate(const RetargetState& s, const Rotation& R_tI, const Rotation& R_tM);

// Absolute-mode calibration: places all four frames at the given device and
// end-effector poses with strategy-selected orientations.
RetargetState calibrate_absolute(const RetargetState& s, const Transform& T_0Id,
                                 const Transform& T_0Me);

// Throws Error(kAlreadyEngaged) when the clutch is already on.
RetargetState on_clutch_activate(const RetargetState& s, const Transform& T_0Id);

// Throws Error(kNotEngaged) when the clutch is off.
RetargetState on_clutch_deactivate(const RetargetState& s, const Transform& T_0Me);

// Throws Error(kNotEngaged) when the clutch is off.
RetargetState update_displacements(const RetargetState& s, const Transform& T_0Id);

// R = R_0M_rM * R_rI_d, p = p_0M_tM + R_0M_tM * p_tI_d.
Transform desired_pose(const RetargetState& s);

// Swaps the configuration; frames are left untouched until the next event.
RetargetState with_config(const RetargetState& s, const RetargetConfig& cfg);

// One device sample carrying the clutch button level.
struct DeviceSample {
  double t = 0.0;
  Transform pose;
  bool clutch = false;
};

// Processes one sample the way one pass of the retargeting loop does: a
// rising clutch edge resets the input frames, an engaged clutch updates the
// displacements, and a falling edge updates the displacements and then resets
// the robot frames at the resulting desired pose.
RetargetState ingest(const RetargetState& s, const Transform& T_0Id, bool clutch);

// Exponential position smoothing and slerp orientation smoothing applied to
// raw device samples before retargeting. `coefficient` is the blend weight
// per 100 Hz sample and is rate-adjusted for other sample periods.
class InputFilter {
 public:
  explicit InputFilter(double coefficient = 0.2) : coefficient_(coefficient) {}

  Transform filter(double t, const Transform& raw);
  void reset() { last_t_.reset(); }
  double coefficient() const { return coefficient_; }

 private:
  double coefficient_;
  std::optional<double> last_t_;
  Vec3 pos_ = Vec3::Zero();
  UnitQuat quat_;
};

}  // namespace teleop::retarget
