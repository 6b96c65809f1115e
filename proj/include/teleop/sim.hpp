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

// Deterministic closed-loop harness: device stream -> retargeting ->
// prediction + MPC at the planning rate -> double-integrator plant at the
// simulation rate.

#include "json.hpp"

#include <deque>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "teleop/kinematics.hpp"
#include "teleop/planner.hpp"
#include "teleop/retarget.hpp"

namespace teleop::sim {

using planner::JointState;

inline constexpr int kScenarioVersion = 1;

struct Rates {
  double input_hz = 100.0;
  double plan_hz = 10.0;
  double sim_hz = 100.0;
};

// Session-level changes that happen between device samples.
struct CalibrateEvent {
  Rotation r_tI;
  Rotation r_tM;
};
struct ConfigEvent {
  retarget::RetargetConfig config;
};
struct ScenarioEvent {
  double t = 0.0;
  std::variant<CalibrateEvent, ConfigEvent> action;
};

struct Scenario {
  std::string name;
  std::string robot_name;  // preset name, or "custom"
  RobotModel robot;
  planner::OcpConfig ocp;
  retarget::RetargetConfig retarget;
  // Coefficient per 100 Hz sample; nullopt disables the input filter.
  std::optional<double> filter_coefficient = 0.2;
  std::vector<retarget::DeviceSample> input_stream;
  // Applied before any sample with the same or a later timestamp.
  std::vector<ScenarioEvent> events;
  Rates rates;
  double duration = 0.0;
  JointVector initial_q = JointVector::Zero();

  // Throws Error(kScenarioInvalid) naming the first violated field.
  void validate() const;
  int ticks() const;
  int ticks_per_plan() const;
};

// Parses the versioned JSON scenario format. Throws Error(kScenarioInvalid).
Scenario scenario_from_json(const nlohmann::json& j);
nlohmann::json scenario_to_json(const Scenario& s);
Scenario load_scenario(const std::string& path);

struct LogRecord {
  double t = 0.0;
  JointVector q = JointVector::Zero();
  JointVector qd = JointVector::Zero();
  Transform ee;
  Transform desired;
  Vec3 reference_start = Vec3::Zero();
  bool clutch = false;
  double solve_ms = 0.0;
  double cost = 0.0;
  bool converged = false;
};

// Column names of the CSV log, in order.
std::vector<std::string> log_columns();
void write_csv_header(std::ostream& os);
void write_csv_row(std::ostream& os, const LogRecord& r);
void write_csv(std::ostream& os, const std::vector<LogRecord>& records);
nlohmann::json log_record_to_json(const LogRecord& r);

JointState step_plant(const JointState& x, const JointVector& u, double dt);

// Owns one closed loop. Inputs are queued with timestamps and consumed by
// tick() once simulated time reaches them, so results depend only on the
// sample timestamps, never on when push_input was called.
class Simulation {
 public:
  explicit Simulation(Scenario scenario);

  // Samples must arrive in strictly increasing time order; events may share
  // a timestamp with the previous item but never go back in time.
  void push_input(const retarget::DeviceSample& sample);
  void push_event(const ScenarioEvent& event);
  // Advances one simulation period and returns the record for the tick's
  // start time.
  LogRecord tick();

  double time() const { return tick_ / scenario_.rates.sim_hz; }
  long tick_index() const { return tick_; }
  const Scenario& scenario() const { return scenario_; }
  const retarget::RetargetState& retarget_state() const { return retarget_; }
  const JointState& plant() const { return plant_; }
  const Transform& desired() const { return desired_.pose; }
  const std::optional<planner::PlannedTrajectory>& active_plan() const { return plan_; }
  const planner::SolveStats& last_stats() const { return last_stats_; }
  const std::optional<Transform>& device_pose() const { return device_pose_; }

  // Immediate controls; a queued event calls these when it comes due. In
  // absolute mode calibration also resets all four frames at the current
  // device and desired poses. Switching configs never moves the frames.
  void calibrate(const Rotation& R_tI, const Rotation& R_tM);
  void set_retarget_config(const retarget::RetargetConfig& cfg);
  void reset();

 private:
  void ingest(const retarget::DeviceSample& sample);
  JointVector active_control() const;

  Scenario scenario_;
  long tick_ = 0;
  std::deque<std::variant<retarget::DeviceSample, ScenarioEvent>> pending_;
  std::optional<double> last_input_t_;
  std::optional<double> last_push_t_;
  retarget::RetargetState retarget_;
  std::optional<retarget::InputFilter> filter_;
  std::optional<Transform> device_pose_;
  bool absolute_calibrated_ = false;
  planner::DesiredSample prev_desired_;
  planner::DesiredSample desired_;
  planner::MpcPlanner mpc_;
  JointState plant_;
  std::optional<planner::PlannedTrajectory> plan_;
  double plan_t0_ = 0.0;
  Vec3 reference_start_ = Vec3::Zero();
  planner::SolveStats last_stats_;
  double last_cost_ = 0.0;
};

std::vector<LogRecord> run_scenario(const Scenario& s);

}  // namespace teleop::sim
