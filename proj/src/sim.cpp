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

#include "teleop/sim.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "teleop/error.hpp"

namespace teleop::sim {

using nlohmann::json;

namespace {

[[noreturn]] void invalid(const std::string& field, const std::string& why) {
  throw Error(ErrorCode::kScenarioInvalid, "scenario field '" + field + "': " + why);
}

double number(const json& j, const std::string& field) {
  if (!j.is_number()) invalid(field, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) invalid(field, "must be finite");
  return v;
}

template <int N>
Eigen::Matrix<double, N, 1> vector_of(const json& j, const std::string& field) {
  if (!j.is_array() || j.size() != N) invalid(field, "expected an array of " + std::to_string(N));
  Eigen::Matrix<double, N, 1> v;
  for (int i = 0; i < N; ++i) v[i] = number(j[i], field + "[" + std::to_string(i) + "]");
  return v;
}

Rotation rotation_of(const json& j, const std::string& field) {
  const Eigen::Vector4d q = vector_of<4>(j, field);
  if (q.norm() < 1e-9) invalid(field, "quaternion has zero norm");
  return rotation_from_quat(UnitQuat::from_wxyz(q[0], q[1], q[2], q[3]));
}

json quat_json(const Rotation& r) {
  const auto q = quat_from_rotation(r).wxyz();
  return json::array({q[0], q[1], q[2], q[3]});
}

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

template <class V>
json array_json(const V& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

RobotModel robot_of(const json& j, std::string& name) {
  if (j.is_string()) {
    name = j.get<std::string>();
    try {
      return preset(name);
    } catch (const Error& e) {
      invalid("robot", e.what());
    }
  }
  if (!j.is_object()) invalid("robot", "expected a preset name or an object");
  RobotModel m;
  if (j.contains("preset")) {
    if (!j["preset"].is_string()) invalid("robot.preset", "expected a string");
    name = j["preset"].get<std::string>();
    try {
      m = preset(name);
    } catch (const Error& e) {
      invalid("robot.preset", e.what());
    }
  } else {
    name = "custom";
    if (!j.contains("dh")) invalid("robot.dh", "required without a preset");
    m = preset("ur5e");
    m.name = "custom";
  }
  if (j.contains("name")) {
    name = j["name"].get<std::string>();
    m.name = name;
  }
  if (j.contains("dh")) {
    const json& dh = j["dh"];
    if (!dh.is_array() || dh.size() != kNumJoints) invalid("robot.dh", "expected 6 rows");
    for (int i = 0; i < kNumJoints; ++i) {
      const std::string f = "robot.dh[" + std::to_string(i) + "]";
      const json& row = dh[i];
      m.dh[i] = {number(row.value("a_m", json()), f + ".a_m"),
                 number(row.value("d_m", json()), f + ".d_m"),
                 number(row.value("alpha_rad", json()), f + ".alpha_rad"),
                 number(row.value("theta_offset_rad", json(0.0)), f + ".theta_offset_rad")};
    }
  }
  auto bound = [&](const char* key, JointVector& target) {
    if (j.contains(key)) target = vector_of<kNumJoints>(j[key], std::string("robot.") + key);
  };
  bound("q_min_rad", m.q_limits.lower);
  bound("q_max_rad", m.q_limits.upper);
  bound("qd_min_rad_s", m.qd_limits.lower);
  bound("qd_max_rad_s", m.qd_limits.upper);
  bound("u_min_rad_s2", m.u_limits.lower);
  bound("u_max_rad_s2", m.u_limits.upper);
  if (j.contains("base")) {
    const json& b = j["base"];
    m.base.pos = vector_of<3>(b.value("pos_m", json::array({0, 0, 0})), "robot.base.pos_m");
    m.base.rot = rotation_of(b.value("quat_wxyz", json::array({1, 0, 0, 0})), "robot.base.quat_wxyz");
  }
  try {
    m.validate();
  } catch (const Error& e) {
    invalid("robot", e.what());
  }
  return m;
}

planner::OcpConfig ocp_of(const json& j, const Rates& rates) {
  planner::OcpConfig c;
  c.dt = 1.0 / rates.plan_hz;
  c.path_samples = std::max(1, static_cast<int>(std::lround(rates.sim_hz / rates.plan_hz)));
  if (j.is_null()) return c;
  if (!j.is_object()) invalid("ocp", "expected an object");
  if (j.contains("horizon")) {
    if (!j["horizon"].is_number_integer()) invalid("ocp.horizon", "expected an integer");
    c.horizon = j["horizon"].get<int>();
  }
  if (j.contains("dt_s")) c.dt = number(j["dt_s"], "ocp.dt_s");
  if (j.contains("w_position")) c.w_position = vector_of<3>(j["w_position"], "ocp.w_position");
  if (j.contains("w_orientation"))
    c.w_orientation = vector_of<3>(j["w_orientation"], "ocp.w_orientation");
  if (j.contains("w_velocity"))
    c.w_velocity = vector_of<kNumJoints>(j["w_velocity"], "ocp.w_velocity");
  if (j.contains("w_acceleration"))
    c.w_acceleration = vector_of<kNumJoints>(j["w_acceleration"], "ocp.w_acceleration");
  if (j.contains("max_iterations")) {
    if (!j["max_iterations"].is_number_integer()) invalid("ocp.max_iterations", "expected an integer");
    c.max_iterations = j["max_iterations"].get<int>();
  }
  if (j.contains("stationarity_tol"))
    c.stationarity_tol = number(j["stationarity_tol"], "ocp.stationarity_tol");
  if (j.contains("constraint_tol"))
    c.constraint_tol = number(j["constraint_tol"], "ocp.constraint_tol");
  if (j.contains("path_samples")) {
    if (!j["path_samples"].is_number_integer()) invalid("ocp.path_samples", "expected an integer");
    c.path_samples = j["path_samples"].get<int>();
  }
  try {
    c.validate();
  } catch (const Error& e) {
    invalid("ocp", e.what());
  }
  return c;
}

retarget::OrientationStrategy strategy_of(const json& j, const std::string& field,
                                          const std::optional<Rotation>& calibration) {
  if (!j.is_string()) invalid(field, "expected a strategy name");
  auto s = retarget::strategy_from_name(j.get<std::string>());
  if (!s) invalid(field, "unknown strategy '" + j.get<std::string>() + "'");
  if (auto* fixed = std::get_if<retarget::CalibratedFixed>(&*s); fixed && calibration) {
    fixed->rotation = *calibration;
  }
  return *s;
}

retarget::RetargetConfig retarget_of(const json& rt, const std::string& field,
                                     retarget::RetargetConfig cfg) {
  if (rt.contains("mode")) {
    const json& m = rt["mode"];
    auto mode = m.is_string() ? retarget::mode_from_name(m.get<std::string>()) : std::nullopt;
    if (!mode) invalid(field + ".mode", "expected 'relative' or 'absolute'");
    cfg.mode = *mode;
  }
  std::optional<Rotation> r_tI, r_tM;
  if (rt.contains("calibration")) {
    const json& c = rt["calibration"];
    if (!c.is_object()) invalid(field + ".calibration", "expected an object");
    if (c.contains("r_tI_wxyz")) r_tI = rotation_of(c["r_tI_wxyz"], field + ".calibration.r_tI_wxyz");
    if (c.contains("r_tM_wxyz")) r_tM = rotation_of(c["r_tM_wxyz"], field + ".calibration.r_tM_wxyz");
  }
  if (rt.contains("input_translation"))
    cfg.input_translation = strategy_of(rt["input_translation"], field + ".input_translation", r_tI);
  else if (r_tI)
    cfg.input_translation = retarget::CalibratedFixed{*r_tI};
  if (rt.contains("robot_translation"))
    cfg.robot_translation = strategy_of(rt["robot_translation"], field + ".robot_translation", r_tM);
  else if (r_tM)
    cfg.robot_translation = retarget::CalibratedFixed{*r_tM};
  if (rt.contains("input_rotation"))
    cfg.input_rotation = strategy_of(rt["input_rotation"], field + ".input_rotation", std::nullopt);
  if (rt.contains("robot_rotation"))
    cfg.robot_rotation = strategy_of(rt["robot_rotation"], field + ".robot_rotation", std::nullopt);
  return cfg;
}


json retarget_json(const retarget::RetargetConfig& cfg) {
  json rt;
  rt["mode"] = retarget::mode_name(cfg.mode);
  rt["input_translation"] = retarget::strategy_name(cfg.input_translation);
  rt["input_rotation"] = retarget::strategy_name(cfg.input_rotation);
  rt["robot_translation"] = retarget::strategy_name(cfg.robot_translation);
  rt["robot_rotation"] = retarget::strategy_name(cfg.robot_rotation);
  json cal = json::object();
  if (auto* c = std::get_if<retarget::CalibratedFixed>(&cfg.input_translation))
    cal["r_tI_wxyz"] = quat_json(c->rotation);
  if (auto* c = std::get_if<retarget::CalibratedFixed>(&cfg.robot_translation))
    cal["r_tM_wxyz"] = quat_json(c->rotation);
  rt["calibration"] = cal;
  return rt;
}

}  // namespace

int Scenario::ticks() const { return static_cast<int>(std::llround(duration * rates.sim_hz)); }

int Scenario::ticks_per_plan() const {
  return static_cast<int>(std::llround(rates.sim_hz / rates.plan_hz));
}

void Scenario::validate() const {
  if (!(rates.input_hz > 0.0)) invalid("rates.input_hz", "must be positive");
  if (!(rates.plan_hz > 0.0)) invalid("rates.plan_hz", "must be positive");
  if (!(rates.sim_hz > 0.0)) invalid("rates.sim_hz", "must be positive");
  if (rates.plan_hz > rates.sim_hz) invalid("rates.plan_hz", "must not exceed sim_hz");
  const double ratio = rates.sim_hz / rates.plan_hz;
  if (std::abs(ratio - std::round(ratio)) > 1e-9) {
    invalid("rates.sim_hz", "must be an integer multiple of plan_hz");
  }
  if (!(duration > 0.0)) invalid("duration_s", "must be positive");
  if (!initial_q.allFinite()) invalid("initial_q_rad", "must be finite");
  try {
    robot.validate();
  } catch (const Error& e) {
    invalid("robot", e.what());
  }
  try {
    ocp.validate();
  } catch (const Error& e) {
    invalid("ocp", e.what());
  }
  try {
    retarget.validate();
  } catch (const Error& e) {
    invalid("retarget", e.what());
  }
  if (filter_coefficient && !(*filter_coefficient > 0.0 && *filter_coefficient <= 1.0)) {
    invalid("retarget.filter_coefficient", "must be in (0, 1]");
  }
  if (!robot.q_limits.contains(initial_q)) invalid("initial_q_rad", "outside joint limits");
  for (size_t i = 0; i < input_stream.size(); ++i) {
    const auto& s = input_stream[i];
    const std::string f = "input_stream[" + std::to_string(i) + "]";
    if (!std::isfinite(s.t) || s.t < 0.0) invalid(f + ".t_s", "must be finite and >= 0");
    if (i > 0 && !(s.t > input_stream[i - 1].t)) invalid(f + ".t_s", "timestamps must increase");
    if (!s.pose.pos.allFinite()) invalid(f + ".pos_m", "must be finite");
  }
  for (size_t i = 0; i < events.size(); ++i) {
    const std::string f = "events[" + std::to_string(i) + "]";
    if (!std::isfinite(events[i].t) || events[i].t < 0.0) invalid(f + ".t_s", "must be finite and >= 0");
    if (i > 0 && events[i].t < events[i - 1].t) invalid(f + ".t_s", "timestamps must not decrease");
    if (auto* c = std::get_if<ConfigEvent>(&events[i].action)) {
      try {
        c->config.validate();
      } catch (const Error& e) {
        invalid(f, e.what());
      }
    }
  }
}

Scenario scenario_from_json(const json& j) {
  if (!j.is_object()) invalid("<root>", "expected an object");
  if (!j.contains("version") || !j["version"].is_number_integer() ||
      j["version"].get<int>() != kScenarioVersion) {
    invalid("version", "expected " + std::to_string(kScenarioVersion));
  }
  Scenario s;
  s.name = j.value("name", "");
  s.robot = robot_of(j.value("robot", json("ur5e")), s.robot_name);

  if (j.contains("rates")) {
    const json& r = j["rates"];
    if (!r.is_object()) invalid("rates", "expected an object");
    if (r.contains("input_hz")) s.rates.input_hz = number(r["input_hz"], "rates.input_hz");
    if (r.contains("plan_hz")) s.rates.plan_hz = number(r["plan_hz"], "rates.plan_hz");
    if (r.contains("sim_hz")) s.rates.sim_hz = number(r["sim_hz"], "rates.sim_hz");
  }
  if (!(s.rates.plan_hz > 0.0)) invalid("rates.plan_hz", "must be positive");
  if (!(s.rates.sim_hz > 0.0)) invalid("rates.sim_hz", "must be positive");
  s.ocp = ocp_of(j.value("ocp", json()), s.rates);

  const json rt = j.value("retarget", json::object());
  if (!rt.is_object()) invalid("retarget", "expected an object");
  s.retarget = retarget_of(rt, "retarget", s.retarget);
  if (rt.contains("filter_coefficient")) {
    const json& f = rt["filter_coefficient"];
    if (f.is_null()) s.filter_coefficient.reset();
    else s.filter_coefficient = number(f, "retarget.filter_coefficient");
  }

  if (!j.contains("duration_s")) invalid("duration_s", "required");
  s.duration = number(j["duration_s"], "duration_s");
  if (j.contains("initial_q_rad")) s.initial_q = vector_of<kNumJoints>(j["initial_q_rad"], "initial_q_rad");

  if (j.contains("input_stream")) {
    const json& stream = j["input_stream"];
    if (!stream.is_array()) invalid("input_stream", "expected an array");
    s.input_stream.reserve(stream.size());
    for (size_t i = 0; i < stream.size(); ++i) {
      const std::string f = "input_stream[" + std::to_string(i) + "]";
      const json& e = stream[i];
      if (!e.is_object()) invalid(f, "expected an object");
      retarget::DeviceSample d;
      d.t = number(e.value("t_s", json()), f + ".t_s");
      d.pose.pos = vector_of<3>(e.value("pos_m", json()), f + ".pos_m");
      d.pose.rot = rotation_of(e.value("quat_wxyz", json::array({1, 0, 0, 0})), f + ".quat_wxyz");
      const json c = e.value("clutch", json(false));
      if (!c.is_boolean()) invalid(f + ".clutch", "expected a boolean");
      d.clutch = c.get<bool>();
      s.input_stream.push_back(d);
    }
  }
  if (j.contains("events")) {
    const json& events = j["events"];
    if (!events.is_array()) invalid("events", "expected an array");
    retarget::RetargetConfig cfg = s.retarget;
    for (size_t i = 0; i < events.size(); ++i) {
      const std::string f = "events[" + std::to_string(i) + "]";
      const json& e = events[i];
      if (!e.is_object()) invalid(f, "expected an object");
      ScenarioEvent ev;
      ev.t = number(e.value("t_s", json()), f + ".t_s");
      const std::string type = e.value("type", "");
      if (type == "calibrate") {
        const Rotation r_tI = rotation_of(e.value("r_tI_wxyz", json()), f + ".r_tI_wxyz");
        const Rotation r_tM = rotation_of(e.value("r_tM_wxyz", json()), f + ".r_tM_wxyz");
        ev.action = CalibrateEvent{r_tI, r_tM};
      } else if (type == "set_mode") {
        cfg = retarget_of(e, f, cfg);
        ev.action = ConfigEvent{cfg};
      } else {
        invalid(f + ".type", "expected 'calibrate' or 'set_mode'");
      }
      s.events.push_back(ev);
    }
  }
  s.validate();
  return s;
}

json scenario_to_json(const Scenario& s) {
  json j;
  j["version"] = kScenarioVersion;
  j["name"] = s.name;
  json robot;
  robot["name"] = s.robot_name;
  json dh = json::array();
  for (const DHRow& r : s.robot.dh) {
    dh.push_back({{"a_m", r.a}, {"d_m", r.d}, {"alpha_rad", r.alpha}, {"theta_offset_rad", r.theta_offset}});
  }
  robot["dh"] = dh;
  robot["q_min_rad"] = array_json(s.robot.q_limits.lower);
  robot["q_max_rad"] = array_json(s.robot.q_limits.upper);
  robot["qd_min_rad_s"] = array_json(s.robot.qd_limits.lower);
  robot["qd_max_rad_s"] = array_json(s.robot.qd_limits.upper);
  robot["u_min_rad_s2"] = array_json(s.robot.u_limits.lower);
  robot["u_max_rad_s2"] = array_json(s.robot.u_limits.upper);
  robot["base"] = {{"pos_m", vec_json(s.robot.base.pos)}, {"quat_wxyz", quat_json(s.robot.base.rot)}};
  j["robot"] = robot;
  j["ocp"] = {{"horizon", s.ocp.horizon},
              {"dt_s", s.ocp.dt},
              {"w_position", array_json(s.ocp.w_position)},
              {"w_orientation", array_json(s.ocp.w_orientation)},
              {"w_velocity", array_json(s.ocp.w_velocity)},
              {"w_acceleration", array_json(s.ocp.w_acceleration)},
              {"max_iterations", s.ocp.max_iterations},
              {"stationarity_tol", s.ocp.stationarity_tol},
              {"constraint_tol", s.ocp.constraint_tol},
              {"path_samples", s.ocp.path_samples}};
  json rt = retarget_json(s.retarget);
  rt["filter_coefficient"] = s.filter_coefficient ? json(*s.filter_coefficient) : json(nullptr);
  j["retarget"] = rt;
  j["rates"] = {{"input_hz", s.rates.input_hz}, {"plan_hz", s.rates.plan_hz}, {"sim_hz", s.rates.sim_hz}};
  j["duration_s"] = s.duration;
  j["initial_q_rad"] = array_json(s.initial_q);
  json stream = json::array();
  for (const auto& d : s.input_stream) {
    stream.push_back({{"t_s", d.t}, {"pos_m", vec_json(d.pose.pos)}, {"quat_wxyz", quat_json(d.pose.rot)},
                      {"clutch", d.clutch}});
  }
  j["input_stream"] = stream;
  json events = json::array();
  for (const ScenarioEvent& e : s.events) {
    json ev;
    if (auto* cal = std::get_if<CalibrateEvent>(&e.action)) {
      ev = {{"type", "calibrate"}, {"r_tI_wxyz", quat_json(cal->r_tI)}, {"r_tM_wxyz", quat_json(cal->r_tM)}};
    } else {
      ev = retarget_json(std::get<ConfigEvent>(e.action).config);
      ev["type"] = "set_mode";
    }
    ev["t_s"] = e.t;
    events.push_back(ev);
  }
  j["events"] = events;
  return j;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kScenarioInvalid, "cannot open scenario file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kScenarioInvalid, "scenario '" + path + "' is not valid JSON: " + e.what());
  }
  return scenario_from_json(j);
}

std::vector<std::string> log_columns() {
  std::vector<std::string> cols{"t_s"};
  for (int i = 0; i < kNumJoints; ++i) cols.push_back("q" + std::to_string(i) + "_rad");
  for (int i = 0; i < kNumJoints; ++i) cols.push_back("qd" + std::to_string(i) + "_rad_s");
  for (const char* prefix : {"ee", "des"}) {
    for (const char* c : {"_px_m", "_py_m", "_pz_m", "_qw", "_qx", "_qy", "_qz"}) {
      cols.push_back(std::string(prefix) + c);
    }
  }
  for (const char* c : {"ref_px_m", "ref_py_m", "ref_pz_m", "clutch", "solve_ms", "cost", "converged"}) {
    cols.emplace_back(c);
  }
  return cols;
}

void write_csv_header(std::ostream& os) {
  const auto cols = log_columns();
  for (size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
  os << '\n';
}

namespace {

// Locale-independent %.9g formatting.
void put(std::ostream& os, double v, bool first = false) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  if (!first) os << ',';
  os << buf;
}

void put_pose(std::ostream& os, const Transform& t) {
  const auto q = quat_from_rotation(t.rot).wxyz();
  for (int i = 0; i < 3; ++i) put(os, t.pos[i]);
  for (double c : q) put(os, c);
}

json pose_json(const Transform& t) {
  return {{"pos_m", vec_json(t.pos)}, {"quat_wxyz", quat_json(t.rot)}};
}

}  // namespace

void write_csv_row(std::ostream& os, const LogRecord& r) {
  put(os, r.t, true);
  for (int i = 0; i < kNumJoints; ++i) put(os, r.q[i]);
  for (int i = 0; i < kNumJoints; ++i) put(os, r.qd[i]);
  put_pose(os, r.ee);
  put_pose(os, r.desired);
  for (int i = 0; i < 3; ++i) put(os, r.reference_start[i]);
  os << ',' << (r.clutch ? 1 : 0);
  put(os, r.solve_ms);
  put(os, r.cost);
  os << ',' << (r.converged ? 1 : 0) << '\n';
}

void write_csv(std::ostream& os, const std::vector<LogRecord>& records) {
  write_csv_header(os);
  for (const auto& r : records) write_csv_row(os, r);
}

json log_record_to_json(const LogRecord& r) {
  return {{"t_s", r.t},
          {"q_rad", array_json(r.q)},
          {"qd_rad_s", array_json(r.qd)},
          {"ee", pose_json(r.ee)},
          {"desired", pose_json(r.desired)},
          {"ref_start_m", vec_json(r.reference_start)},
          {"clutch", r.clutch},
          {"solve_ms", r.solve_ms},
          {"cost", r.cost},
          {"converged", r.converged}};
}

JointState step_plant(const JointState& x, const JointVector& u, double dt) {
  return planner::propagate(x, u, dt);
}

Simulation::Simulation(Scenario scenario)
    : scenario_((scenario.validate(), std::move(scenario))),
      mpc_(scenario_.ocp, scenario_.robot) {
  reset();
}

void Simulation::reset() {
  tick_ = 0;
  pending_.clear();
  last_input_t_.reset();
  last_push_t_.reset();
  plant_ = JointState{scenario_.initial_q, JointVector::Zero()};
  const Transform ee = forward_kinematics(scenario_.robot, plant_.q);
  retarget_ = retarget::initial_state(scenario_.retarget, ee);
  if (scenario_.filter_coefficient) filter_.emplace(*scenario_.filter_coefficient);
  else filter_.reset();
  device_pose_.reset();
  absolute_calibrated_ = false;
  desired_ = {0.0, retarget::desired_pose(retarget_)};
  prev_desired_ = desired_;
  mpc_.reset();
  plan_.reset();
  plan_t0_ = 0.0;
  reference_start_ = desired_.pose.pos;
  last_stats_ = {};
  last_cost_ = 0.0;
}

void Simulation::push_input(const retarget::DeviceSample& sample) {
  if ((last_input_t_ && !(sample.t > *last_input_t_)) || (last_push_t_ && sample.t < *last_push_t_)) {
    throw Error(ErrorCode::kInvalidArgument, "input samples must have increasing timestamps");
  }
  last_input_t_ = sample.t;
  last_push_t_ = sample.t;
  pending_.emplace_back(sample);
}

void Simulation::push_event(const ScenarioEvent& event) {
  if (!std::isfinite(event.t) || (last_push_t_ && event.t < *last_push_t_)) {
    throw Error(ErrorCode::kInvalidArgument, "events must not go back in time");
  }
  last_push_t_ = event.t;
  pending_.emplace_back(event);
}

void Simulation::calibrate(const Rotation& R_tI, const Rotation& R_tM) {
  retarget_ = retarget::calibrate(retarget_, R_tI, R_tM);
  scenario_.retarget = retarget_.config;
  if (retarget_.config.mode == retarget::Mode::kAbsolute && device_pose_) {
    retarget_ = retarget::calibrate_absolute(retarget_, *device_pose_, desired_.pose);
    desired_.pose = retarget::desired_pose(retarget_);
    absolute_calibrated_ = true;
  }
}

void Simulation::set_retarget_config(const retarget::RetargetConfig& cfg) {
  retarget_ = retarget::with_config(retarget_, cfg);
  scenario_.retarget = cfg;
  absolute_calibrated_ = true;
}

void Simulation::ingest(const retarget::DeviceSample& sample) {
  const Transform pose = filter_ ? filter_->filter(sample.t, sample.pose) : sample.pose;
  device_pose_ = pose;
  if (retarget_.config.mode == retarget::Mode::kAbsolute && !absolute_calibrated_) {
    retarget_ = retarget::calibrate_absolute(retarget_, pose, desired_.pose);
    absolute_calibrated_ = true;
  }
  retarget_ = retarget::ingest(retarget_, pose, sample.clutch);
  prev_desired_ = desired_;
  desired_ = {sample.t, retarget::desired_pose(retarget_)};
}

JointVector Simulation::active_control() const {
  const RobotModel& m = scenario_.robot;
  const double dt_sim = 1.0 / scenario_.rates.sim_hz;
  if (plan_) {
    const double since = time() - plan_t0_;
    const auto seg = static_cast<size_t>(std::floor(since / scenario_.ocp.dt + 1e-9));
    if (seg < plan_->controls.size()) return plan_->controls[seg];
  }
  // Past the end of the last accepted plan: brake.
  JointVector u = -plant_.qd / dt_sim;
  return u.cwiseMax(m.u_limits.lower).cwiseMin(m.u_limits.upper);
}

LogRecord Simulation::tick() {
  const double t = time();
  while (!pending_.empty()) {
    const double due = std::visit([](const auto& p) { return p.t; }, pending_.front());
    if (due > t + 1e-12) break;
    if (auto* sample = std::get_if<retarget::DeviceSample>(&pending_.front())) {
      ingest(*sample);
    } else {
      const ScenarioEvent& e = std::get<ScenarioEvent>(pending_.front());
      if (auto* cal = std::get_if<CalibrateEvent>(&e.action)) calibrate(cal->r_tI, cal->r_tM);
      else set_retarget_config(std::get<ConfigEvent>(e.action).config);
    }
    pending_.pop_front();
  }

  if (tick_ % scenario_.ticks_per_plan() == 0) {
    try {
      planner::MpcResult r = mpc_.step(plant_, prev_desired_, desired_);
      reference_start_ = r.reference.positions.front();
      last_stats_ = r.plan.stats;
      last_cost_ = r.plan.cost;
      if (r.accepted) {
        plan_ = std::move(r.plan);
        plan_t0_ = t;
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kInfeasibleProblem) throw;
      last_stats_ = {};
    }
  }

  LogRecord rec;
  rec.t = t;
  rec.q = plant_.q;
  rec.qd = plant_.qd;
  rec.ee = forward_kinematics(scenario_.robot, plant_.q);
  rec.desired = desired_.pose;
  rec.reference_start = reference_start_;
  rec.clutch = retarget_.engaged;
  rec.solve_ms = last_stats_.solve_ms;
  rec.cost = last_cost_;
  rec.converged = last_stats_.converged;

  plant_ = step_plant(plant_, active_control(), 1.0 / scenario_.rates.sim_hz);
  ++tick_;
  return rec;
}

std::vector<LogRecord> run_scenario(const Scenario& s) {
  Simulation sim(s);
  size_t e = 0;
  for (const auto& sample : s.input_stream) {
    for (; e < s.events.size() && s.events[e].t <= sample.t; ++e) sim.push_event(s.events[e]);
    sim.push_input(sample);
  }
  for (; e < s.events.size(); ++e) sim.push_event(s.events[e]);
  std::vector<LogRecord> log;
  const int n = s.ticks();
  log.reserve(n);
  for (int i = 0; i < n; ++i) log.push_back(sim.tick());
  return log;
}

}  // namespace teleop::sim
