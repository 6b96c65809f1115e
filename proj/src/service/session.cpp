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

#include <algorithm>
#include <chrono>
#include <cmath>
#include <utility>

#include "teleop/error.hpp"
#include "teleop/service.hpp"

namespace teleop::service {

using nlohmann::json;

namespace {

constexpr double kStampStep = 1e-6;
constexpr double kQuatNormTol = 1e-3;

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

json joints_json(const JointVector& v) {
  json a = json::array();
  for (int i = 0; i < kNumJoints; ++i) a.push_back(v[i]);
  return a;
}

json pose_json(const Transform& t) {
  const auto q = quat_from_rotation(t.rot).wxyz();
  return {{"pos", vec_json(t.pos)}, {"quat", json::array({q[0], q[1], q[2], q[3]})}};
}

bool read_vec3(const json& j, const char* key, Vec3& out) {
  if (!j.contains(key) || !j[key].is_array() || j[key].size() != 3) return false;
  for (int i = 0; i < 3; ++i) {
    const json& v = j[key][i];
    if (!v.is_number() || !std::isfinite(v.get<double>())) return false;
    out[i] = v.get<double>();
  }
  return true;
}

// Empty on success, else the error code.
std::string read_rotation(const json& j, const char* key, Rotation& out) {
  if (!j.contains(key) || !j[key].is_array() || j[key].size() != 4) return "malformed";
  double q[4];
  for (int i = 0; i < 4; ++i) {
    const json& v = j[key][i];
    if (!v.is_number() || !std::isfinite(v.get<double>())) return "malformed";
    q[i] = v.get<double>();
  }
  const double n = std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]);
  if (std::abs(n - 1.0) > kQuatNormTol) return "bad_quaternion";
  out = rotation_from_quat(UnitQuat::from_wxyz(q[0], q[1], q[2], q[3]));
  return {};
}

}  // namespace

double SteadyClock::now() const {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

Session::Session(sim::Scenario base, std::shared_ptr<const Clock> clock, SessionOptions options)
    : base_(std::move(base)), clock_(std::move(clock)), options_(options) {
  base_.input_stream.clear();
  base_.events.clear();
  if (!(options_.broadcast_hz > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "session: broadcast_hz must be positive");
  }
  config_ = base_.retarget;
  start_segment();
  next_broadcast_ = clock_->now();
}

void Session::start_segment() {
  segment_ = base_;
  segment_.retarget = config_;
  if (segment_.duration <= 0.0) segment_.duration = 1.0;
  sim_ = std::make_unique<sim::Simulation>(segment_);
  now_ = 0.0;
  last_wall_ = clock_->now();
  last_stamp_ = -1.0;
  device_.reset();
  clutch_ = false;
  client_t_.reset();
  log_.clear();
}

ClientId Session::connect() {
  std::lock_guard lock(mu_);
  const ClientId id = next_id_++;
  const bool controller = clients_.empty();
  Outbox& box = clients_[id];
  box.control.push_back(json{{"type", "hello"},
                             {"version", kProtocolVersion},
                             {"robot", base_.robot_name},
                             {"H", base_.ocp.horizon},
                             {"client", id},
                             {"controller", controller}}
                            .dump());
  return id;
}

void Session::disconnect(ClientId id) {
  std::lock_guard lock(mu_);
  clients_.erase(id);
}

void Session::receive(ClientId id, std::string text) {
  const double wall = clock_->now();
  std::lock_guard lock(mu_);
  inbox_.push_back({id, wall, std::move(text)});
}

std::vector<std::string> Session::drain(ClientId id) {
  std::lock_guard lock(mu_);
  std::vector<std::string> out;
  auto it = clients_.find(id);
  if (it == clients_.end()) return out;
  Outbox& box = it->second;
  out.assign(std::make_move_iterator(box.control.begin()), std::make_move_iterator(box.control.end()));
  box.control.clear();
  if (box.state) out.push_back(std::move(*box.state));
  box.state.reset();
  box.stale = 0;
  return out;
}

bool Session::dropped(ClientId id) const {
  std::lock_guard lock(mu_);
  auto it = clients_.find(id);
  return it == clients_.end() || it->second.dropped;
}

size_t Session::client_count() const {
  std::lock_guard lock(mu_);
  return clients_.size();
}

bool Session::is_controller(ClientId id) const {
  std::lock_guard lock(mu_);
  for (const auto& [cid, box] : clients_) {
    if (!box.dropped) return cid == id;
  }
  return false;
}

void Session::send(ClientId id, std::string frame) {
  std::lock_guard lock(mu_);
  auto it = clients_.find(id);
  if (it == clients_.end() || it->second.dropped) return;
  it->second.control.push_back(std::move(frame));
  if (it->second.control.size() > options_.max_backlog) it->second.dropped = true;
}

void Session::send_error(ClientId id, const std::string& code, const std::string& detail) {
  send(id, json{{"type", "error"}, {"code", code}, {"detail", detail}}.dump());
}

void Session::advance_clock(double wall) {
  if (wall <= last_wall_) return;
  if (!paused_) now_ += wall - last_wall_;
  last_wall_ = wall;
}

double Session::next_stamp() {
  last_stamp_ = std::max(now_, last_stamp_ + kStampStep);
  return last_stamp_;
}

void Session::pump() {
  std::deque<Inbound> batch;
  {
    std::lock_guard lock(mu_);
    batch.swap(inbox_);
  }
  for (const Inbound& m : batch) {
    advance_clock(m.wall);
    handle(m);
  }
  const double wall = clock_->now();
  advance_clock(wall);
  try {
    while (sim_->time() < now_) {
      sim::LogRecord rec = sim_->tick();
      if (options_.keep_log) log_.push_back(std::move(rec));
    }
  } catch (const Error& e) {
    // The loop cannot continue from here (e.g. the start state left the
    // bounds); report and restart the segment.
    std::vector<ClientId> ids;
    {
      std::lock_guard lock(mu_);
      for (const auto& entry : clients_) ids.push_back(entry.first);
    }
    for (ClientId id : ids) send_error(id, std::string(to_string(e.code())), e.what());
    start_segment();
  }
  if (wall >= next_broadcast_) {
    broadcast();
    next_broadcast_ += 1.0 / options_.broadcast_hz;
    if (next_broadcast_ <= wall) next_broadcast_ = wall + 1.0 / options_.broadcast_hz;
  }
}

void Session::handle(const Inbound& msg) {
  json j = json::parse(msg.text, nullptr, false);
  if (j.is_discarded() || !j.is_object() || !j.contains("type") || !j["type"].is_string()) {
    send_error(msg.client, "malformed", "expected a JSON object with a string 'type'");
    return;
  }
  const std::string type = j["type"].get<std::string>();
  static const char* const kTypes[] = {"input_pose", "clutch", "calibrate", "set_mode", "reset", "pause"};
  if (std::none_of(std::begin(kTypes), std::end(kTypes), [&](const char* t) { return type == t; })) {
    send_error(msg.client, "unknown_type", "unknown message type '" + type + "'");
    return;
  }
  if (!is_controller(msg.client)) {
    send_error(msg.client, "not_controller", "another client holds control");
    return;
  }
  if (j.contains("t") && j["t"].is_number()) client_t_ = j["t"].get<double>();

  if (type == "input_pose") {
    Transform pose;
    if (!read_vec3(j, "pos", pose.pos)) {
      send_error(msg.client, "malformed", "input_pose.pos must be 3 finite numbers");
      return;
    }
    if (std::string code = read_rotation(j, "quat", pose.rot); !code.empty()) {
      send_error(msg.client, code, "input_pose.quat must be a unit quaternion [w,x,y,z]");
      return;
    }
    if (paused_) return;
    device_ = pose;
    const retarget::DeviceSample sample{next_stamp(), pose, clutch_};
    sim_->push_input(sample);
    segment_.input_stream.push_back(sample);
  } else if (type == "clutch") {
    if (!j.contains("engaged") || !j["engaged"].is_boolean()) {
      send_error(msg.client, "malformed", "clutch.engaged must be a boolean");
      return;
    }
    const bool engaged = j["engaged"].get<bool>();
    if (paused_) {
      send_error(msg.client, "paused", "clutch changes are rejected while paused");
      return;
    }
    if (engaged == clutch_) {
      send_error(msg.client, engaged ? "already_engaged" : "not_engaged",
                 engaged ? "clutch is already engaged" : "clutch is not engaged");
      return;
    }
    if (!device_) {
      send_error(msg.client, "no_pose", "send an input_pose before using the clutch");
      return;
    }
    clutch_ = engaged;
    const retarget::DeviceSample sample{next_stamp(), *device_, clutch_};
    sim_->push_input(sample);
    segment_.input_stream.push_back(sample);
  } else if (type == "calibrate") {
    Rotation r_tI, r_tM;
    for (auto [key, target] : {std::pair{"r_tI", &r_tI}, std::pair{"r_tM", &r_tM}}) {
      if (std::string code = read_rotation(j, key, *target); !code.empty()) {
        send_error(msg.client, code, std::string("calibrate.") + key + " must be a unit quaternion");
        return;
      }
    }
    auto* in = std::get_if<retarget::CalibratedFixed>(&config_.input_translation);
    auto* robot = std::get_if<retarget::CalibratedFixed>(&config_.robot_translation);
    if (in == nullptr || robot == nullptr) {
      send_error(msg.client, "strategy_mismatch",
                 "calibrate requires calibrated_fixed translation strategies");
      return;
    }
    in->rotation = r_tI;
    robot->rotation = r_tM;
    const sim::ScenarioEvent ev{next_stamp(), sim::CalibrateEvent{r_tI, r_tM}};
    sim_->push_event(ev);
    segment_.events.push_back(ev);
  } else if (type == "set_mode") {
    retarget::RetargetConfig cfg = config_;
    if (j.contains("mode")) {
      auto mode = j["mode"].is_string() ? retarget::mode_from_name(j["mode"].get<std::string>())
                                        : std::nullopt;
      if (!mode) {
        send_error(msg.client, "bad_mode", "mode must be 'relative' or 'absolute'");
        return;
      }
      cfg.mode = *mode;
    }
    const std::pair<const char*, retarget::OrientationStrategy*> slots[] = {
        {"input_translation", &cfg.input_translation},
        {"input_rotation", &cfg.input_rotation},
        {"robot_translation", &cfg.robot_translation},
        {"robot_rotation", &cfg.robot_rotation}};
    for (auto [key, slot] : slots) {
      if (!j.contains(key)) continue;
      auto s = j[key].is_string() ? retarget::strategy_from_name(j[key].get<std::string>())
                                  : std::nullopt;
      if (!s) {
        send_error(msg.client, "bad_strategy", std::string("unknown strategy for ") + key);
        return;
      }
      // Keep an existing calibration when the strategy does not change.
      if (!(std::holds_alternative<retarget::CalibratedFixed>(*s) &&
            std::holds_alternative<retarget::CalibratedFixed>(*slot))) {
        *slot = *s;
      }
    }
    try {
      cfg.validate();
    } catch (const Error& e) {
      send_error(msg.client, std::string(to_string(e.code())), e.what());
      return;
    }
    config_ = cfg;
    const sim::ScenarioEvent ev{next_stamp(), sim::ConfigEvent{cfg}};
    sim_->push_event(ev);
    segment_.events.push_back(ev);
  } else if (type == "reset") {
    start_segment();
  } else if (type == "pause") {
    if (!j.contains("on") || !j["on"].is_boolean()) {
      send_error(msg.client, "malformed", "pause.on must be a boolean");
      return;
    }
    paused_ = j["on"].get<bool>();
  }
}

json Session::state_frame(ClientId viewer) const {
  const sim::Simulation& s = *sim_;
  const RobotModel& model = s.scenario().robot;
  const sim::JointState& x = s.plant();
  const retarget::RetargetState& rs = s.retarget_state();
  const retarget::RetargetConfig& cfg = rs.config;

  json links = json::array();
  for (const Transform& f : link_frames(model, x.q)) links.push_back(pose_json(f));

  json path = json::array();
  const Transform ee = forward_kinematics(model, x.q);
  const int H = s.scenario().ocp.horizon;
  if (s.active_plan()) {
    for (const sim::JointState& node : s.active_plan()->states) {
      path.push_back(vec_json(forward_kinematics(model, node.q).pos));
    }
  } else {
    for (int k = 0; k <= H; ++k) path.push_back(vec_json(ee.pos));
  }
  const planner::SolveStats& st = s.last_stats();

  bool controller = false;
  size_t clients = 0;
  {
    std::lock_guard lock(mu_);
    clients = clients_.size();
    for (const auto& [cid, box] : clients_) {
      if (!box.dropped) {
        controller = cid == viewer;
        break;
      }
    }
  }

  return {{"type", "state"},
          {"t", s.time()},
          {"paused", paused_},
          {"controller", controller},
          {"clients", clients},
          {"q", joints_json(x.q)},
          {"qd", joints_json(x.qd)},
          {"ee", pose_json(ee)},
          {"desired", pose_json(s.desired())},
          {"device", device_ ? pose_json(*device_) : json(nullptr)},
          {"client_t", client_t_ ? json(*client_t_) : json(nullptr)},
          {"clutch", rs.engaged},
          {"mode", retarget::mode_name(cfg.mode)},
          {"strategies",
           {{"input_translation", retarget::strategy_name(cfg.input_translation)},
            {"input_rotation", retarget::strategy_name(cfg.input_rotation)},
            {"robot_translation", retarget::strategy_name(cfg.robot_translation)},
            {"robot_rotation", retarget::strategy_name(cfg.robot_rotation)}}},
          {"frames",
           {{"t_I", pose_json(rs.T_0I_tI)},
            {"r_I", pose_json(rs.T_0I_rI)},
            {"t_M", pose_json(rs.T_0M_tM)},
            {"r_M", pose_json(rs.T_0M_rM)}}},
          {"links", links},
          {"plan",
           {{"path", path},
            {"solve_ms", st.solve_ms},
            {"iterations", st.iterations},
            {"converged", st.converged},
            {"stationarity", st.stationarity}}}};
}

void Session::broadcast() {
  std::vector<ClientId> ids;
  {
    std::lock_guard lock(mu_);
    for (const auto& [id, box] : clients_) {
      if (!box.dropped) ids.push_back(id);
    }
  }
  for (ClientId id : ids) {
    std::string frame = state_frame(id).dump();
    std::lock_guard lock(mu_);
    auto it = clients_.find(id);
    if (it == clients_.end()) continue;
    Outbox& box = it->second;
    if (box.state && ++box.stale > options_.max_stale_frames) box.dropped = true;
    box.state = std::move(frame);
  }
}

std::optional<sim::Scenario> Session::recording() const {
  if (sim_->tick_index() == 0) return std::nullopt;
  sim::Scenario r = segment_;
  r.name = base_.name.empty() ? "session" : base_.name + "-session";
  r.duration = static_cast<double>(sim_->tick_index()) / r.rates.sim_hz;
  return r;
}

}  // namespace teleop::service
