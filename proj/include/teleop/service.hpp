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

// Live session host. Network threads hand raw message text to a Session,
// which stamps it with session time on receipt; the loop owner calls pump()
// to apply messages, advance the closed loop to the current time and queue
// outbound frames. Session time stops while paused.

#include "json.hpp"

#include <atomic>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "teleop/sim.hpp"

namespace teleop::service {

inline constexpr int kProtocolVersion = 1;

class Clock {
 public:
  virtual ~Clock() = default;
  // Monotonic seconds.
  virtual double now() const = 0;
};

class SteadyClock final : public Clock {
 public:
  double now() const override;
};

class ManualClock final : public Clock {
 public:
  double now() const override { return t_.load(); }
  void set(double t) { t_.store(t); }
  void advance(double dt) { t_.store(t_.load() + dt); }

 private:
  std::atomic<double> t_{0.0};
};

struct SessionOptions {
  double broadcast_hz = 30.0;
  // Control frames (hello, error) a client may have outstanding.
  size_t max_backlog = 64;
  // Consecutive state frames replaced before the client was drained.
  int max_stale_frames = 90;
  // Planner stats and log rows are kept for the current segment.
  bool keep_log = true;
};

using ClientId = int;

class Session {
 public:
  Session(sim::Scenario base, std::shared_ptr<const Clock> clock, SessionOptions options = {});

  // Thread-safe ingress and egress.
  ClientId connect();
  void disconnect(ClientId id);
  void receive(ClientId id, std::string text);
  std::vector<std::string> drain(ClientId id);
  bool dropped(ClientId id) const;
  size_t client_count() const;

  // Loop owner only.
  void pump();
  nlohmann::json state_frame(ClientId viewer) const;
  // The current segment (since start or the last reset) as a scenario whose
  // run_scenario output reproduces log(). Empty before the first tick.
  std::optional<sim::Scenario> recording() const;
  const std::vector<sim::LogRecord>& log() const { return log_; }
  double session_time() const { return now_; }
  bool paused() const { return paused_; }
  const sim::Simulation& simulation() const { return *sim_; }

 private:
  struct Inbound {
    ClientId client;
    double wall;
    std::string text;
  };
  struct Outbox {
    std::deque<std::string> control;
    std::optional<std::string> state;
    int stale = 0;
    bool dropped = false;
  };

  void start_segment();
  void advance_clock(double wall);
  void handle(const Inbound& msg);
  void send(ClientId id, std::string frame);
  void send_error(ClientId id, const std::string& code, const std::string& detail);
  double next_stamp();
  bool is_controller(ClientId id) const;
  void broadcast();

  sim::Scenario base_;
  std::shared_ptr<const Clock> clock_;
  SessionOptions options_;

  mutable std::mutex mu_;
  std::deque<Inbound> inbox_;
  std::map<ClientId, Outbox> clients_;
  ClientId next_id_ = 1;

  // Loop-owned.
  std::unique_ptr<sim::Simulation> sim_;
  sim::Scenario segment_;
  retarget::RetargetConfig config_;
  std::optional<Transform> device_;
  // Client clocks are echoed back in state frames, never used for timing.
  std::optional<double> client_t_;
  bool clutch_ = false;
  bool paused_ = false;
  double now_ = 0.0;
  double last_wall_ = 0.0;
  double last_stamp_ = -1.0;
  double next_broadcast_ = 0.0;
  std::vector<sim::LogRecord> log_;
};

class Server {
 public:
  // Port 0 picks a free port; see port().
  Server(Session& session, unsigned short port, const std::string& address = "127.0.0.1");
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  unsigned short port() const;
  // Serves until stop() or, when requested, SIGINT/SIGTERM.
  void run(bool stop_on_signals = false);
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace teleop::service
