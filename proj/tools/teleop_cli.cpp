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

#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "teleop/error.hpp"
#include "teleop/oracles/suites.hpp"
#include "teleop/service.hpp"
#include "teleop/sim.hpp"

namespace {

constexpr int kExitInvalidScenario = 2;
constexpr int kExitSuiteFailure = 3;

using namespace teleop;

int cmd_run(const std::string& scenario_path, const std::string& out, const std::string& json_log) {
  const sim::Scenario s = sim::load_scenario(scenario_path);
  const std::vector<sim::LogRecord> log = sim::run_scenario(s);
  std::ofstream csv(out);
  if (!csv) throw std::runtime_error("cannot write '" + out + "'");
  sim::write_csv(csv, log);
  if (!json_log.empty()) {
    std::ofstream jl(json_log);
    if (!jl) throw std::runtime_error("cannot write '" + json_log + "'");
    for (const auto& r : log) jl << sim::log_record_to_json(r).dump() << '\n';
  }
  std::cerr << s.name << ": " << log.size() << " records -> " << out << '\n';
  return 0;
}

sim::Scenario default_session_scenario() {
  nlohmann::json j = {{"version", sim::kScenarioVersion},
                      {"name", "live"},
                      {"robot", "ur5e"},
                      {"duration_s", 1.0},
                      {"initial_q_rad", {0.0, -1.5707963267948966, 1.5707963267948966,
                                         -1.5707963267948966, -1.5707963267948966, 0.0}}};
  return sim::scenario_from_json(j);
}

int cmd_serve(const std::string& scenario_path, unsigned short port, const std::string& address,
              const std::string& record, const std::string& log_path) {
  const sim::Scenario s = scenario_path.empty() ? default_session_scenario()
                                                : sim::load_scenario(scenario_path);
  service::Session session(s, std::make_shared<service::SteadyClock>());
  service::Server server(session, port, address);
  std::cerr << "serving " << s.robot_name << " on ws://" << address << ':' << server.port() << '\n';
  server.run(true);
  if (!record.empty()) {
    if (auto r = session.recording()) {
      std::ofstream(record) << sim::scenario_to_json(*r).dump(1) << '\n';
      std::cerr << "recorded session -> " << record << '\n';
    }
  }
  if (!log_path.empty()) {
    std::ofstream csv(log_path);
    sim::write_csv(csv, session.log());
  }
  return 0;
}

int cmd_check(const std::string& suite, const std::string& robot) {
  const RobotModel model = preset(robot);
  std::vector<std::string> suites = suite == "all" ? oracles::suite_names()
                                                   : std::vector<std::string>{suite};
  bool ok = true;
  for (const std::string& name : suites) {
    const oracles::SuiteResult r = oracles::run_suite(name, model);
    for (const oracles::Check& c : r.checks) {
      std::cout << (c.passed ? "PASS " : "FAIL ") << r.suite << '/' << c.name << ": " << c.detail << '\n';
    }
    ok = ok && r.passed();
  }
  return ok ? 0 : kExitSuiteFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Teleoperation retargeting and MPC toolkit"};
  app.require_subcommand(1);

  std::string scenario, out, json_log, record, log_path, suite, address = "127.0.0.1", robot = "ur5e";
  unsigned short port = 8765;

  CLI::App* run = app.add_subcommand("run", "Run a scenario and write the CSV log");
  run->add_option("--scenario", scenario, "Scenario JSON file")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out, "CSV log output")->required();
  run->add_option("--json-log", json_log, "Optional JSON-lines log output");

  CLI::App* serve = app.add_subcommand("serve", "Host a live websocket session");
  serve->add_option("--scenario", scenario, "Scenario JSON supplying robot and configs")
      ->check(CLI::ExistingFile);
  serve->add_option("--port", port, "TCP port (0 picks a free one)");
  serve->add_option("--address", address, "Listen address");
  serve->add_option("--record", record, "Write the session as a scenario on exit");
  serve->add_option("--log", log_path, "Write the session CSV log on exit");

  CLI::App* check = app.add_subcommand("check", "Run an oracle suite");
  check->add_option("--suite", suite, "Suite name")
      ->required()
      ->check(CLI::IsMember({"fk", "gradients", "retarget", "all"}));
  check->add_option("--robot", robot, "Robot preset")->check(CLI::IsMember(preset_names()));

  app.add_subcommand("presets", "List built-in robot models");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(scenario, out, json_log);
    if (*serve) return cmd_serve(scenario, port, address, record, log_path);
    if (*check) return cmd_check(suite, robot);
    for (const std::string& name : preset_names()) std::cout << name << '\n';
    return 0;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.code() == ErrorCode::kScenarioInvalid ? kExitInvalidScenario : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
