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

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include <sys/wait.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "teleop/sim.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string cli() { return TELEOP_CLI_PATH; }

std::string scenario(const std::string& name) {
  return std::string(TELEOP_SCENARIO_DIR) + "/" + name + ".json";
}

int run(const std::string& args, const std::string& stdout_path = "/dev/null") {
  const int status = std::system((cli() + " " + args + " >" + stdout_path + " 2>/dev/null").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "teleop_cli_test";
  fs::create_directories(dir);
  return dir / name;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Cli, RunWritesCsvMatchingSchema) {
  const fs::path csv = scratch("mirror.csv"), jsonl = scratch("mirror.jsonl");
  ASSERT_EQ(run("run --scenario " + scenario("mirror") + " --out " + csv.string() + " --json-log " +
                jsonl.string()),
            0);
  std::ifstream in(csv);
  std::string header;
  std::getline(in, header);
  std::string expected;
  for (const auto& c : teleop::sim::log_columns()) expected += (expected.empty() ? "" : ",") + c;
  EXPECT_EQ(header, expected);
  int rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  EXPECT_EQ(rows, 500);
  std::ifstream jl(jsonl);
  std::string first;
  std::getline(jl, first);
  EXPECT_TRUE(json::parse(first).is_object());
}

TEST(Cli, InvalidScenarioExitsTwo) {
  const fs::path bad = scratch("bad.json");
  json j = json::parse(read_file(scenario("idle")));
  j["version"] = 99;
  std::ofstream(bad) << j.dump();
  EXPECT_EQ(run("run --scenario " + bad.string() + " --out " + scratch("bad.csv").string()), 2);
  std::ofstream(scratch("garbage.json")) << "{not json";
  EXPECT_EQ(run("run --scenario " + scratch("garbage.json").string() + " --out /dev/null"), 2);
}

TEST(Cli, BadFlagsExitNonZero) {
  EXPECT_NE(run(""), 0);
  EXPECT_NE(run("run"), 0);
  EXPECT_NE(run("run --scenario /nonexistent.json --out x.csv"), 0);
  EXPECT_NE(run("check --suite nope"), 0);
  EXPECT_NE(run("frobnicate"), 0);
}

TEST(Cli, CheckSuitesPass) {
  const fs::path out = scratch("check.txt");
  EXPECT_EQ(run("check --suite fk", out.string()), 0);
  const std::string text = read_file(out);
  EXPECT_NE(text.find("PASS fk/"), std::string::npos) << text;
  EXPECT_EQ(text.find("FAIL"), std::string::npos) << text;
  EXPECT_EQ(run("check --suite retarget"), 0);
}

TEST(Cli, PresetsListsUr5e) {
  const fs::path out = scratch("presets.txt");
  EXPECT_EQ(run("presets", out.string()), 0);
  EXPECT_NE(read_file(out).find("ur5e"), std::string::npos);
}

TEST(Cli, ServeHandshakeEchoesRobot) {
  namespace asio = boost::asio;
  namespace beast = boost::beast;
  asio::io_context ioc;
  unsigned short port = 0;
  {
    asio::ip::tcp::acceptor probe(ioc, {asio::ip::make_address("127.0.0.1"), 0});
    port = probe.local_endpoint().port();
  }
  const fs::path pid = scratch("serve.pid"), rec = scratch("serve_record.json");
  fs::remove(rec);
  const std::string cmd = cli() + " serve --scenario " + scenario("idle") + " --port " +
                          std::to_string(port) + " --record " + rec.string() +
                          " >/dev/null 2>&1 & echo $! > " + pid.string();
  ASSERT_EQ(std::system(cmd.c_str()), 0);

  beast::websocket::stream<asio::ip::tcp::socket> ws(ioc);
  bool connected = false;
  for (int i = 0; i < 100 && !connected; ++i) {
    boost::system::error_code ec;
    ws.next_layer().connect({asio::ip::make_address("127.0.0.1"), port}, ec);
    connected = !ec;
    if (!connected) {
      ws.next_layer().close();
      std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
  }
  ASSERT_TRUE(connected);
  ws.handshake("127.0.0.1", "/");
  beast::flat_buffer buf;
  ws.read(buf);
  const json hello = json::parse(beast::buffers_to_string(buf.data()));
  EXPECT_EQ(hello["type"], "hello");
  EXPECT_EQ(hello["robot"], "ur5e");
  ws.write(asio::buffer(std::string(R"({"type":"input_pose","pos":[0.3,0.1,1.2],"quat":[1,0,0,0]})")));
  std::this_thread::sleep_for(std::chrono::milliseconds(200));
  ws.close(beast::websocket::close_code::normal);

  ASSERT_EQ(std::system(("kill -TERM $(cat " + pid.string() + ")").c_str()), 0);
  for (int i = 0; i < 100 && !fs::exists(rec); ++i) {
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
  std::this_thread::sleep_for(std::chrono::milliseconds(100));
  ASSERT_TRUE(fs::exists(rec));
  const teleop::sim::Scenario s = teleop::sim::load_scenario(rec.string());
  EXPECT_EQ(s.name, "idle-session");
  EXPECT_EQ(s.input_stream.size(), 1u);
}
