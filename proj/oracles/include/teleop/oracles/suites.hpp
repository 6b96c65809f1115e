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

// Oracle suites shared by `teleop check` and the acceptance tests.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "teleop/kinematics.hpp"
#include "teleop/retarget.hpp"

namespace teleop::oracles {

struct Check {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct SuiteResult {
  std::string suite;
  std::vector<Check> checks;

  bool passed() const;
};

std::vector<std::string> suite_names();

// Thresholds are fixed: FK 1e-12 against the matrix chain, Jacobians and
// NLP gradients 1e-5 relative to central differences, retargeting 1e-9.
SuiteResult run_fk_suite(const RobotModel& model, int samples = 1000, std::uint64_t seed = 7);
SuiteResult run_gradient_suite(const RobotModel& model, int samples = 100, std::uint64_t seed = 11);
SuiteResult run_retarget_suite(int steps = 10000, std::uint64_t seed = 13);
// Throws Error(kInvalidArgument) for an unknown suite name.
SuiteResult run_suite(const std::string& name, const RobotModel& model);

Rotation random_rotation(std::mt19937_64& rng);
Transform random_transform(std::mt19937_64& rng, double pos_scale = 1.0);
JointVector random_joints(std::mt19937_64& rng, const JointBounds& bounds);

// Random-walk device trace with random clutch toggles.
struct TraceStep {
  Transform device;
  bool clutch = false;
};
std::vector<TraceStep> random_trace(std::mt19937_64& rng, int steps, double toggle_probability = 0.03);

// Largest position or rotation-entry difference between two poses.
double pose_discrepancy(const Transform& a, const Transform& b);

}  // namespace teleop::oracles
