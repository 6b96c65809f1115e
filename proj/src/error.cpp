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

#include "teleop/error.hpp"

namespace teleop {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kSingular: return "singular";
    case ErrorCode::kStrategyMismatch: return "strategy_mismatch";
    case ErrorCode::kAlreadyEngaged: return "already_engaged";
    case ErrorCode::kNotEngaged: return "not_engaged";
    case ErrorCode::kInfeasibleStart: return "infeasible_start";
    case ErrorCode::kInfeasibleProblem: return "infeasible_problem";
    case ErrorCode::kScenarioInvalid: return "scenario_invalid";
    case ErrorCode::kInvalidArgument: return "invalid_argument";
  }
  return "unknown";
}

}  // namespace teleop
