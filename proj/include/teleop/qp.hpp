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

// Dense strictly convex quadratic programs
//
//   minimize    1/2 x' G x + a' x
//   subject to  C x >= b
//
// solved with the Goldfarb-Idnani dual active-set method. The method starts
// from the unconstrained minimizer and adds violated constraints one at a
// time, so no feasible starting point is required.

#include <Eigen/Core>

#include <vector>

namespace teleop::qp {

struct Problem {
  Eigen::MatrixXd G;  // n x n, symmetric positive definite
  Eigen::VectorXd a;  // n
  Eigen::MatrixXd C;  // m x n, one constraint per row
  Eigen::VectorXd b;  // m
};

struct Result {
  Eigen::VectorXd x;
  // One multiplier per constraint row; zero for inactive rows.
  Eigen::VectorXd multipliers;
  std::vector<int> active;
  double objective = 0.0;
  int iterations = 0;
};

// Throws Error(kInvalidArgument) if G is not positive definite or the shapes
// disagree, Error(kInfeasibleProblem) if the constraints admit no solution.
Result solve(const Problem& problem);

}  // namespace teleop::qp
