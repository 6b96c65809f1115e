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

#include <Eigen/Core>

#include <functional>

namespace teleop::oracles {

using ScalarFn = std::function<double(const Eigen::VectorXd&)>;
using VectorFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

Eigen::VectorXd central_gradient(const ScalarFn& f, const Eigen::VectorXd& x, double h = 1e-6);
// Columns are d f / d x_j.
Eigen::MatrixXd central_jacobian(const VectorFn& f, const Eigen::VectorXd& x, double h = 1e-6);

// ||a - b|| / max(||b||, floor).
double relative_error(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double floor = 1e-8);

}  // namespace teleop::oracles
