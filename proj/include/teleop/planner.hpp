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

// Task-space tracking MPC over the double-integrator joint model
//
//   d/dt [q; qd] = [0 I; 0 0] [q; qd] + [0; I] u,
//
// transcribed by direct multiple shooting with piecewise-constant
// accelerations, exact discretization and a dt-weighted Riemann-sum cost.

#include <Eigen/Core>

#include <memory>
#include <optional>
#include <vector>

#include "teleop/kinematics.hpp"
#include "teleop/prediction.hpp"

namespace teleop::planner {

struct OcpConfig {
  int horizon = 10;
  double dt = 0.1;
  Vec3 w_position = Vec3::Constant(100.0);
  Vec3 w_orientation = Vec3::Constant(100.0);
  JointVector w_velocity = JointVector::Constant(0.01);
  JointVector w_acceleration = JointVector::Constant(0.01);
  int max_iterations = 30;
  double stationarity_tol = 1e-6;
  double constraint_tol = 1e-6;
  // Position bounds are also enforced at this many evenly spaced instants
  // inside every shooting interval (1 = nodes only). Matching the plant
  // substeps keeps every simulated sample inside the box.
  int path_samples = 1;

  void validate() const;
};

struct JointState {
  JointVector q = JointVector::Zero();
  JointVector qd = JointVector::Zero();
};

struct SolveStats {
  int iterations = 0;
  double solve_ms = 0.0;
  bool converged = false;
  double stationarity = 0.0;
  // Objective at the start of the solve and after every accepted step.
  std::vector<double> cost_history;
};

struct PlannedTrajectory {
  std::vector<JointState> states;     // horizon + 1 nodes, states[0] = x0
  std::vector<JointVector> controls;  // horizon piecewise-constant accelerations
  double cost = 0.0;
  SolveStats stats;
};

// Per-joint exact discretization: x+ = Ad x + Bd u.
struct Discretization {
  Eigen::Matrix2d Ad;
  Eigen::Vector2d Bd;
};
Discretization discretize(double dt);

JointState propagate(const JointState& x, const JointVector& u, double dt);

// l1p + l1o + l2a + l2b at one node (not yet multiplied by dt).
double stage_cost(const JointState& x, const JointVector& u, const Vec3& ref_p,
                  const UnitQuat& ref_o, const OcpConfig& cfg, const RobotModel& model);

// Sum over k = 0..H-1 of stage_cost(x_k, u_k, ref_k) * dt.
double trajectory_cost(const std::vector<JointState>& states,
                       const std::vector<JointVector>& controls, const ReferenceTrajectory& ref,
                       const OcpConfig& cfg, const RobotModel& model);

// The transcribed NLP with all shooting nodes as decision variables:
//   w = [q_1, qd_1, ..., q_H, qd_H, u_0, ..., u_{H-1}],
// x_0 fixed. Dynamics enter as defect constraints.
class MultipleShootingProblem {
 public:
  MultipleShootingProblem(OcpConfig cfg, RobotModel model, JointState x0,
                          ReferenceTrajectory ref);

  int num_variables() const;
  double objective(const Eigen::VectorXd& w) const;
  Eigen::VectorXd gradient(const Eigen::VectorXd& w) const;
  // x_{k+1} - Ad x_k - Bd u_k for k = 0..H-1, stacked.
  Eigen::VectorXd defects(const Eigen::VectorXd& w) const;

  Eigen::VectorXd pack(const std::vector<JointState>& states,
                       const std::vector<JointVector>& controls) const;
  PlannedTrajectory unpack(const Eigen::VectorXd& w) const;

 private:
  OcpConfig cfg_;
  RobotModel model_;
  JointState x0_;
  ReferenceTrajectory ref_;
};

// Swappable NLP backend.
class OcpSolver {
 public:
  virtual ~OcpSolver() = default;
  // Throws Error(kInfeasibleStart) if x0 violates the state bounds and
  // Error(kInfeasibleProblem) if no control sequence satisfies the bounds.
  virtual PlannedTrajectory solve(const OcpConfig& cfg, const RobotModel& model,
                                  const JointState& x0, const ReferenceTrajectory& ref,
                                  const PlannedTrajectory* warm) = 0;
};

// Gauss-Newton SQP on the condensed controls. Tracking residuals are
// linearized through the kinematic Jacobians, the velocity and acceleration
// terms enter exactly, and every step solves a bound-constrained QP.
class GaussNewtonSolver final : public OcpSolver {
 public:
  PlannedTrajectory solve(const OcpConfig& cfg, const RobotModel& model, const JointState& x0,
                          const ReferenceTrajectory& ref, const PlannedTrajectory* warm) override;
};

// Convenience wrapper around GaussNewtonSolver.
PlannedTrajectory solve(const OcpConfig& cfg, const RobotModel& model, const JointState& x0,
                        const ReferenceTrajectory& ref,
                        const std::optional<PlannedTrajectory>& warm = std::nullopt);

// Previous solution shifted by one interval with the last control repeated.
std::vector<JointVector> shifted_controls(const PlannedTrajectory& previous, int horizon);

struct DesiredSample {
  double t = 0.0;
  Transform pose;
};

struct MpcResult {
  PlannedTrajectory plan;  // solver output of this cycle
  ReferenceTrajectory reference;
  bool accepted = false;   // false: keep executing the previous plan
};

// Receding-horizon loop state: owns the solver and the warm start.
class MpcPlanner {
 public:
  MpcPlanner(OcpConfig cfg, RobotModel model,
             std::unique_ptr<OcpSolver> solver = std::make_unique<GaussNewtonSolver>());

  // Predicts the reference from the two latest desired samples and solves.
  // A plan is accepted only if the solver converged.
  MpcResult step(const JointState& x0, const DesiredSample& prev, const DesiredSample& curr);

  void reset() { warm_.reset(); }
  const OcpConfig& config() const { return cfg_; }
  const RobotModel& model() const { return model_; }
  void set_warm_start_enabled(bool on) { warm_enabled_ = on; }

 private:
  OcpConfig cfg_;
  RobotModel model_;
  std::unique_ptr<OcpSolver> solver_;
  std::optional<PlannedTrajectory> warm_;
  bool warm_enabled_ = true;
  Vec3 reach_center_;
  double reach_;
};

}  // namespace teleop::planner
