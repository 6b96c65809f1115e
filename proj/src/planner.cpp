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

#include "teleop/planner.hpp"

#include <Eigen/Dense>

#include <chrono>
#include <cmath>

#include "teleop/error.hpp"
#include "teleop/qp.hpp"

namespace teleop::planner {

using Eigen::MatrixXd;
using Eigen::VectorXd;

void OcpConfig::validate() const {
  if (horizon < 1) throw Error(ErrorCode::kInvalidArgument, "ocp: horizon must be >= 1");
  if (!(dt > 0.0)) throw Error(ErrorCode::kInvalidArgument, "ocp: dt must be positive");
  if ((w_position.array() < 0.0).any() || (w_orientation.array() < 0.0).any() ||
      (w_velocity.array() < 0.0).any() || (w_acceleration.array() < 0.0).any()) {
    throw Error(ErrorCode::kInvalidArgument, "ocp: weights must be non-negative");
  }
  if (path_samples < 1) {
    throw Error(ErrorCode::kInvalidArgument, "ocp: path_samples must be >= 1");
  }
  if (max_iterations < 1 || !(stationarity_tol > 0.0) || !(constraint_tol > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "ocp: invalid solver tolerances");
  }
}

Discretization discretize(double dt) {
  Discretization d;
  d.Ad << 1.0, dt, 0.0, 1.0;
  d.Bd << 0.5 * dt * dt, dt;
  return d;
}

JointState propagate(const JointState& x, const JointVector& u, double dt) {
  const Discretization d = discretize(dt);
  JointState out;
  out.q = d.Ad(0, 0) * x.q + d.Ad(0, 1) * x.qd + d.Bd(0) * u;
  out.qd = d.Ad(1, 0) * x.q + d.Ad(1, 1) * x.qd + d.Bd(1) * u;
  return out;
}

namespace {

double tracking_cost(const Transform& pose, const Vec3& ref_p, const UnitQuat& ref_o,
                     const OcpConfig& cfg) {
  const Vec3 rp = pose.pos - ref_p;
  const Vec3 e = quat_error(ref_o, quat_from_rotation(pose.rot));
  return rp.dot(cfg.w_position.cwiseProduct(rp)) + e.dot(cfg.w_orientation.cwiseProduct(e));
}

double regularization_cost(const JointState& x, const JointVector& u, const OcpConfig& cfg) {
  return x.qd.dot(cfg.w_velocity.cwiseProduct(x.qd)) + u.dot(cfg.w_acceleration.cwiseProduct(u));
}

void check_reference(const ReferenceTrajectory& ref, const OcpConfig& cfg) {
  if (static_cast<int>(ref.positions.size()) != cfg.horizon + 1 ||
      static_cast<int>(ref.orientations.size()) != cfg.horizon + 1) {
    throw Error(ErrorCode::kInvalidArgument, "ocp: reference must have horizon + 1 samples");
  }
}

// Gradient of one node's stage cost with respect to q (tracking part only).
JointVector tracking_gradient(const KinematicState& ks, const Vec3& ref_p, const UnitQuat& ref_o,
                              const OcpConfig& cfg) {
  const Vec3 rp = ks.pose.pos - ref_p;
  const Vec3 e = quat_error(ref_o, ks.quat);
  const PositionJacobian je = orientation_error_jacobian(ks, ref_o);
  return 2.0 * (ks.linear.transpose() * cfg.w_position.cwiseProduct(rp) +
                je.transpose() * cfg.w_orientation.cwiseProduct(e));
}

}  // namespace

double stage_cost(const JointState& x, const JointVector& u, const Vec3& ref_p,
                  const UnitQuat& ref_o, const OcpConfig& cfg, const RobotModel& model) {
  return tracking_cost(forward_kinematics(model, x.q), ref_p, ref_o, cfg) +
         regularization_cost(x, u, cfg);
}

double trajectory_cost(const std::vector<JointState>& states,
                       const std::vector<JointVector>& controls, const ReferenceTrajectory& ref,
                       const OcpConfig& cfg, const RobotModel& model) {
  double cost = 0.0;
  for (int k = 0; k < cfg.horizon; ++k) {
    cost += stage_cost(states[k], controls[k], ref.positions[k], ref.orientations[k], cfg, model) *
            cfg.dt;
  }
  return cost;
}

MultipleShootingProblem::MultipleShootingProblem(OcpConfig cfg, RobotModel model, JointState x0,
                                                 ReferenceTrajectory ref)
    : cfg_(std::move(cfg)), model_(std::move(model)), x0_(std::move(x0)), ref_(std::move(ref)) {
  cfg_.validate();
  check_reference(ref_, cfg_);
}

int MultipleShootingProblem::num_variables() const { return 18 * cfg_.horizon; }

PlannedTrajectory MultipleShootingProblem::unpack(const VectorXd& w) const {
  const int H = cfg_.horizon;
  PlannedTrajectory traj;
  traj.states.resize(H + 1);
  traj.controls.resize(H);
  traj.states[0] = x0_;
  for (int k = 1; k <= H; ++k) {
    traj.states[k].q = w.segment<kNumJoints>(12 * (k - 1));
    traj.states[k].qd = w.segment<kNumJoints>(12 * (k - 1) + 6);
  }
  for (int k = 0; k < H; ++k) traj.controls[k] = w.segment<kNumJoints>(12 * H + 6 * k);
  return traj;
}

VectorXd MultipleShootingProblem::pack(const std::vector<JointState>& states,
                                       const std::vector<JointVector>& controls) const {
  const int H = cfg_.horizon;
  VectorXd w(num_variables());
  for (int k = 1; k <= H; ++k) {
    w.segment<kNumJoints>(12 * (k - 1)) = states[k].q;
    w.segment<kNumJoints>(12 * (k - 1) + 6) = states[k].qd;
  }
  for (int k = 0; k < H; ++k) w.segment<kNumJoints>(12 * H + 6 * k) = controls[k];
  return w;
}

double MultipleShootingProblem::objective(const VectorXd& w) const {
  const PlannedTrajectory t = unpack(w);
  return trajectory_cost(t.states, t.controls, ref_, cfg_, model_);
}

VectorXd MultipleShootingProblem::gradient(const VectorXd& w) const {
  const int H = cfg_.horizon;
  const PlannedTrajectory t = unpack(w);
  VectorXd g = VectorXd::Zero(num_variables());
  for (int k = 1; k < H; ++k) {
    const KinematicState ks = evaluate_kinematics(model_, t.states[k].q);
    g.segment<kNumJoints>(12 * (k - 1)) =
        cfg_.dt * tracking_gradient(ks, ref_.positions[k], ref_.orientations[k], cfg_);
    g.segment<kNumJoints>(12 * (k - 1) + 6) =
        2.0 * cfg_.dt * cfg_.w_velocity.cwiseProduct(t.states[k].qd);
  }
  for (int k = 0; k < H; ++k) {
    g.segment<kNumJoints>(12 * H + 6 * k) =
        2.0 * cfg_.dt * cfg_.w_acceleration.cwiseProduct(t.controls[k]);
  }
  return g;
}

VectorXd MultipleShootingProblem::defects(const VectorXd& w) const {
  const int H = cfg_.horizon;
  const PlannedTrajectory t = unpack(w);
  VectorXd d(12 * H);
  for (int k = 0; k < H; ++k) {
    const JointState next = propagate(t.states[k], t.controls[k], cfg_.dt);
    d.segment<kNumJoints>(12 * k) = t.states[k + 1].q - next.q;
    d.segment<kNumJoints>(12 * k + 6) = t.states[k + 1].qd - next.qd;
  }
  return d;
}

std::vector<JointVector> shifted_controls(const PlannedTrajectory& previous, int horizon) {
  std::vector<JointVector> u(horizon, JointVector::Zero());
  const int n = static_cast<int>(previous.controls.size());
  if (n == 0) return u;
  for (int k = 0; k < horizon; ++k) u[k] = previous.controls[std::min(k + 1, n - 1)];
  return u;
}

namespace {

// Condensed view: the controls U (u_{k,i} at index 6k + i) are the only
// unknowns; states follow by exact propagation from x0. Since the dynamics
// are linear, every state bound is a linear inequality in U.
class CondensedProblem {
 public:
  CondensedProblem(const OcpConfig& cfg, const RobotModel& model, const JointState& x0,
                   const ReferenceTrajectory& ref)
      : cfg_(cfg), model_(model), x0_(x0), ref_(ref), H_(cfg.horizon), n_(6 * cfg.horizon) {
    build_constraints();
  }

  int size() const { return n_; }

  // Influence of u_j on q_k (j < k).
  double q_gain(int k, int j) const { return cfg_.dt * cfg_.dt * (k - j - 0.5); }
  double qd_gain() const { return cfg_.dt; }

  std::vector<JointState> states(const VectorXd& U) const {
    std::vector<JointState> x(H_ + 1);
    x[0] = x0_;
    for (int k = 0; k < H_; ++k) x[k + 1] = propagate(x[k], U.segment<kNumJoints>(6 * k), cfg_.dt);
    return x;
  }

  std::vector<JointVector> controls(const VectorXd& U) const {
    std::vector<JointVector> u(H_);
    for (int k = 0; k < H_; ++k) u[k] = U.segment<kNumJoints>(6 * k);
    return u;
  }

  double cost(const VectorXd& U) const {
    return trajectory_cost(states(U), controls(U), ref_, cfg_, model_);
  }

  // Objective, gradient and Gauss-Newton Hessian at U.
  double linearize(const VectorXd& U, VectorXd& grad, MatrixXd& hess) const {
    const double dt = cfg_.dt;
    const std::vector<JointState> x = states(U);
    grad = VectorXd::Zero(n_);
    hess = MatrixXd::Zero(n_, n_);
    double cost = 0.0;

    const Eigen::Matrix<double, 6, 6> wv = (2.0 * dt * cfg_.w_velocity).asDiagonal();
    for (int k = 0; k < H_; ++k) {
      const JointVector uk = U.segment<kNumJoints>(6 * k);
      cost += regularization_cost(x[k], uk, cfg_) * dt;
      grad.segment<kNumJoints>(6 * k) += 2.0 * dt * cfg_.w_acceleration.cwiseProduct(uk);
      hess.diagonal().segment<kNumJoints>(6 * k) += 2.0 * dt * cfg_.w_acceleration;
      if (k == 0) {
        cost += tracking_cost(forward_kinematics(model_, x[0].q), ref_.positions[0],
                              ref_.orientations[0], cfg_) *
                dt;
        continue;
      }
      const KinematicState ks = evaluate_kinematics(model_, x[k].q);
      const Vec3 rp = ks.pose.pos - ref_.positions[k];
      const Vec3 e = quat_error(ref_.orientations[k], ks.quat);
      const PositionJacobian je = orientation_error_jacobian(ks, ref_.orientations[k]);
      cost += (rp.dot(cfg_.w_position.cwiseProduct(rp)) +
               e.dot(cfg_.w_orientation.cwiseProduct(e))) *
              dt;

      const JointVector gq = dt * tracking_gradient(ks, ref_.positions[k], ref_.orientations[k], cfg_);
      const JointVector gqd = 2.0 * dt * cfg_.w_velocity.cwiseProduct(x[k].qd);
      const Eigen::Matrix<double, 6, 6> wq =
          2.0 * dt *
          (ks.linear.transpose() * cfg_.w_position.asDiagonal() * ks.linear +
           je.transpose() * cfg_.w_orientation.asDiagonal() * je);

      for (int j = 0; j < k; ++j) {
        grad.segment<kNumJoints>(6 * j) += q_gain(k, j) * gq + qd_gain() * gqd;
        for (int l = 0; l < k; ++l) {
          hess.block<6, 6>(6 * j, 6 * l) +=
              (q_gain(k, j) * q_gain(k, l)) * wq + (qd_gain() * qd_gain()) * wv;
        }
      }
    }
    return cost;
  }

  // Rows of C U >= lower encode all node bounds.
  const MatrixXd& C() const { return C_; }
  const VectorXd& lower() const { return lower_; }

  double max_violation(const VectorXd& U) const {
    const VectorXd s = C_ * U - lower_;
    return std::max(0.0, -s.minCoeff());
  }

 private:
  void build_constraints() {
    const int P = cfg_.path_samples;
    const int rows = 2 * kNumJoints * H_ * (P + 1) + 2 * n_;
    C_ = MatrixXd::Zero(rows, n_);
    lower_ = VectorXd::Zero(rows);
    int r = 0;
    const RobotModel& m = model_;
    const double dt = cfg_.dt;
    // q at t = k dt + s, 0 < s <= dt: earlier controls act through
    // dt (t - (j + 1/2) dt), the current one through s^2 / 2.
    for (int k = 0; k < H_; ++k) {
      for (int p = 1; p <= P; ++p) {
        const double s = dt * p / P;
        const double t = k * dt + s;
        for (int i = 0; i < kNumJoints; ++i) {
          const double q_free = x0_.q[i] + t * x0_.qd[i];
          for (int j = 0; j < k; ++j) {
            const double g = dt * (t - (j + 0.5) * dt);
            C_(r, 6 * j + i) = g;
            C_(r + 1, 6 * j + i) = -g;
          }
          C_(r, 6 * k + i) = 0.5 * s * s;
          C_(r + 1, 6 * k + i) = -0.5 * s * s;
          lower_[r] = m.q_limits.lower[i] - q_free;
          lower_[r + 1] = q_free - m.q_limits.upper[i];
          r += 2;
        }
      }
    }
    // q-dot is linear inside an interval, so node checks suffice.
    for (int k = 1; k <= H_; ++k) {
      for (int i = 0; i < kNumJoints; ++i) {
        const double qd_free = x0_.qd[i];
        for (int j = 0; j < k; ++j) {
          C_(r, 6 * j + i) = qd_gain();
          C_(r + 1, 6 * j + i) = -qd_gain();
        }
        lower_[r] = m.qd_limits.lower[i] - qd_free;
        lower_[r + 1] = qd_free - m.qd_limits.upper[i];
        r += 2;
      }
    }
    for (int k = 0; k < H_; ++k) {
      for (int i = 0; i < kNumJoints; ++i) {
        const int c = 6 * k + i;
        C_(r, c) = 1.0;
        lower_[r++] = m.u_limits.lower[i];
        C_(r, c) = -1.0;
        lower_[r++] = -m.u_limits.upper[i];
      }
    }
  }

  const OcpConfig& cfg_;
  const RobotModel& model_;
  const JointState& x0_;
  const ReferenceTrajectory& ref_;
  int H_;
  int n_;
  MatrixXd C_;
  VectorXd lower_;
};

}  // namespace

PlannedTrajectory GaussNewtonSolver::solve(const OcpConfig& cfg, const RobotModel& model,
                                           const JointState& x0, const ReferenceTrajectory& ref,
                                           const PlannedTrajectory* warm) {
  const auto start = std::chrono::steady_clock::now();
  cfg.validate();
  check_reference(ref, cfg);
  if (!x0.q.allFinite() || !x0.qd.allFinite()) {
    throw Error(ErrorCode::kInfeasibleStart, "ocp: initial state is not finite");
  }
  if (!model.q_limits.contains(x0.q, cfg.constraint_tol) ||
      !model.qd_limits.contains(x0.qd, cfg.constraint_tol)) {
    throw Error(ErrorCode::kInfeasibleStart, "ocp: initial state violates joint bounds");
  }

  const CondensedProblem problem(cfg, model, x0, ref);
  const int n = problem.size();
  VectorXd U = VectorXd::Zero(n);
  if (warm != nullptr) {
    const std::vector<JointVector> u = shifted_controls(*warm, cfg.horizon);
    for (int k = 0; k < cfg.horizon; ++k) U.segment<kNumJoints>(6 * k) = u[k];
  }
  if (problem.max_violation(U) > 0.0) {
    // Closest feasible control sequence to the initial guess.
    qp::Problem proj{MatrixXd::Identity(n, n), VectorXd::Zero(n), problem.C(),
                     problem.lower() - problem.C() * U};
    U += qp::solve(proj).x;
  }

  PlannedTrajectory out;
  VectorXd grad;
  MatrixXd hess;
  double cost = problem.linearize(U, grad, hess);
  out.stats.cost_history.push_back(cost);

  bool converged = false;
  double stationarity = 0.0;
  int iterations = 0;
  constexpr double kRegularization = 1e-10;
  while (true) {
    hess.diagonal().array() += kRegularization;
    const qp::Problem step_qp{hess, grad, problem.C(), problem.lower() - problem.C() * U};
    const qp::Result step = qp::solve(step_qp);
    stationarity = (hess * step.x).cwiseAbs().maxCoeff();
    if (stationarity < cfg.stationarity_tol) {
      converged = true;
      break;
    }
    if (iterations >= cfg.max_iterations) break;

    const double slope = grad.dot(step.x);
    double alpha = 1.0;
    double trial_cost = problem.cost(U + step.x);
    while (trial_cost > cost + 1e-4 * alpha * slope && alpha > 1e-8) {
      alpha *= 0.5;
      trial_cost = problem.cost(U + alpha * step.x);
    }
    if (!(trial_cost <= cost)) break;
    U += alpha * step.x;
    ++iterations;
    cost = problem.linearize(U, grad, hess);
    out.stats.cost_history.push_back(cost);
  }

  out.states = problem.states(U);
  out.controls = problem.controls(U);
  out.cost = cost;
  out.stats.iterations = iterations;
  out.stats.converged = converged;
  out.stats.stationarity = stationarity;
  out.stats.solve_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return out;
}

PlannedTrajectory solve(const OcpConfig& cfg, const RobotModel& model, const JointState& x0,
                        const ReferenceTrajectory& ref,
                        const std::optional<PlannedTrajectory>& warm) {
  GaussNewtonSolver solver;
  return solver.solve(cfg, model, x0, ref, warm ? &*warm : nullptr);
}

MpcPlanner::MpcPlanner(OcpConfig cfg, RobotModel model, std::unique_ptr<OcpSolver> solver)
    : cfg_(std::move(cfg)),
      model_(std::move(model)),
      solver_(std::move(solver)),
      reach_center_(reach_center(model_)),
      reach_(max_reach(model_)) {
  cfg_.validate();
  model_.validate();
}

MpcResult MpcPlanner::step(const JointState& x0, const DesiredSample& prev,
                           const DesiredSample& curr) {
  const double sample_dt = curr.t - prev.t;
  MpcResult result;
  result.reference = sample_dt > 0.0
                         ? predict(prev.pose, curr.pose, sample_dt, cfg_.horizon, cfg_.dt,
                                   reach_center_, reach_)
                         : predict(curr.pose, curr.pose, 1.0, cfg_.horizon, cfg_.dt,
                                   reach_center_, reach_);
  const PlannedTrajectory* warm = warm_enabled_ && warm_ ? &*warm_ : nullptr;
  result.plan = solver_->solve(cfg_, model_, x0, result.reference, warm);
  result.accepted = result.plan.stats.converged;
  warm_ = result.plan;
  return result;
}

}  // namespace teleop::planner
