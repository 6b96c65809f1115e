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

#include "teleop/oracles/naive_retarget.hpp"

#include <Eigen/Geometry>

#include <cmath>
#include <numbers>

namespace teleop::oracles {

namespace {

using Eigen::Matrix3d;
using Eigen::Matrix4d;

Matrix4d make(const Eigen::Vector3d& p, const Matrix3d& r) {
  Matrix4d t = Matrix4d::Identity();
  t.topLeftCorner<3, 3>() = r;
  t.topRightCorner<3, 1>() = p;
  return t;
}

double smallest_solution(double a0) {
  double best = a0;
  for (double c : {a0 - std::numbers::pi, a0 + std::numbers::pi}) {
    if (std::abs(c) < std::abs(best)) best = c;
  }
  return best;
}

bool near_vertical(const Eigen::Vector3d& v) {
  return std::acos(std::min(1.0, std::abs(v.z()) / v.norm())) < 1e-6;
}

}  // namespace

bool naive_upright(const Matrix3d& r, Matrix3d& out) {
  if (near_vertical(r.col(1))) return false;
  const double a = smallest_solution(std::atan2(-r(2, 1), r(2, 2)));
  const Matrix3d r1 = r * Eigen::AngleAxisd(a, Eigen::Vector3d::UnitX()).toRotationMatrix();
  if (near_vertical(r1.col(0))) return false;
  const double b = smallest_solution(std::atan2(r1(2, 0), r1(2, 2)));
  out = r1 * Eigen::AngleAxisd(b, Eigen::Vector3d::UnitY()).toRotationMatrix();
  return true;
}

NaiveRetargeting::NaiveRetargeting(const retarget::RetargetConfig& cfg, const Matrix4d& T_0Me)
    : cfg_(cfg) {
  const Matrix3d current = T_0Me.topLeftCorner<3, 3>();
  T_0MtM_ = make(T_0Me.topRightCorner<3, 1>(), choose_robot(cfg_.robot_translation, T_0Me, current));
  T_0MrM_ = make(T_0Me.topRightCorner<3, 1>(), choose_robot(cfg_.robot_rotation, T_0Me, current));
  if (auto* c = std::get_if<retarget::CalibratedFixed>(&cfg_.input_translation)) {
    T_0ItI_.topLeftCorner<3, 3>() = c->rotation.matrix();
  }
}

Matrix3d NaiveRetargeting::choose_input(const retarget::OrientationStrategy& s,
                                        const Matrix4d& T_0Id) const {
  if (auto* c = std::get_if<retarget::CalibratedFixed>(&s)) return c->rotation.matrix();
  if (std::holds_alternative<retarget::DeviceAtClutch>(s)) return T_0Id.topLeftCorner<3, 3>();
  return Matrix3d::Identity();
}

Matrix3d NaiveRetargeting::choose_robot(const retarget::OrientationStrategy& s,
                                        const Matrix4d& T_0Me, const Matrix3d& previous) const {
  if (auto* c = std::get_if<retarget::CalibratedFixed>(&s)) return c->rotation.matrix();
  if (std::holds_alternative<retarget::EndEffectorAtRelease>(s)) return T_0Me.topLeftCorner<3, 3>();
  if (std::holds_alternative<retarget::UprightAtRelease>(s)) {
    Matrix3d out;
    return naive_upright(T_0Me.topLeftCorner<3, 3>(), out) ? out : previous;
  }
  return Matrix3d::Identity();
}

Matrix4d NaiveRetargeting::desired() const {
  const Matrix3d R = T_0MrM_.topLeftCorner<3, 3>() * T_rId_.topLeftCorner<3, 3>();
  const Eigen::Vector3d p =
      T_0MtM_.topRightCorner<3, 1>() + T_0MtM_.topLeftCorner<3, 3>() * T_tId_.topRightCorner<3, 1>();
  return make(p, R);
}

Matrix4d NaiveRetargeting::iterate(const Matrix4d& T_0Id, bool button) {
  const bool activate = !clutch_ && button;
  const bool deactivate = clutch_ && !button;
  const bool relative = cfg_.mode == retarget::Mode::kRelative;
  if (!clutch_) {
    T_tId_ = Matrix4d::Identity();
    T_rId_ = Matrix4d::Identity();
    if (activate) {
      if (relative) {
        const Eigen::Vector3d p = T_0Id.topRightCorner<3, 1>();
        T_0ItI_ = make(p, choose_input(cfg_.input_translation, T_0Id));
        T_0IrI_ = make(p, choose_input(cfg_.input_rotation, T_0Id));
      }
      clutch_ = true;
    }
  }
  // The activation sample also drives the displacement update, so an
  // activate event is seen before that sample's displacement update.
  if (clutch_) {
    T_tId_ = T_0ItI_.inverse() * T_0Id;
    T_rId_ = T_0IrI_.inverse() * T_0Id;
    if (deactivate) {
      // The end-effector pose handed to the release is the desired pose.
      const Matrix4d T_0Me = desired();
      if (relative) {
        const Eigen::Vector3d p = T_0Me.topRightCorner<3, 1>();
        T_0MtM_ = make(p, choose_robot(cfg_.robot_translation, T_0Me, T_0MtM_.topLeftCorner<3, 3>()));
        T_0MrM_ = make(p, choose_robot(cfg_.robot_rotation, T_0Me, T_0MrM_.topLeftCorner<3, 3>()));
      }
      // Released: no displacement is applied to the new robot frames.
      T_tId_ = Matrix4d::Identity();
      T_rId_ = Matrix4d::Identity();
      clutch_ = false;
    }
  }
  return desired();
}

}  // namespace teleop::oracles
