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

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <limits>
#include <random>

#include "teleop/error.hpp"
#include "teleop/qp.hpp"

using namespace teleop;

namespace {

// Exhaustive active-set enumeration: the optimum of a strictly convex QP is
// the best feasible minimizer over all equality-constrained faces.
Eigen::VectorXd brute_force(const qp::Problem& p, bool& feasible) {
  const int n = static_cast<int>(p.a.size());
  const int m = static_cast<int>(p.b.size());
  double best = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_x;
  for (int mask = 0; mask < (1 << m); ++mask) {
    std::vector<int> rows;
    for (int i = 0; i < m; ++i) {
      if (mask & (1 << i)) rows.push_back(i);
    }
    const int k = static_cast<int>(rows.size());
    if (k > n) continue;
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + k, n + k);
    Eigen::VectorXd rhs(n + k);
    kkt.topLeftCorner(n, n) = p.G;
    rhs.head(n) = -p.a;
    for (int j = 0; j < k; ++j) {
      kkt.block(0, n + j, n, 1) = -p.C.row(rows[j]).transpose();
      kkt.block(n + j, 0, 1, n) = p.C.row(rows[j]);
      rhs[n + j] = p.b[rows[j]];
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
    if (!lu.isInvertible()) continue;
    const Eigen::VectorXd x = lu.solve(rhs).head(n);
    if (((p.C * x - p.b).array() < -1e-9).any()) continue;
    const double f = 0.5 * x.dot(p.G * x) + p.a.dot(x);
    if (f < best) {
      best = f;
      best_x = x;
    }
  }
  feasible = best_x.size() > 0;
  return best_x;
}

qp::Problem random_problem(std::mt19937_64& rng, int n, int m) {
  std::normal_distribution<double> g;
  qp::Problem p;
  Eigen::MatrixXd l(n, n);
  for (int i = 0; i < n * n; ++i) l.data()[i] = g(rng);
  p.G = l * l.transpose() + 0.1 * Eigen::MatrixXd::Identity(n, n);
  p.a.resize(n);
  for (int i = 0; i < n; ++i) p.a[i] = 3.0 * g(rng);
  p.C.resize(m, n);
  p.b.resize(m);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) p.C(i, j) = g(rng);
    // Keep the origin strictly feasible so every problem has a solution.
    p.b[i] = -std::abs(g(rng));
  }
  return p;
}

}  // namespace

TEST(Qp, UnconstrainedMinimizer) {
  qp::Problem p;
  p.G = Eigen::Matrix2d{{2, 0}, {0, 4}};
  p.a = Eigen::Vector2d(-2, -8);
  p.C.resize(0, 2);
  p.b.resize(0);
  const auto r = qp::solve(p);
  EXPECT_NEAR(r.x[0], 1.0, 1e-14);
  EXPECT_NEAR(r.x[1], 2.0, 1e-14);
  EXPECT_TRUE(r.active.empty());
  EXPECT_NEAR(r.objective, -9.0, 1e-12);
}

TEST(Qp, SingleActiveBound) {
  qp::Problem p;
  p.G = Eigen::Matrix2d::Identity();
  p.a = Eigen::Vector2d(-3, 0);
  p.C = Eigen::RowVector2d(-1, 0);  // x0 <= 1
  p.b = Eigen::VectorXd::Constant(1, -1.0);
  const auto r = qp::solve(p);
  EXPECT_NEAR(r.x[0], 1.0, 1e-14);
  EXPECT_NEAR(r.x[1], 0.0, 1e-14);
  ASSERT_EQ(r.active.size(), 1u);
  EXPECT_NEAR(r.multipliers[0], 2.0, 1e-12);
}

TEST(Qp, MatchesActiveSetEnumeration) {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 2 + trial % 4;
    const int m = 1 + trial % 8;
    const qp::Problem p = random_problem(rng, n, m);
    bool feasible = false;
    const Eigen::VectorXd expected = brute_force(p, feasible);
    ASSERT_TRUE(feasible);
    const auto r = qp::solve(p);
    EXPECT_LT((r.x - expected).cwiseAbs().maxCoeff(), 1e-8) << "trial " << trial;
    EXPECT_GE((p.C * r.x - p.b).minCoeff(), -1e-9);
    // KKT: stationarity with non-negative multipliers and complementarity.
    const Eigen::VectorXd stat = p.G * r.x + p.a - p.C.transpose() * r.multipliers;
    EXPECT_LT(stat.cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_GE(r.multipliers.minCoeff(), -1e-12);
    EXPECT_LT((r.multipliers.array() * (p.C * r.x - p.b).array()).abs().maxCoeff(), 1e-8);
  }
}

TEST(Qp, BoxConstrainedProblem) {
  // Box bounds as paired rows, the form the planner produces.
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 4;
    qp::Problem p = random_problem(rng, n, 0);
    p.C.resize(2 * n, n);
    p.b.resize(2 * n);
    p.C << Eigen::MatrixXd::Identity(n, n), -Eigen::MatrixXd::Identity(n, n);
    p.b.setConstant(-0.5);
    bool feasible = false;
    const Eigen::VectorXd expected = brute_force(p, feasible);
    ASSERT_TRUE(feasible);
    EXPECT_LT((qp::solve(p).x - expected).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(Qp, ReportsInfeasibleConstraints) {
  qp::Problem p;
  p.G = Eigen::Matrix2d::Identity();
  p.a = Eigen::Vector2d::Zero();
  p.C = Eigen::Matrix2d{{1, 0}, {-1, 0}};  // x0 >= 1 and x0 <= -1
  p.b = Eigen::Vector2d(1, 1);
  try {
    qp::solve(p);
    FAIL() << "expected infeasible";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInfeasibleProblem);
  }
}

TEST(Qp, RejectsIndefiniteHessianAndBadShapes) {
  qp::Problem p;
  p.G = Eigen::Matrix2d{{1, 0}, {0, -1}};
  p.a = Eigen::Vector2d::Zero();
  p.C.resize(0, 2);
  p.b.resize(0);
  EXPECT_THROW(qp::solve(p), Error);
  p.G = Eigen::Matrix2d::Identity();
  p.C.resize(1, 3);
  p.b.resize(1);
  EXPECT_THROW(qp::solve(p), Error);
}
