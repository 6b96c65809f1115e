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

#include "teleop/qp.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <limits>

#include "teleop/error.hpp"

namespace teleop::qp {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kInf = std::numeric_limits<double>::infinity();

// Rotation in the (i, i+1) plane that maps (a, b) onto (hypot(a, b), 0).
struct Givens {
  double c = 1.0;
  double s = 0.0;
  double h = 0.0;

  Givens(double a, double b) : h(std::hypot(a, b)) {
    if (h > 0.0) {
      c = a / h;
      s = b / h;
    }
  }

  void apply_to_columns(MatrixXd& m, int i, int j) const {
    for (int k = 0; k < m.rows(); ++k) {
      const double u = m(k, i), v = m(k, j);
      m(k, i) = c * u + s * v;
      m(k, j) = -s * u + c * v;
    }
  }
};

// Active-set factorization: J' N = [R; 0], with N the active normals and
// J' G J = I.
class ActiveSet {
 public:
  ActiveSet(MatrixXd j, int n) : J(std::move(j)), R(MatrixXd::Zero(n, n)), n_(n) {}

  int size() const { return static_cast<int>(rows.size()); }

  // Rotates J so that d = J' np has zeros below position q, then appends d
  // as the new column of R.
  void add(VectorXd d, int row, double multiplier) {
    const int q = size();
    for (int j = n_ - 1; j > q; --j) {
      const Givens g(d[j - 1], d[j]);
      if (g.h == 0.0) continue;
      d[j - 1] = g.h;
      d[j] = 0.0;
      g.apply_to_columns(J, j - 1, j);
    }
    R.col(q).head(q + 1) = d.head(q + 1);
    rows.push_back(row);
    u.push_back(multiplier);
  }

  void drop(int l) {
    const int q = size();
    rows.erase(rows.begin() + l);
    u.erase(u.begin() + l);
    for (int col = l; col < q - 1; ++col) R.col(col) = R.col(col + 1);
    R.col(q - 1).setZero();
    for (int i = l; i < q - 1; ++i) {
      const Givens g(R(i, i), R(i + 1, i));
      if (g.h == 0.0) continue;
      for (int col = i; col < q - 1; ++col) {
        const double a = R(i, col), b = R(i + 1, col);
        R(i, col) = g.c * a + g.s * b;
        R(i + 1, col) = -g.s * a + g.c * b;
      }
      R(i + 1, i) = 0.0;
      g.apply_to_columns(J, i, i + 1);
    }
  }

  MatrixXd J;
  MatrixXd R;
  std::vector<int> rows;
  std::vector<double> u;

 private:
  int n_;
};

}  // namespace

Result solve(const Problem& problem) {
  const int n = static_cast<int>(problem.G.rows());
  const int m = static_cast<int>(problem.C.rows());
  if (problem.G.cols() != n || problem.a.size() != n || problem.C.cols() != n ||
      problem.b.size() != m) {
    throw Error(ErrorCode::kInvalidArgument, "qp: inconsistent problem dimensions");
  }
  const Eigen::LLT<MatrixXd> llt(problem.G);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::kInvalidArgument, "qp: Hessian is not positive definite");
  }
  const MatrixXd L = llt.matrixL();
  ActiveSet set(L.transpose().triangularView<Eigen::Upper>().solve(MatrixXd::Identity(n, n)), n);

  VectorXd x = -llt.solve(problem.a);
  std::vector<char> is_active(m, 0);
  const int max_iterations = 50 * (n + m) + 100;
  int iterations = 0;

  auto violation_tol = [&](int i) { return 1e-12 * (1.0 + std::abs(problem.b[i])); };

  while (true) {
    int p = -1;
    double worst = 0.0;
    for (int i = 0; i < m; ++i) {
      if (is_active[i]) continue;
      const double s = problem.C.row(i).dot(x) - problem.b[i];
      if (s < -violation_tol(i) && s < worst) {
        worst = s;
        p = i;
      }
    }
    if (p < 0) break;

    const VectorXd np = problem.C.row(p).transpose();
    double up = 0.0;
    while (true) {
      if (++iterations > max_iterations) {
        throw Error(ErrorCode::kInfeasibleProblem, "qp: iteration limit reached");
      }
      const int q = set.size();
      const VectorXd d = set.J.transpose() * np;
      const VectorXd d_free = d.tail(n - q);
      const VectorXd z = set.J.rightCols(n - q) * d_free;
      const VectorXd r =
          set.R.topLeftCorner(q, q).triangularView<Eigen::Upper>().solve(d.head(q));

      double t1 = kInf;
      int l = -1;
      for (int j = 0; j < q; ++j) {
        if (r[j] > 0.0) {
          const double ratio = set.u[j] / r[j];
          if (ratio < t1) {
            t1 = ratio;
            l = j;
          }
        }
      }
      const double z_dot_n = d_free.squaredNorm();
      double t2 = kInf;
      if (z_dot_n > 1e-24 * d.squaredNorm()) {
        t2 = -(np.dot(x) - problem.b[p]) / z_dot_n;
      }
      const double t = std::min(t1, t2);
      if (t == kInf) {
        throw Error(ErrorCode::kInfeasibleProblem, "qp: constraints are infeasible");
      }
      for (int j = 0; j < q; ++j) set.u[j] -= t * r[j];
      up += t;
      if (t2 == kInf) {
        is_active[set.rows[l]] = 0;
        set.drop(l);
        continue;
      }
      x += t * z;
      if (t2 <= t1) {
        set.add(d, p, up);
        is_active[p] = 1;
        break;
      }
      is_active[set.rows[l]] = 0;
      set.drop(l);
    }
  }

  Result result;
  result.x = std::move(x);
  result.multipliers = VectorXd::Zero(m);
  for (int j = 0; j < set.size(); ++j) result.multipliers[set.rows[j]] = set.u[j];
  result.active = set.rows;
  result.objective = 0.5 * result.x.dot(problem.G * result.x) + problem.a.dot(result.x);
  result.iterations = iterations;
  return result;
}

}  // namespace teleop::qp
