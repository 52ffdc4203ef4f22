#pragma once

// Independent oracle for the weighted cone projection: enumerate every subset
// of the inequality rows as a candidate active set, minimize over its null
// space, and keep the feasible candidate with the smallest objective.  Runs in
// O(4^B) KKT solves, so callers keep B small (<= 8 or so).  Deliberately
// shares no code with the production active-set solver.

#include <Eigen/Dense>
#include <limits>
#include <stdexcept>

namespace qp_oracle {

// Rows of A u <= 0 over the tail u = (v_1,...,v_B), with v_0 = 0 eliminated:
//   -u_1 <= 0; u_t - u_{t+1} <= 0 for t = 1..B-1   (nonnegative increments)
//   u_2 - 2 u_1 <= 0; u_{t+1} - 2 u_t + u_{t-1} <= 0 for t = 2..B-1  (concavity)
inline Eigen::MatrixXd constraint_rows(int budget) {
  const int rows = budget >= 1 ? 2 * budget - 1 : 0;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(rows, budget);
  int r = 0;
  a(r++, 0) = -1.0;
  for (int t = 1; t < budget; ++t) {
    a(r, t - 1) = 1.0;
    a(r, t) = -1.0;
    ++r;
  }
  if (budget >= 2) {
    a(r, 1) = 1.0;
    a(r, 0) = -2.0;
    ++r;
  }
  for (int t = 2; t < budget; ++t) {
    a(r, t) = 1.0;
    a(r, t - 1) = -2.0;
    a(r, t - 2) = 1.0;
    ++r;
  }
  return a;
}

// y and w have size B+1 (index 0 included); returns the projected values with
// the leading zero, matching cim::project_concave.
inline Eigen::VectorXd project(const Eigen::VectorXd& y, const Eigen::VectorXd& w) {
  const int budget = static_cast<int>(y.size()) - 1;
  if (budget < 1) return Eigen::VectorXd::Zero(1);
  if (budget > 10) throw std::invalid_argument("qp oracle: budget too large");
  const Eigen::VectorXd yt = y.tail(budget);
  const Eigen::VectorXd wt = w.tail(budget);
  const Eigen::MatrixXd a = constraint_rows(budget);
  const int rows = static_cast<int>(a.rows());

  double best_obj = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best = Eigen::VectorXd::Zero(budget);
  for (long mask = 0; mask < (1L << rows); ++mask) {
    Eigen::MatrixXd basis;
    if (mask == 0) {
      basis = Eigen::MatrixXd::Identity(budget, budget);
    } else {
      int count = 0;
      for (int r = 0; r < rows; ++r) count += (mask >> r) & 1;
      Eigen::MatrixXd active(count, budget);
      int at = 0;
      for (int r = 0; r < rows; ++r)
        if ((mask >> r) & 1) active.row(at++) = a.row(r);
      Eigen::FullPivLU<Eigen::MatrixXd> lu(active);
      lu.setThreshold(1e-10);
      basis = lu.kernel();
      if (lu.dimensionOfKernel() == 0) {
        // Only u = 0 satisfies the active equalities.
        if ((a * Eigen::VectorXd::Zero(budget)).maxCoeff() <= 1e-9) {
          const double obj = (wt.array() * yt.array().square()).sum();
          if (obj < best_obj) {
            best_obj = obj;
            best = Eigen::VectorXd::Zero(budget);
          }
        }
        continue;
      }
    }
    const Eigen::MatrixXd gram =
        basis.transpose() * wt.asDiagonal() * basis;
    const Eigen::VectorXd rhs = basis.transpose() * (wt.array() * yt.array()).matrix();
    const Eigen::VectorXd coef = gram.fullPivLu().solve(rhs);
    if ((gram * coef - rhs).norm() > 1e-8) continue;
    const Eigen::VectorXd u = basis * coef;
    if ((a * u).maxCoeff() > 1e-9) continue;
    const double obj = (wt.array() * (u - yt).array().square()).sum();
    if (obj < best_obj) {
      best_obj = obj;
      best = u;
    }
  }

  Eigen::VectorXd full(budget + 1);
  full[0] = 0.0;
  full.tail(budget) = best;
  return full;
}

inline Eigen::VectorXd project(const Eigen::VectorXd& y) {
  return project(y, Eigen::VectorXd::Ones(y.size()));
}

}  // namespace qp_oracle
