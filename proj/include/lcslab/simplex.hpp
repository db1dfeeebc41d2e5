#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Dense>

#include "lcslab/common.hpp"

namespace lcslab::lp {

// max c'x subject to A x = b, x >= 0.
struct LinearProgram {
  Eigen::MatrixXd a;
  Eigen::VectorXd b;
  Eigen::VectorXd c;
};

enum class LpStatus { kOptimal, kInfeasible, kUnbounded };

struct SimplexResult {
  LpStatus status = LpStatus::kInfeasible;
  Eigen::VectorXd x;
  double value = 0.0;
  // One multiplier per row of A. Rows found linearly dependent during phase
  // one are dropped from the tableau; their multipliers are reported as 0.
  Eigen::VectorXd dual;
};

// Dense two-phase tableau simplex with Bland's rule. Problem sizes here are
// tiny (tens of columns), so O(mn) pricing per pivot is fine and the
// artificial columns are kept through phase two: they double as B^{-1}, which
// makes the dual multipliers free.
inline SimplexResult solve_simplex(const LinearProgram& lp) {
  const Eigen::Index m = lp.a.rows(), n = lp.a.cols();
  LCSLAB_REQUIRE(lp.b.size() == m && lp.c.size() == n, "simplex: shape mismatch");
  LCSLAB_REQUIRE(m >= 1 && n >= 1, "simplex: empty program");
  constexpr double kTol = 1e-9;

  // Flip rows with negative rhs first so the all-artificial identity basis is
  // feasible; duals of flipped rows change sign on the way back out.
  Eigen::MatrixXd a = lp.a;
  Eigen::VectorXd b = lp.b;
  Eigen::VectorXd row_sign = Eigen::VectorXd::Ones(m);
  for (Eigen::Index i = 0; i < m; ++i)
    if (b[i] < 0.0) {
      a.row(i) = -a.row(i);
      b[i] = -b[i];
      row_sign[i] = -1.0;
    }

  // Tableau: n original columns, m artificial columns, rhs.
  Eigen::MatrixXd t(m, n + m + 1);
  t.block(0, 0, m, n) = a;
  t.block(0, n, m, m) = Eigen::MatrixXd::Identity(m, m);
  t.col(n + m) = b;

  std::vector<Eigen::Index> basis(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i) basis[static_cast<std::size_t>(i)] = n + i;
  std::vector<Eigen::Index> row_of(static_cast<std::size_t>(m));  // original row per tableau row
  for (Eigen::Index i = 0; i < m; ++i) row_of[static_cast<std::size_t>(i)] = i;

  auto pivot = [&](Eigen::Index prow, Eigen::Index pcol) {
    t.row(prow) /= t(prow, pcol);
    for (Eigen::Index i = 0; i < t.rows(); ++i)
      if (i != prow && t(i, pcol) != 0.0) t.row(i) -= t(i, pcol) * t.row(prow);
    basis[static_cast<std::size_t>(prow)] = pcol;
  };

  // cost[j] under the active objective; entering columns limited to < limit.
  auto run = [&](const Eigen::VectorXd& cost, Eigen::Index limit) -> LpStatus {
    for (int iter = 0;; ++iter) {
      LCSLAB_CHECK_NUMERIC(iter < 20000, "simplex: pivot limit reached");
      Eigen::Index enter = -1;
      for (Eigen::Index j = 0; j < limit; ++j) {  // Bland: first improving index
        double r = cost[j];
        for (Eigen::Index i = 0; i < t.rows(); ++i)
          r -= cost[basis[static_cast<std::size_t>(i)]] * t(i, j);
        if (r > kTol) {
          enter = j;
          break;
        }
      }
      if (enter < 0) return LpStatus::kOptimal;
      Eigen::Index leave = -1;
      double best = 0.0;
      for (Eigen::Index i = 0; i < t.rows(); ++i) {
        if (t(i, enter) <= kTol) continue;
        const double ratio = t(i, t.cols() - 1) / t(i, enter);
        if (leave < 0 || ratio < best - kTol ||
            (ratio < best + kTol &&
             basis[static_cast<std::size_t>(i)] < basis[static_cast<std::size_t>(leave)]))
          leave = i, best = ratio;
      }
      if (leave < 0) return LpStatus::kUnbounded;
      pivot(leave, enter);
    }
  };

  SimplexResult out;
  out.dual = Eigen::VectorXd::Zero(m);

  // Phase one: minimize the artificial mass.
  Eigen::VectorXd phase1 = Eigen::VectorXd::Zero(n + m);
  phase1.segment(n, m).setConstant(-1.0);
  run(phase1, n + m);
  double artificial_mass = 0.0;
  for (Eigen::Index i = 0; i < t.rows(); ++i)
    if (basis[static_cast<std::size_t>(i)] >= n) artificial_mass += t(i, t.cols() - 1);
  if (artificial_mass > 1e-7) {
    out.status = LpStatus::kInfeasible;
    return out;
  }

  // Drive leftover zero-value artificials out; a row with no usable original
  // pivot is linearly dependent and gets removed.
  for (Eigen::Index i = t.rows() - 1; i >= 0; --i) {
    if (basis[static_cast<std::size_t>(i)] < n) continue;
    Eigen::Index pcol = -1;
    for (Eigen::Index j = 0; j < n; ++j)
      if (std::abs(t(i, j)) > 1e-7) {
        pcol = j;
        break;
      }
    if (pcol >= 0) {
      pivot(i, pcol);
    } else {
      const Eigen::Index last = t.rows() - 1;
      t.row(i) = t.row(last);
      basis[static_cast<std::size_t>(i)] = basis[static_cast<std::size_t>(last)];
      row_of[static_cast<std::size_t>(i)] = row_of[static_cast<std::size_t>(last)];
      t.conservativeResize(last, Eigen::NoChange);
      basis.pop_back();
      row_of.pop_back();
    }
  }

  Eigen::VectorXd phase2 = Eigen::VectorXd::Zero(n + m);
  phase2.head(n) = lp.c;
  const LpStatus status = run(phase2, n);
  out.status = status;
  if (status != LpStatus::kOptimal) return out;

  out.x = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < t.rows(); ++i)
    if (basis[static_cast<std::size_t>(i)] < n)
      out.x[basis[static_cast<std::size_t>(i)]] = t(i, t.cols() - 1);
  out.value = lp.c.dot(out.x);
  // y_r = c_B' B^{-1} e_r, read off artificial column r; undo the row flip.
  for (Eigen::Index k = 0; k < t.rows(); ++k) {
    const Eigen::Index r = row_of[static_cast<std::size_t>(k)];
    double y = 0.0;
    for (Eigen::Index i = 0; i < t.rows(); ++i)
      y += phase2[basis[static_cast<std::size_t>(i)]] * t(i, n + r);
    out.dual[r] = row_sign[r] * y;
  }
  return out;
}

}  // namespace lcslab::lp
