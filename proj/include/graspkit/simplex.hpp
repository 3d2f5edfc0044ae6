#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Core>

namespace graspkit {

/// minimize c'x  s.t.  A_eq x = b_eq,  A_ub x <= b_ub,  x >= 0
template <typename Scalar>
struct LinearProgram {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  Vector c;
  Matrix A_eq;
  Vector b_eq;
  Matrix A_ub;
  Vector b_ub;
};

enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit };

template <typename Scalar>
struct LpResult {
  LpStatus status = LpStatus::Infeasible;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> x;
  Scalar objective = 0;
  /// Optimal phase-one value (sum of artificials); > feasibility_tol means infeasible.
  Scalar infeasibility = 0;
  int iterations = 0;
};

struct SimplexOptions {
  double feasibility_tol = 1e-8;
  double pivot_tol = 1e-12;
  double cost_tol = 1e-11;
  int max_iterations = 20000;
};

/// Dense two-phase simplex with Bland's rule.
template <typename Scalar>
LpResult<Scalar> solve_lp(const LinearProgram<Scalar>& lp, const SimplexOptions& opt = {}) {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const Eigen::Index n = lp.c.size();
  const Eigen::Index m_eq = lp.A_eq.rows();
  const Eigen::Index m_ub = lp.A_ub.rows();
  const Eigen::Index m = m_eq + m_ub;
  const Eigen::Index n_slack = m_ub;
  const Eigen::Index art0 = n + n_slack;  // first artificial column
  const Eigen::Index cols = art0 + m;
  const Eigen::Index rhs = cols;

  Matrix T = Matrix::Zero(m + 1, cols + 1);
  if (m_eq > 0) {
    T.block(0, 0, m_eq, n) = lp.A_eq;
    T.block(0, rhs, m_eq, 1) = lp.b_eq;
  }
  if (m_ub > 0) {
    T.block(m_eq, 0, m_ub, n) = lp.A_ub;
    T.block(m_eq, n, m_ub, m_ub).setIdentity();
    T.block(m_eq, rhs, m_ub, 1) = lp.b_ub;
  }
  for (Eigen::Index i = 0; i < m; ++i) {
    if (T(i, rhs) < 0) T.row(i) *= Scalar(-1);
    T(i, art0 + i) = 1;
  }
  std::vector<Eigen::Index> basis(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i) basis[i] = art0 + i;

  LpResult<Scalar> result;
  const Scalar pivot_tol(opt.pivot_tol);
  const Scalar cost_tol(opt.cost_tol);

  auto pivot = [&](Eigen::Index r, Eigen::Index c) {
    T.row(r) /= T(r, c);
    for (Eigen::Index i = 0; i <= m; ++i)
      if (i != r && T(i, c) != Scalar(0)) T.row(i) -= T(i, c) * T.row(r);
    basis[r] = c;
  };

  // Returns Optimal, Unbounded or IterationLimit.
  auto run = [&](Eigen::Index allowed_cols) {
    while (true) {
      if (result.iterations >= opt.max_iterations) return LpStatus::IterationLimit;
      Eigen::Index enter = -1;
      for (Eigen::Index j = 0; j < allowed_cols; ++j)
        if (T(m, j) < -cost_tol) {
          enter = j;
          break;
        }
      if (enter < 0) return LpStatus::Optimal;
      Eigen::Index leave = -1;
      Scalar best = std::numeric_limits<Scalar>::infinity();
      for (Eigen::Index i = 0; i < m; ++i) {
        if (T(i, enter) <= pivot_tol) continue;
        const Scalar ratio = T(i, rhs) / T(i, enter);
        if (leave < 0) {
          best = ratio;
          leave = i;
          continue;
        }
        const Scalar tie = Scalar(1e-14) * (Scalar(1) + std::abs(best));
        if (ratio < best - tie || (std::abs(ratio - best) <= tie && basis[i] < basis[leave])) {
          best = ratio;
          leave = i;
        }
      }
      if (leave < 0) return LpStatus::Unbounded;
      pivot(leave, enter);
      ++result.iterations;
    }
  };

  // Phase one: minimize the artificial sum.
  for (Eigen::Index j = 0; j <= cols; ++j) {
    if (j >= art0 && j < cols) continue;
    T(m, j) = -T.block(0, j, m, 1).sum();
  }
  LpStatus st = run(cols);
  if (st == LpStatus::IterationLimit) {
    result.status = st;
    return result;
  }
  result.infeasibility = -T(m, rhs);
  if (result.infeasibility > Scalar(opt.feasibility_tol)) {
    result.status = LpStatus::Infeasible;
    return result;
  }

  // Push remaining artificials out of the basis; rows where that is
  // impossible are redundant and stay inert.
  for (Eigen::Index i = 0; i < m; ++i) {
    if (basis[i] < art0) continue;
    for (Eigen::Index j = 0; j < art0; ++j)
      if (std::abs(T(i, j)) > pivot_tol) {
        pivot(i, j);
        break;
      }
  }

  // Phase two.
  T.row(m).setZero();
  for (Eigen::Index j = 0; j < n; ++j) T(m, j) = lp.c(j);
  for (Eigen::Index i = 0; i < m; ++i) {
    const Eigen::Index b = basis[i];
    const Scalar cb = b < n ? lp.c(b) : Scalar(0);
    if (cb != Scalar(0)) T.row(m) -= cb * T.row(i);
  }
  st = run(art0);
  result.status = st;
  result.x = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(n);
  for (Eigen::Index i = 0; i < m; ++i)
    if (basis[i] < n) result.x(basis[i]) = std::max(T(i, rhs), Scalar(0));
  result.objective = lp.c.dot(result.x);
  return result;
}

}  // namespace graspkit
