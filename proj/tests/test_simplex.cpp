#include <cmath>
#include <functional>
#include <limits>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "graspkit/rng.hpp"
#include "graspkit/simplex.hpp"

using namespace graspkit;
using Lp = LinearProgram<double>;

namespace {

Eigen::MatrixXd rows(std::initializer_list<std::initializer_list<double>> r) {
  Eigen::MatrixXd m(r.size(), r.begin()->size());
  int i = 0;
  for (const auto& row : r) {
    int j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(v.size());
  int i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

// Vertex enumeration over all 3-subsets of active constraints (n = 3).
double brute_min(const Lp& lp, bool& feasible) {
  const int n = 3;
  Eigen::MatrixXd A(lp.A_ub.rows() + n, n);
  Eigen::VectorXd b(lp.A_ub.rows() + n);
  A << lp.A_ub, -Eigen::MatrixXd::Identity(n, n);
  b << lp.b_ub, Eigen::VectorXd::Zero(n);
  double best = std::numeric_limits<double>::infinity();
  feasible = false;
  const int m = static_cast<int>(A.rows());
  // Equality rows are always active; fill the remaining rank from inequalities.
  const int need = n - static_cast<int>(lp.A_eq.rows());
  std::vector<int> idx(need);
  std::function<void(int, int)> rec = [&](int start, int depth) {
    if (depth == need) {
      Eigen::MatrixXd M(n, n);
      Eigen::VectorXd r(n);
      int k = 0;
      for (int e = 0; e < lp.A_eq.rows(); ++e, ++k) {
        M.row(k) = lp.A_eq.row(e);
        r(k) = lp.b_eq(e);
      }
      for (int i : idx) {
        M.row(k) = A.row(i);
        r(k++) = b(i);
      }
      Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
      if (lu.rank() < n) return;
      const Eigen::VectorXd x = lu.solve(r);
      if (((A * x - b).array() > 1e-9).any()) return;
      if (lp.A_eq.rows() && (lp.A_eq * x - lp.b_eq).cwiseAbs().maxCoeff() > 1e-9) return;
      feasible = true;
      best = std::min(best, lp.c.dot(x));
      return;
    }
    for (int i = start; i < m; ++i) {
      idx[depth] = i;
      rec(i + 1, depth + 1);
    }
  };
  rec(0, 0);
  return best;
}

}  // namespace

TEST(Simplex, TextbookMaximization) {
  // max 3x + 5y s.t. x <= 4, 2y <= 12, 3x + 2y <= 18  -> (2, 6), value 36
  Lp lp;
  lp.c = vec({-3, -5});
  lp.A_ub = rows({{1, 0}, {0, 2}, {3, 2}});
  lp.b_ub = vec({4, 12, 18});
  const auto r = solve_lp(lp);
  ASSERT_EQ(r.status, LpStatus::Optimal);
  EXPECT_NEAR(r.objective, -36.0, 1e-12);
  EXPECT_NEAR(r.x(0), 2.0, 1e-12);
  EXPECT_NEAR(r.x(1), 6.0, 1e-12);
}

TEST(Simplex, EqualityWithNegativeRhs) {
  // min x + y s.t. -x - 2y = -4 -> y = 2, x = 0
  Lp lp;
  lp.c = vec({1, 1});
  lp.A_eq = rows({{-1, -2}});
  lp.b_eq = vec({-4});
  const auto r = solve_lp(lp);
  ASSERT_EQ(r.status, LpStatus::Optimal);
  EXPECT_NEAR(r.objective, 2.0, 1e-12);
  EXPECT_NEAR(r.x(1), 2.0, 1e-12);
}

TEST(Simplex, InfeasibleAndUnbounded) {
  Lp inf;
  inf.c = vec({1, 1});
  inf.A_eq = rows({{1, 1}});
  inf.b_eq = vec({2});
  inf.A_ub = rows({{1, 1}});
  inf.b_ub = vec({1});
  const auto r = solve_lp(inf);
  EXPECT_EQ(r.status, LpStatus::Infeasible);
  EXPECT_NEAR(r.infeasibility, 1.0, 1e-12);

  Lp unb;
  unb.c = vec({-1, 0});
  unb.A_ub = rows({{0, 1}});
  unb.b_ub = vec({1});
  EXPECT_EQ(solve_lp(unb).status, LpStatus::Unbounded);
}

TEST(Simplex, DegenerateCyclingExample) {
  // Beale's example cycles under the largest-coefficient rule; Bland terminates.
  Lp lp;
  lp.c = vec({-0.75, 150, -0.02, 6});
  lp.A_ub = rows({{0.25, -60, -0.04, 9}, {0.5, -90, -0.02, 3}, {0, 0, 1, 0}});
  lp.b_ub = vec({0, 0, 1});
  const auto r = solve_lp(lp);
  ASSERT_EQ(r.status, LpStatus::Optimal);
  EXPECT_NEAR(r.objective, -0.05, 1e-12);
}

TEST(Simplex, RedundantEqualities) {
  Lp lp;
  lp.c = vec({1, 2, 3});
  lp.A_eq = rows({{1, 1, 1}, {2, 2, 2}});
  lp.b_eq = vec({1, 2});
  const auto r = solve_lp(lp);
  ASSERT_EQ(r.status, LpStatus::Optimal);
  EXPECT_NEAR(r.objective, 1.0, 1e-12);
}

TEST(Simplex, IterationCap) {
  Lp lp;
  lp.c = vec({-3, -5});
  lp.A_ub = rows({{1, 0}, {0, 2}, {3, 2}});
  lp.b_ub = vec({4, 12, 18});
  SimplexOptions opt;
  opt.max_iterations = 1;
  EXPECT_EQ(solve_lp(lp, opt).status, LpStatus::IterationLimit);
}

TEST(Simplex, RandomLpsMatchVertexEnumeration) {
  Rng rng(2024);
  int feasible_cases = 0;
  for (int trial = 0; trial < 300; ++trial) {
    Lp lp;
    lp.c = Eigen::VectorXd(3);
    for (int j = 0; j < 3; ++j) lp.c(j) = rng.uniform(-1, 1);
    const int m = 2 + static_cast<int>(rng.below(3));
    lp.A_ub = Eigen::MatrixXd(m + 3, 3);
    lp.b_ub = Eigen::VectorXd(m + 3);
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < 3; ++j) lp.A_ub(i, j) = rng.uniform(-1, 1);
      lp.b_ub(i) = rng.uniform(-0.5, 1);
    }
    // Box rows keep every problem bounded.
    lp.A_ub.bottomRows(3) = Eigen::MatrixXd::Identity(3, 3);
    lp.b_ub.tail(3).setConstant(5.0);
    if (trial % 3 == 0) {
      lp.A_eq = Eigen::MatrixXd(1, 3);
      for (int j = 0; j < 3; ++j) lp.A_eq(0, j) = rng.uniform(-1, 1);
      lp.b_eq = Eigen::VectorXd::Constant(1, rng.uniform(-1, 1));
    }
    bool feasible = false;
    const double oracle = brute_min(lp, feasible);
    const auto r = solve_lp(lp);
    if (!feasible) {
      EXPECT_EQ(r.status, LpStatus::Infeasible) << "trial " << trial;
      continue;
    }
    ++feasible_cases;
    ASSERT_EQ(r.status, LpStatus::Optimal) << "trial " << trial;
    EXPECT_NEAR(r.objective, oracle, 1e-9) << "trial " << trial;
    EXPECT_LE((lp.A_ub * r.x - lp.b_ub).maxCoeff(), 1e-9);
  }
  EXPECT_GT(feasible_cases, 100);
}

TEST(Simplex, LongDoubleInstantiation) {
  LinearProgram<long double> lp;
  lp.c = Eigen::Matrix<long double, 2, 1>(-3, -5);
  lp.A_ub = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>(3, 2);
  lp.A_ub << 1, 0, 0, 2, 3, 2;
  lp.b_ub = Eigen::Matrix<long double, 3, 1>(4, 12, 18);
  const auto r = solve_lp(lp);
  ASSERT_EQ(r.status, LpStatus::Optimal);
  EXPECT_NEAR(static_cast<double>(r.objective), -36.0, 1e-15);
}
