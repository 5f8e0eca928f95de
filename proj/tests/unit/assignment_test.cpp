#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "mdpn/assignment.hpp"
#include "mdpn/error.hpp"
#include "mdpn/random.hpp"
#include "support/oracles.hpp"

namespace mdpn {
namespace {

TEST(Hungarian, ClassicThreeByThree) {
  const CostMatrix c(3, 3, {4, 1, 3, 2, 0, 5, 3, 2, 2});
  const auto a = solve_hungarian(c);
  EXPECT_EQ(a.row_to_col, (std::vector<int>{1, 0, 2}));
  EXPECT_DOUBLE_EQ(a.total_cost(c), 5.0);
}

TEST(Hungarian, RectangularLeavesRowsUnassigned) {
  const CostMatrix c(3, 2, {1, 9, 9, 9, 9, 1});
  const auto a = solve_hungarian(c);
  EXPECT_EQ(a.row_to_col, (std::vector<int>{0, Assignment::kUnassigned, 1}));
  EXPECT_EQ(a.matched(), 2u);
}

TEST(Hungarian, WideMatrix) {
  const CostMatrix c(2, 4, {5, 5, 1, 5, 5, 0, 5, 5});
  EXPECT_EQ(solve_hungarian(c).row_to_col, (std::vector<int>{2, 1}));
}

TEST(Hungarian, EmptyAndDegenerate) {
  EXPECT_TRUE(solve_hungarian(CostMatrix(0, 0)).row_to_col.empty());
  EXPECT_EQ(solve_hungarian(CostMatrix(2, 0)).row_to_col, (std::vector<int>{-1, -1}));
  EXPECT_EQ(solve_hungarian(CostMatrix(0, 3)).matched(), 0u);
}

TEST(Hungarian, TiesResolveDeterministically) {
  const CostMatrix c(3, 3, 1.0);
  const auto a = solve_hungarian(c);
  EXPECT_EQ(a.row_to_col, solve_hungarian(c).row_to_col);
  EXPECT_TRUE(oracle::is_valid_matching(a, c));
}

TEST(Hungarian, RejectsNonFinite) {
  CostMatrix c(2, 2, 1.0);
  c(0, 1) = std::numeric_limits<double>::infinity();
  EXPECT_THROW(solve_hungarian(c), Error);
  c(0, 1) = std::nan("");
  EXPECT_THROW(solve_hungarian(c), Error);
}

TEST(Hungarian, MatchesBruteForceOnRealCosts) {
  Rng rng(99);
  for (int t = 0; t < 300; ++t) {
    const std::size_t r = 1 + rng.index(6);
    const std::size_t c = 1 + rng.index(6);
    CostMatrix m(r, c);
    for (std::size_t i = 0; i < r; ++i) {
      for (std::size_t j = 0; j < c; ++j) m(i, j) = rng.uniform(-1.0, 1.0);
    }
    const auto a = solve_hungarian(m);
    ASSERT_TRUE(oracle::is_valid_matching(a, m));
    EXPECT_NEAR(oracle::matching_cost(a, m), oracle::brute_force_assignment(m), 1e-12);
  }
}

// Greedy is not optimal in general: this is the standard counterexample.
TEST(Greedy, TakesCheapestCellFirst) {
  const CostMatrix c(2, 2, {1, 2, 2, 10});
  EXPECT_EQ(solve_greedy(c).row_to_col, (std::vector<int>{0, 1}));
  EXPECT_EQ(solve_hungarian(c).row_to_col, (std::vector<int>{1, 0}));
}

TEST(Greedy, TieBreaksByRowThenColumn) {
  const CostMatrix c(2, 3, {3, 1, 1, 1, 3, 3});
  EXPECT_EQ(solve_greedy(c).row_to_col, (std::vector<int>{1, 0}));
}

TEST(Greedy, NeverBeatsHungarian) {
  Rng rng(1);
  for (int t = 0; t < 200; ++t) {
    CostMatrix m(1 + rng.index(5), 1 + rng.index(5));
    for (std::size_t i = 0; i < m.rows(); ++i) {
      for (std::size_t j = 0; j < m.cols(); ++j) m(i, j) = std::floor(rng.uniform(0, 10));
    }
    const auto g = solve_greedy(m);
    ASSERT_TRUE(oracle::is_valid_matching(g, m));
    EXPECT_GE(g.total_cost(m), solve_hungarian(m).total_cost(m));
  }
}

}  // namespace
}  // namespace mdpn
