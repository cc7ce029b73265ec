#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "duomarket/duopoly.hpp"
#include "duomarket/random_market.hpp"
#include "duomarket/welfare.hpp"

namespace duomarket {
namespace {

using A = Allocation<double>;

Market<double> single_user() { return Market<double>({{1, 1.0, {1.0, 1.0}}}, 1.0, 1.0); }

Market<double> two_users() {
  return Market<double>({{1, 1.0, {1.0, 2.0}}, {2, 1.0, {2.0, 1.0}}}, 1.0, 1.0);
}

A alloc(std::initializer_list<std::pair<double, double>> rows) {
  A q(static_cast<Index>(rows.size()), 2);
  Index i = 0;
  for (const auto& [q1, q2] : rows) {
    q(i, 0) = q1;
    q(i, 1) = q2;
    ++i;
  }
  return q;
}

TEST(TotalUtility, Examples) {
  EXPECT_NEAR(total_utility(single_user(), alloc({{1.0, 0.0}})), std::log(2.0), 1e-15);
  EXPECT_EQ(total_utility(single_user(), alloc({{0.0, 0.0}})), 0.0);
  // x = 1 for each user.
  EXPECT_NEAR(total_utility(two_users(), alloc({{1.0, 0.0}, {0.0, 1.0}})), 2 * std::log(2.0), 1e-15);
  // x = 0.5 + 1 = 1.5 for user 1, 0 for user 2: log 2.5
  const double u = total_utility(two_users(), alloc({{0.5, 2.0}, {0.0, 0.0}}));
  EXPECT_NEAR(u, std::log(2.5), 1e-15);
  EXPECT_THROW(total_utility(single_user(), alloc({{-0.1, 0.0}})), DomainError);
}

TEST(TotalUtility, TwoUsersEachServedByBothHalfway) {
  // x = 0.5/1 + 0.5/2 = 0.75 and the mirror image, so 2 log 1.75.
  EXPECT_NEAR(total_utility(two_users(), alloc({{0.5, 0.5}, {0.5, 0.5}})), 2 * std::log(1.75), 1e-15);
}

TEST(CheckKkt, PassesAtTwoUserEquilibrium) {
  const auto r = check_kkt(two_users(), alloc({{1.0, 0.0}, {0.0, 1.0}}), 0.5, 0.5);
  EXPECT_TRUE(r.feasible);
  EXPECT_TRUE(r.passes);
  EXPECT_NEAR(r.max_stationarity_residual, 0.0, 1e-15);
  EXPECT_NEAR(r.max_complementarity_residual, 0.0, 1e-15);
}

TEST(CheckKkt, DetectsWrongPrice) {
  const auto r = check_kkt(two_users(), alloc({{1.0, 0.0}, {0.0, 1.0}}), 1.0, 0.5);
  EXPECT_FALSE(r.passes);
  EXPECT_NEAR(r.max_complementarity_residual, 0.5, 1e-15);
  const auto low = check_kkt(two_users(), alloc({{1.0, 0.0}, {0.0, 1.0}}), 0.25, 0.5);
  EXPECT_FALSE(low.passes);
  EXPECT_NEAR(low.max_stationarity_residual, 1.0, 1e-15);
}

TEST(CheckKkt, DetectsClearingViolation) {
  const auto r = check_kkt(two_users(), alloc({{0.5, 0.0}, {0.0, 1.0}}), 0.5, 0.5);
  EXPECT_FALSE(r.passes);
  EXPECT_NEAR(r.clearing_residual[0], -0.5, 1e-15);
  EXPECT_EQ(r.clearing_residual[1], 0.0);
}

TEST(CheckKkt, RejectsNegativeAllocationAndBadPrices) {
  EXPECT_FALSE(check_kkt(two_users(), alloc({{1.5, -0.5}, {0.0, 1.5}}), 0.5, 0.5).feasible);
  EXPECT_FALSE(check_kkt(two_users(), alloc({{1.0, 0.0}, {0.0, 1.0}}), 0.0, 0.5).passes);
  EXPECT_THROW(check_kkt(two_users(), alloc({{1.0, 0.0}}), 0.5, 0.5), DomainError);
}

TEST(SolveSystem, SingleUserSplits) {
  const auto s = solve_system(single_user());
  EXPECT_NEAR(s.p1, 1.0 / 3.0, 1e-9);
  EXPECT_NEAR(s.p2, 1.0 / 3.0, 1e-9);
  EXPECT_NEAR(s.q(0, 0), 1.0, 1e-9);
  EXPECT_NEAR(s.q(0, 1), 1.0, 1e-9);
  ASSERT_TRUE(s.split.has_value());
  EXPECT_EQ(*s.split, 0);
}

TEST(SolveSystem, TwoUsers) {
  const auto s = solve_system(two_users());
  EXPECT_NEAR(s.p1, 0.5, 1e-9);
  EXPECT_NEAR(s.p2, 0.5, 1e-9);
  EXPECT_NEAR(s.q(0, 0), 1.0, 1e-9);
  EXPECT_NEAR(s.q(1, 1), 1.0, 1e-9);
  EXPECT_NEAR(s.q(0, 1), 0.0, 1e-9);
  EXPECT_NEAR(s.q(1, 0), 0.0, 1e-9);
}

TEST(SolveSystem, AsymmetricSupplySingleUser) {
  // The single user absorbs all 3 units: multiplier 1/(1+3).
  const Market<double> m({{1, 1.0, {1.0, 1.0}}}, 1.0, 2.0);
  const auto s = solve_system(m);
  EXPECT_NEAR(s.p1, 0.25, 1e-9);
  EXPECT_NEAR(s.p2, 0.25, 1e-9);
  EXPECT_NEAR(s.q(0, 0), 1.0, 1e-9);
  EXPECT_NEAR(s.q(0, 1), 2.0, 1e-9);
}

TEST(SolveSystem, FarUserLeavesProviderTwoToTheOther) {
  // User 1 sits next to provider 1 and very far from provider 2.
  const Market<double> m({{1, 1.0, {1.0, 1e6}}, {2, 1.0, {1.0, 1.0}}}, 1.0, 1.0);
  const auto s = solve_system(m);
  EXPECT_NEAR(s.q(0, 1), 0.0, 1e-9);
  EXPECT_NEAR(s.q(1, 1), 1.0, 1e-9);
  EXPECT_NEAR(s.q.col(0).sum(), 1.0, 1e-9);
  EXPECT_TRUE(check_kkt(m, s.q, s.p1, s.p2).passes);
}

TEST(SolveSystem, RejectsBadArguments) {
  EXPECT_THROW(solve_system(single_user(), 0.0), DomainError);
  EXPECT_THROW(solve_system(single_user(), 1e-10, 0), DomainError);
}

TEST(StabilityOracle, Examples) {
  const auto r = exhaustive_stability_oracle(two_users());
  EXPECT_TRUE(r.full_scan);
  EXPECT_EQ(r.stable_cuts, 1U);
  EXPECT_EQ(r.stable_partitions, 1U);
  EXPECT_EQ(r.stable_noncontiguous, 0U);
  ASSERT_TRUE(r.equilibrium.has_value());
  EXPECT_NEAR(r.equilibrium->p1, 0.5, 1e-15);

  const auto none = exhaustive_stability_oracle(single_user());
  EXPECT_FALSE(none.equilibrium.has_value());
  EXPECT_EQ(none.stable_partitions, 0U);
}

TEST(StabilityOracle, EnforcesCap) {
  SplitMix64 rng(3);
  EXPECT_THROW(exhaustive_stability_oracle(random_market<double>(rng, kMaxStabilityOracleUsers + 1)),
               CapExceeded);
  const auto r = exhaustive_stability_oracle(random_market<double>(rng, kMaxFullScanUsers + 1));
  EXPECT_FALSE(r.full_scan);
}

A random_clearing_allocation(SplitMix64& rng, const Market<double>& m) {
  A q(m.size(), 2);
  for (int j = 0; j < 2; ++j) {
    for (Index i = 0; i < m.size(); ++i) q(i, j) = -std::log(1.0 - rng.uniform());
    q.col(j) *= m.supply(static_cast<Side>(j)) / q.col(j).sum();
  }
  return q;
}

TEST(SocialOptimality, EquilibriumSolvesSystem) {
  SplitMix64 rng(60606);
  for (int trial = 0; trial < 150; ++trial) {
    const auto m = random_market<double>(rng, 3 + static_cast<Index>(rng.uniform() * 13));
    const auto eq = solve_nash(m);
    const auto sys = solve_system(m);
    EXPECT_LE((sys.q - eq.q).cwiseAbs().maxCoeff(), 1e-6);
    const double ue = total_utility(m, eq.q);
    const double us = total_utility(m, sys.q);
    EXPECT_LE(std::abs(ue - us), 1e-8 * std::max(1.0, std::abs(us)));
    EXPECT_TRUE(check_kkt(m, eq.q, eq.p1, eq.p2).passes);
    for (int k = 0; k < 50; ++k) {
      EXPECT_GE(ue, total_utility(m, random_clearing_allocation(rng, m)) - 1e-12 * std::abs(ue));
    }
  }
}

// Shifting a little resource between two users on one provider keeps both
// markets cleared; the equilibrium is a maximum, so U_T cannot rise beyond
// second order.
TEST(SocialOptimality, FiniteDifferenceShiftsDoNotImprove) {
  SplitMix64 rng(777);
  constexpr double kStep = 1e-5;
  for (int trial = 0; trial < 100; ++trial) {
    const auto m = random_market<double>(rng, 2 + static_cast<Index>(rng.uniform() * 10));
    const auto eq = solve_nash(m);
    const double base = total_utility(m, eq.q);
    for (int j = 0; j < 2; ++j) {
      for (Index from = 0; from < m.size(); ++from) {
        if (eq.q(from, j) < kStep) continue;
        for (Index to = 0; to < m.size(); ++to) {
          if (to == from) continue;
          A q = eq.q;
          q(from, j) -= kStep;
          q(to, j) += kStep;
          EXPECT_LE(total_utility(m, q), base + 1e-8 * std::max(1.0, std::abs(base)));
        }
      }
    }
  }
}

}  // namespace
}  // namespace duomarket
