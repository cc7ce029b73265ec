#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "duomarket/market.hpp"
#include "duomarket/monopoly.hpp"
#include "duomarket/random_market.hpp"
#include "oracles.hpp"

namespace duomarket {
namespace {

using U = User<double>;

std::vector<U> users(std::initializer_list<std::pair<double, double>> ag) {
  std::vector<U> out;
  int id = 1;
  for (const auto& [a, g] : ag) out.push_back({id++, a, {g, g}});
  return out;
}

TEST(Demand, Formula) {
  EXPECT_DOUBLE_EQ(demand(2.0, 1.0, 1.0), 1.0);
  EXPECT_DOUBLE_EQ(demand(1.0, 1.0, 2.0), 0.0);
  EXPECT_DOUBLE_EQ(demand(1.0, 0.5, 0.8), 0.75);
}

TEST(Demand, RejectsNonPositivePrice) {
  EXPECT_THROW(demand(1.0, 1.0, 0.0), DomainError);
  EXPECT_THROW(demand(1.0, 1.0, -1.0), DomainError);
}

TEST(Demand, ZeroFromChokePriceOn) {
  for (double p = 2.0; p < 10.0; p += 0.37) EXPECT_EQ(demand(1.0, 0.5, p), 0.0);
}

TEST(Utility, Formula) {
  const U u{1, 1.0, {1.0, 1.0}};
  EXPECT_NEAR(utility(u, Side::one, 0.5, 1.0), std::log(2.0) - 0.5, 1e-15);
  EXPECT_EQ(utility(u, Side::one, 0.5, 0.0), 0.0);
  const U v{2, 2.0, {1.0, 1.0}};
  EXPECT_NEAR(utility(v, Side::two, 1.0, 1.0), 2 * std::log(2.0) - 1.0, 1e-15);
  EXPECT_THROW(utility(u, Side::one, 0.5, -1.0), DomainError);
}

TEST(Utility, MaximisedAtDemand) {
  const U u{1, 1.7, {0.4, 3.0}};
  const double p = 0.9;
  const double best = demand(u.a, u.g[0], p);
  const double at_best = utility(u, Side::one, p, best);
  for (double dq : {-0.1, -0.01, 0.01, 0.1}) {
    EXPECT_LT(utility(u, Side::one, p, std::max(0.0, best + dq)), at_best);
  }
}

TEST(FictitiousPrice, Examples) {
  const auto one = users({{1.0, 1.0}});
  EXPECT_DOUBLE_EQ(fictitious_price<double>(one, Side::one, 1.0), 0.5);
  EXPECT_EQ(fictitious_price<double>(std::vector<U>{}, Side::one, 3.0), 0.0);
  const auto two = users({{1.0, 1.0}, {0.01, 1.0}});
  EXPECT_NEAR(fictitious_price<double>(two, Side::one, 1.0), 1.01 / 3.0, 1e-15);
}

TEST(OptimalPrice, SingleUser) {
  const auto r = optimal_price<double>(users({{1.0, 1.0}}), Side::one, 1.0);
  EXPECT_DOUBLE_EQ(r.price, 0.5);
  EXPECT_EQ(r.active, (std::vector<Index>{0}));
}

TEST(OptimalPrice, DropsNegativeDemandUser) {
  const auto set = users({{1.0, 1.0}, {0.01, 1.0}});
  // Independent value: bisection on p*Q = sum (a - p g)^+.
  const double expected = oracle::bisect(
      [](double p) { return p * 1.0 - std::max(1.0 - p, 0.0) - std::max(0.01 - p, 0.0); }, 0.0, 1.0);
  ASSERT_NEAR(expected, 0.5, 1e-15);
  const auto r = optimal_price<double>(set, Side::one, 1.0);
  EXPECT_NEAR(r.price, expected, 1e-15);
  EXPECT_EQ(r.active, (std::vector<Index>{0}));
  ASSERT_EQ(r.trace.size(), 2U);
  EXPECT_LT(r.trace[0], r.trace[1]);
}

TEST(OptimalPrice, EmptySetPricesAtZero) {
  const auto r = optimal_price<double>(std::vector<U>{}, Side::one, 5.0);
  EXPECT_EQ(r.price, 0.0);
  EXPECT_TRUE(r.active.empty());
}

TEST(OptimalPrice, RejectsNonPositiveSupply) {
  EXPECT_THROW(optimal_price<double>(users({{1.0, 1.0}}), Side::one, 0.0), DomainError);
}

TEST(BisectionOracle, Examples) {
  EXPECT_NEAR(bisection_price_oracle<double>(users({{1.0, 1.0}}), Side::one, 1.0, 1e-12), 0.5, 1e-12);
  EXPECT_NEAR(bisection_price_oracle<double>(users({{1.0, 1.0}, {0.01, 1.0}}), Side::one, 1.0, 1e-12),
              0.5, 1e-12);
  EXPECT_NEAR(bisection_price_oracle<double>(users({{3.0, 2.0}}), Side::one, 4.0, 1e-12), 0.5, 1e-12);
}

TEST(BisectionOracle, RefusesUnreachableTolerance) {
  EXPECT_THROW(bisection_price_oracle<double>(users({{1.0, 1.0}}), Side::one, 1.0, 1e-300),
               ConvergenceError);
  EXPECT_THROW(bisection_price_oracle<double>(std::vector<U>{}, Side::one, 1.0, 1e-9), DomainError);
}

class RandomSets : public ::testing::Test {
 protected:
  SplitMix64 rng{20240601};
  std::vector<U> draw(Index n) { return random_users<double>(rng, n); }
  double supply() { return rng.uniform(0.1, 100.0); }
};

TEST_F(RandomSets, MatchesBisectionOracleAndClears) {
  for (int trial = 0; trial < 300; ++trial) {
    const auto set = draw(1 + static_cast<Index>(rng.uniform() * 50));
    const double q = supply();
    const auto r = optimal_price<double>(set, Side::one, q);
    const double p = bisection_price_oracle<double>(set, Side::one, q, 1e-13 * std::max(1.0, r.price));
    EXPECT_NEAR(r.price, p, 1e-9 * std::max(1.0, p));

    double cleared = 0;
    for (Index i : r.active) cleared += demand(set[static_cast<std::size_t>(i)].a, set[static_cast<std::size_t>(i)].g[0], r.price);
    EXPECT_NEAR(cleared, q, 1e-9 * q);

    for (std::size_t i = 0; i < set.size(); ++i) {
      const bool active = std::find(r.active.begin(), r.active.end(), static_cast<Index>(i)) != r.active.end();
      const double d = set[i].a / r.price - set[i].g[0];
      if (active) {
        EXPECT_GT(d, -1e-12 * set[i].g[0]);
      } else {
        EXPECT_LE(d, 0.0);
      }
    }
    for (std::size_t k = 1; k < r.trace.size(); ++k) EXPECT_LT(r.trace[k - 1], r.trace[k]);
  }
}

TEST_F(RandomSets, MatchesSubsetEnumeration) {
  for (int trial = 0; trial < 100; ++trial) {
    const auto set = draw(1 + static_cast<Index>(rng.uniform() * 10));
    const double q = supply();
    std::vector<double> a, g;
    for (const auto& u : set) {
      a.push_back(u.a);
      g.push_back(u.g[1]);
    }
    EXPECT_NEAR(optimal_price<double>(set, Side::two, q).price, oracle::subset_price(a, g, q),
                1e-12 * oracle::subset_price(a, g, q));
  }
}

TEST_F(RandomSets, MorePeopleNeverLowerThePrice) {
  for (int trial = 0; trial < 300; ++trial) {
    const auto big = draw(2 + static_cast<Index>(rng.uniform() * 30));
    std::vector<U> small;
    for (const auto& u : big) {
      if (rng.uniform() < 0.5) small.push_back(u);
    }
    const double q = supply();
    EXPECT_GE(optimal_price<double>(big, Side::one, q).price,
              optimal_price<double>(small, Side::one, q).price - 1e-12);
  }
}

TEST_F(RandomSets, ActiveSetIsAFixedPoint) {
  for (int trial = 0; trial < 200; ++trial) {
    const auto set = draw(1 + static_cast<Index>(rng.uniform() * 40));
    const double q = supply();
    const auto full = optimal_price<double>(set, Side::one, q);
    std::vector<U> active;
    for (Index i : full.active) active.push_back(set[static_cast<std::size_t>(i)]);
    EXPECT_NEAR(optimal_price<double>(active, Side::one, q).price, full.price, 1e-12 * full.price);
  }
}

TEST(Market, RejectsInvalidInput) {
  EXPECT_THROW(Market<double>({}, 1.0, 1.0), ValidationError);
  EXPECT_THROW(Market<double>({{1, 1.0, {1.0, 2.0}}}, 0.0, 1.0), ValidationError);
  EXPECT_THROW(Market<double>({{1, -1.0, {1.0, 2.0}}}, 1.0, 1.0), ValidationError);
  EXPECT_THROW(Market<double>({{1, 1.0, {1.0, 2.0}}, {1, 1.0, {2.0, 1.0}}}, 1.0, 1.0), ValidationError);
  // Same alpha = 0.5.
  EXPECT_THROW(Market<double>({{1, 1.0, {1.0, 2.0}}, {2, 3.0, {2.0, 4.0}}}, 1.0, 1.0), ValidationError);
}

TEST(Market, SortsByAlpha) {
  const Market<double> m({{7, 1.0, {3.0, 1.0}}, {8, 1.0, {0.5, 1.0}}, {9, 1.0, {1.5, 1.0}}}, 1.0, 1.0);
  EXPECT_EQ(m.by_alpha(), (std::vector<Index>{1, 2, 0}));
  EXPECT_EQ(m.position_of(9), 2);
  EXPECT_EQ(m.position_of(10), -1);
}

TEST(LongDouble, CoreInstantiates) {
  std::vector<User<long double>> set{{1, 1.0L, {1.0L, 1.0L}}, {2, 0.01L, {1.0L, 1.0L}}};
  EXPECT_NEAR(static_cast<double>(optimal_price<long double>(set, Side::one, 1.0L).price), 0.5, 1e-18);
}

}  // namespace
}  // namespace duomarket
