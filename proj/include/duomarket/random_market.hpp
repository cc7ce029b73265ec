#ifndef DUOMARKET_RANDOM_MARKET_HPP
#define DUOMARKET_RANDOM_MARKET_HPP

#include <utility>
#include <vector>

#include "duomarket/market.hpp"
#include "duomarket/scenario.hpp"

namespace duomarket {

struct RandomMarketRanges {
  std::pair<double, double> a{0.01, 10.0};
  std::pair<double, double> g{0.01, 10.0};
  std::pair<double, double> supply{0.1, 100.0};
};

/// Users with a, g1, g2 uniform over the given ranges; ids 1..n.
template <typename Scalar = double>
std::vector<User<Scalar>> random_users(SplitMix64& rng, Index n, const RandomMarketRanges& r = {}) {
  std::vector<User<Scalar>> users;
  users.reserve(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    User<Scalar> u;
    u.id = static_cast<int>(i + 1);
    u.a = Scalar(rng.uniform(r.a.first, r.a.second));
    u.g[0] = Scalar(rng.uniform(r.g.first, r.g.second));
    u.g[1] = Scalar(rng.uniform(r.g.first, r.g.second));
    users.push_back(u);
  }
  return users;
}

/// A random valid market (alpha ties are redrawn, they have probability ~0).
template <typename Scalar = double>
Market<Scalar> random_market(SplitMix64& rng, Index n, const RandomMarketRanges& r = {}) {
  for (;;) {
    auto users = random_users<Scalar>(rng, n, r);
    const Scalar q1 = Scalar(rng.uniform(r.supply.first, r.supply.second));
    const Scalar q2 = Scalar(rng.uniform(r.supply.first, r.supply.second));
    try {
      return Market<Scalar>(std::move(users), q1, q2);
    } catch (const ValidationError&) {
    }
  }
}

}  // namespace duomarket

#endif  // DUOMARKET_RANDOM_MARKET_HPP
