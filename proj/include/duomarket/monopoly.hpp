#ifndef DUOMARKET_MONOPOLY_HPP
#define DUOMARKET_MONOPOLY_HPP

// Single-provider pricing: demand, utility and the market-clearing price.

#include <Eigen/Dense>

#include <cmath>
#include <span>
#include <vector>

#include "duomarket/errors.hpp"
#include "duomarket/market.hpp"
#include "duomarket/tolerances.hpp"

namespace duomarket {

/// Utility-maximising purchase (a/p - g)^+.
template <typename Scalar>
Scalar demand(Scalar a, Scalar g, Scalar p) {
  if (!(p > Scalar(0))) throw DomainError("price must be positive");
  const Scalar q = a / p - g;
  return q > Scalar(0) ? q : Scalar(0);
}

/// a*log(1 + q/g_j) - p*q for the given provider.
template <typename Scalar>
Scalar utility(const User<Scalar>& user, Side provider, Scalar p, Scalar q) {
  if (!(p > Scalar(0))) throw DomainError("price must be positive");
  if (q < Scalar(0)) throw DomainError("purchase must be nonnegative");
  using std::log1p;
  return user.a * log1p(q / user.offset(provider)) - p * q;
}

template <typename Scalar>
struct PriceResult {
  Scalar price = Scalar(0);
  /// Positions (into the priced user list) of users with positive demand at `price`.
  std::vector<Index> active;
  /// Fictitious price at every iteration of the removal loop; non-decreasing.
  std::vector<Scalar> trace;
};

/// sum(a) / (sum(g) + Q): the clearing price if negative purchases were allowed.
template <typename DerivedA, typename DerivedG>
typename DerivedA::Scalar fictitious_price(const Eigen::DenseBase<DerivedA>& a,
                                           const Eigen::DenseBase<DerivedG>& g,
                                           typename DerivedA::Scalar supply) {
  using Scalar = typename DerivedA::Scalar;
  if (a.size() == 0) return Scalar(0);
  return a.sum() / (g.sum() + supply);
}

/// Market-clearing price of one provider selling `supply` to the users (a_i, g_i).
///
/// Starts from the fictitious price of the whole set and repeatedly drops every
/// user whose demand is negative at the current fictitious price. Dropping a
/// negative-demand user raises the fictitious price, so dropped users never
/// come back and the loop ends after at most n passes with
///   sum_{active} (a_i/p - g_i) = supply.
/// An empty set prices at 0.
template <typename DerivedA, typename DerivedG>
PriceResult<typename DerivedA::Scalar> optimal_price(const Eigen::DenseBase<DerivedA>& a,
                                                     const Eigen::DenseBase<DerivedG>& g,
                                                     typename DerivedA::Scalar supply) {
  using Scalar = typename DerivedA::Scalar;
  if (!(supply > Scalar(0))) throw DomainError("supply must be positive");
  eigen_assert(a.size() == g.size());

  PriceResult<Scalar> result;
  const Index n = a.size();
  std::vector<Index> active(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) active[static_cast<std::size_t>(i)] = i;

  const Scalar guard = Scalar(tolerance::demand_sign);
  while (!active.empty()) {
    Scalar sum_a(0);
    Scalar sum_g(0);
    for (Index i : active) {
      sum_a += a(i);
      sum_g += g(i);
    }
    const Scalar p = sum_a / (sum_g + supply);
    result.trace.push_back(p);

    std::vector<Index> kept;
    kept.reserve(active.size());
    for (Index i : active) {
      const Scalar cost = p * g(i);
      if (!(a(i) - cost < -guard * cost)) kept.push_back(i);
    }
    if (kept.size() == active.size()) {
      result.price = p;
      break;
    }
    active.swap(kept);
  }
  result.active = std::move(active);
  return result;
}

namespace detail {

template <typename Scalar>
void gather(std::span<const User<Scalar>> users, Side side, Vector<Scalar>& a, Vector<Scalar>& g) {
  const auto n = static_cast<Index>(users.size());
  a.resize(n);
  g.resize(n);
  for (Index i = 0; i < n; ++i) {
    a(i) = users[static_cast<std::size_t>(i)].a;
    g(i) = users[static_cast<std::size_t>(i)].offset(side);
  }
}

template <typename Scalar>
void gather(const Market<Scalar>& market, Side side, std::span<const Index> members,
            Vector<Scalar>& a, Vector<Scalar>& g) {
  const auto n = static_cast<Index>(members.size());
  a.resize(n);
  g.resize(n);
  const auto col = market.g(side);
  for (Index k = 0; k < n; ++k) {
    const Index i = members[static_cast<std::size_t>(k)];
    a(k) = market.a()(i);
    g(k) = col(i);
  }
}

}  // namespace detail

template <typename Scalar>
Scalar fictitious_price(std::span<const User<Scalar>> users, Side side, Scalar supply) {
  Vector<Scalar> a, g;
  detail::gather(users, side, a, g);
  return fictitious_price(a, g, supply);
}

/// `active` holds positions into `users`.
template <typename Scalar>
PriceResult<Scalar> optimal_price(std::span<const User<Scalar>> users, Side side, Scalar supply) {
  Vector<Scalar> a, g;
  detail::gather(users, side, a, g);
  return optimal_price(a, g, supply);
}

/// Price of `side` when it serves the market users at `members`; `active`
/// holds market positions.
template <typename Scalar>
PriceResult<Scalar> optimal_price(const Market<Scalar>& market, Side side,
                                  std::span<const Index> members) {
  Vector<Scalar> a, g;
  detail::gather(market, side, members, a, g);
  auto result = optimal_price(a, g, market.supply(side));
  for (auto& i : result.active) i = members[static_cast<std::size_t>(i)];
  return result;
}

/// Independent check of the clearing price: bisection on
///   p*Q = sum_i (a_i - p*g_i)^+
/// over (0, max_i a_i/g_i]. The left side increases and the right side does
/// not, so the root is unique.
template <typename DerivedA, typename DerivedG>
typename DerivedA::Scalar bisection_price_oracle(const Eigen::DenseBase<DerivedA>& a,
                                                 const Eigen::DenseBase<DerivedG>& g,
                                                 typename DerivedA::Scalar supply,
                                                 typename DerivedA::Scalar tol) {
  using Scalar = typename DerivedA::Scalar;
  if (a.size() == 0) throw DomainError("bisection oracle needs at least one user");
  if (!(supply > Scalar(0))) throw DomainError("supply must be positive");
  if (!(tol > Scalar(0))) throw DomainError("tolerance must be positive");

  const auto excess = [&](Scalar p) {
    return p * supply - (a.derived().array() - p * g.derived().array()).max(Scalar(0)).sum();
  };
  Scalar lo(0);
  Scalar hi = (a.derived().array() / g.derived().array()).maxCoeff();
  for (int it = 0; hi - lo > tol; ++it) {
    const Scalar mid = (lo + hi) / Scalar(2);
    if (it > 100000 || !(mid > lo && mid < hi)) {
      throw ConvergenceError("bisection_price_oracle: tolerance below representable spacing");
    }
    (excess(mid) < Scalar(0) ? lo : hi) = mid;
  }
  return (lo + hi) / Scalar(2);
}

template <typename Scalar>
Scalar bisection_price_oracle(std::span<const User<Scalar>> users, Side side, Scalar supply,
                              Scalar tol) {
  Vector<Scalar> a, g;
  detail::gather(users, side, a, g);
  return bisection_price_oracle(a, g, supply, tol);
}

}  // namespace duomarket

#endif  // DUOMARKET_MONOPOLY_HPP
