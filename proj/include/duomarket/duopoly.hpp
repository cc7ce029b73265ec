#ifndef DUOMARKET_DUOPOLY_HPP
#define DUOMARKET_DUOPOLY_HPP

// Two-provider price competition.
//
// Users are ranked by alpha_i = g_i1 / g_i2. At prices (p1, p2) a user joins
// the provider with the smaller p_j * g_ij, so every price ratio nu = p2/p1
// splits the ranked users into a prefix served by provider 1 and a suffix
// served by provider 2. For the k-prefix split each provider posts its
// monopoly clearing price over its side; mu_k is the resulting ratio.
// mu_k never increases with k, alpha does, and the Nash equilibrium is
// either a cut whose ratio lands strictly inside its own alpha interval
// (integer equilibrium) or a single user l on which the ratio sequence jumps
// over alpha_l (fractional equilibrium, l splits its purchase).

#include <Eigen/Dense>

#include <cmath>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "duomarket/errors.hpp"
#include "duomarket/market.hpp"
#include "duomarket/monopoly.hpp"
#include "duomarket/tolerances.hpp"

namespace duomarket {

enum class EquilibriumKind { integer, fractional };

inline const char* to_string(EquilibriumKind kind) {
  return kind == EquilibriumKind::integer ? "Integer" : "Fractional";
}

template <typename Scalar>
struct Undecided {
  int id = 0;
  Index position = 0;  ///< position in the market's user list
  Scalar epsilon = Scalar(0);  ///< share of the user's provider-1 demand actually bought there
};

template <typename Scalar>
struct Equilibrium {
  EquilibriumKind kind = EquilibriumKind::integer;
  Scalar p1 = Scalar(0);
  Scalar p2 = Scalar(0);
  /// Purchases, row i = market user i, column j = provider j.
  PairMatrix<Scalar> q;
  std::optional<Undecided<Scalar>> undecided;
  /// Number of alpha-ranked users served by provider 1 (the undecided user excluded).
  Index cut = 0;

  Scalar price(Side s) const { return s == Side::one ? p1 : p2; }
};

template <typename Scalar>
Scalar alpha(const User<Scalar>& user) {
  return user.alpha();
}

/// argmin_j p_j * g_ij; a tie goes to provider 1.
template <typename Scalar>
Side preferred_provider(const User<Scalar>& user, Scalar p1, Scalar p2) {
  if (!(p1 > Scalar(0)) || !(p2 > Scalar(0))) throw DomainError("prices must be positive");
  return p1 * user.g[0] <= p2 * user.g[1] ? Side::one : Side::two;
}

struct Partition {
  std::vector<int> set1;  ///< ids, ascending alpha
  std::vector<int> set2;
};

/// Users with alpha <= nu go to provider 1, the rest to provider 2.
template <typename Scalar>
Partition partition_at(const Market<Scalar>& market, Scalar nu) {
  if (nu < Scalar(0)) throw DomainError("cut must be nonnegative");
  Partition out;
  for (Index i : market.by_alpha()) {
    (market.alpha()(i) <= nu ? out.set1 : out.set2).push_back(market.user(i).id);
  }
  return out;
}

namespace detail {

template <typename Scalar>
Scalar ratio(Scalar p1, Scalar p2) {
  if (p1 == Scalar(0)) return std::numeric_limits<Scalar>::infinity();
  return p2 / p1;
}

template <typename Scalar>
bool near(Scalar x, Scalar target) {
  using std::abs;
  return abs(x - target) <= Scalar(tolerance::boundary) * abs(target);
}

template <typename Scalar>
std::span<const Index> prefix(const Market<Scalar>& market, Index k) {
  return std::span<const Index>(market.by_alpha()).first(static_cast<std::size_t>(k));
}

template <typename Scalar>
std::span<const Index> suffix(const Market<Scalar>& market, Index k) {
  return std::span<const Index>(market.by_alpha()).subspan(static_cast<std::size_t>(k));
}

}  // namespace detail

/// Clearing prices when the k lowest-alpha users go to provider 1 and the rest to provider 2.
template <typename Scalar>
std::pair<Scalar, Scalar> cut_prices(const Market<Scalar>& market, Index k) {
  return {optimal_price(market, Side::one, detail::prefix(market, k)).price,
          optimal_price(market, Side::two, detail::suffix(market, k)).price};
}

/// Optimal price ratio p2*(I2(nu)) / p1*(I1(nu)); +inf when provider 1 has nobody.
template <typename Scalar>
Scalar mu(const Market<Scalar>& market, Scalar nu) {
  if (nu < Scalar(0)) throw DomainError("cut must be nonnegative");
  Index k = 0;
  for (Index i : market.by_alpha()) {
    if (market.alpha()(i) <= nu) ++k;
  }
  const auto [p1, p2] = cut_prices(market, k);
  return detail::ratio(p1, p2);
}

/// mu for every one of the I+1 cuts; entry k covers nu in [alpha_(k), alpha_(k+1)).
template <typename Scalar>
struct MuTable {
  std::vector<Scalar> p1;
  std::vector<Scalar> p2;
  std::vector<Scalar> mu;
  /// Ranked alphas, alpha_sorted[k] is the (k+1)-th smallest.
  std::vector<Scalar> alpha_sorted;

  Index users() const { return static_cast<Index>(alpha_sorted.size()); }
  Scalar lower(Index k) const { return k == 0 ? Scalar(0) : alpha_sorted[static_cast<std::size_t>(k - 1)]; }
  Scalar upper(Index k) const {
    return k == users() ? std::numeric_limits<Scalar>::infinity()
                        : alpha_sorted[static_cast<std::size_t>(k)];
  }

  /// mu_k strictly inside (alpha_k, alpha_{k+1}), away from both ends.
  bool fixed_point(Index k) const {
    const Scalar m = mu[static_cast<std::size_t>(k)];
    const Scalar b(tolerance::boundary);
    return m > lower(k) * (Scalar(1) + b) && m < upper(k) * (Scalar(1) - b);
  }

  /// mu_{l} > alpha_(l+1) > mu_{l+1}, i.e. ranked user l (0-based) is undecided.
  bool teeter(Index l) const {
    const Scalar a = alpha_sorted[static_cast<std::size_t>(l)];
    const Scalar b(tolerance::boundary);
    return mu[static_cast<std::size_t>(l)] > a * (Scalar(1) + b) &&
           mu[static_cast<std::size_t>(l + 1)] < a * (Scalar(1) - b);
  }

  bool boundary_hit(Index k) const {
    const Scalar m = mu[static_cast<std::size_t>(k)];
    return (k > 0 && detail::near(m, lower(k))) || (k < users() && detail::near(m, upper(k)));
  }

  std::string dump() const {
    std::ostringstream out;
    out << std::setprecision(17) << "k, alpha_k, alpha_k+1, p1, p2, mu\n";
    for (std::size_t k = 0; k < mu.size(); ++k) {
      out << k << ", " << lower(static_cast<Index>(k)) << ", " << upper(static_cast<Index>(k)) << ", "
          << p1[k] << ", " << p2[k] << ", " << mu[k] << '\n';
    }
    return out.str();
  }
};

template <typename Scalar>
MuTable<Scalar> mu_table(const Market<Scalar>& market) {
  MuTable<Scalar> table;
  const Index n = market.size();
  for (Index i : market.by_alpha()) table.alpha_sorted.push_back(market.alpha()(i));
  for (Index k = 0; k <= n; ++k) {
    const auto [p1, p2] = cut_prices(market, k);
    table.p1.push_back(p1);
    table.p2.push_back(p2);
    table.mu.push_back(detail::ratio(p1, p2));
  }
  return table;
}

namespace detail {

template <typename Scalar>
Equilibrium<Scalar> integer_equilibrium(const Market<Scalar>& market, Index k, Scalar p1,
                                        Scalar p2) {
  Equilibrium<Scalar> eq;
  eq.kind = EquilibriumKind::integer;
  eq.p1 = p1;
  eq.p2 = p2;
  eq.cut = k;
  eq.q = PairMatrix<Scalar>::Zero(market.size(), 2);
  const auto& order = market.by_alpha();
  for (Index r = 0; r < market.size(); ++r) {
    const Index i = order[static_cast<std::size_t>(r)];
    if (r < k) {
      eq.q(i, 0) = demand(market.a()(i), market.g()(i, 0), p1);
    } else {
      eq.q(i, 1) = demand(market.a()(i), market.g()(i, 1), p2);
    }
  }
  return eq;
}

}  // namespace detail

/// Scans the I+1 cuts for one whose ratio lies strictly inside its alpha
/// interval. Absent when no cut qualifies (or only on a boundary).
template <typename Scalar>
std::optional<Equilibrium<Scalar>> find_integer_mce(const Market<Scalar>& market,
                                                    const MuTable<Scalar>& table) {
  std::optional<Equilibrium<Scalar>> found;
  for (Index k = 0; k <= market.size(); ++k) {
    if (!table.fixed_point(k)) continue;
    if (found) {
      throw InternalInvariantError("two cuts are fixed points of the price ratio\n" + table.dump());
    }
    found = detail::integer_equilibrium(market, k, table.p1[static_cast<std::size_t>(k)],
                                        table.p2[static_cast<std::size_t>(k)]);
  }
  return found;
}

template <typename Scalar>
std::optional<Equilibrium<Scalar>> find_integer_mce(const Market<Scalar>& market) {
  return find_integer_mce(market, mu_table(market));
}

/// Clearing price when one extra user participates with weight eps, i.e. as
/// (eps*a, eps*g). eps = 0 drops the extra user entirely.
template <typename DerivedA, typename DerivedG>
typename DerivedA::Scalar epsilon_price(const Eigen::DenseBase<DerivedA>& a,
                                        const Eigen::DenseBase<DerivedG>& g,
                                        typename DerivedA::Scalar supply,
                                        typename DerivedA::Scalar scaled_a,
                                        typename DerivedA::Scalar scaled_g,
                                        typename DerivedA::Scalar eps) {
  using Scalar = typename DerivedA::Scalar;
  if (!(eps >= Scalar(0) && eps <= Scalar(1))) throw DomainError("epsilon must lie in [0, 1]");
  if (eps == Scalar(0)) return optimal_price(a, g, supply).price;
  const Index n = a.size();
  Vector<Scalar> aa(n + 1);
  Vector<Scalar> gg(n + 1);
  aa.head(n) = a.derived();
  gg.head(n) = g.derived();
  aa(n) = eps * scaled_a;
  gg(n) = eps * scaled_g;
  return optimal_price(aa, gg, supply).price;
}

template <typename Scalar>
Scalar epsilon_price(std::span<const User<Scalar>> users, Side side, Scalar supply,
                     const User<Scalar>& scaled_user, Scalar eps) {
  Vector<Scalar> a, g;
  detail::gather(users, side, a, g);
  return epsilon_price(a, g, supply, scaled_user.a, scaled_user.offset(side), eps);
}

/// Fractional equilibrium around the undecided user at alpha rank `rank`
/// (0-based). The user buys eps*(a/p1 - g1) from provider 1 and
/// (1-eps)*(a/p2 - g2) from provider 2; eps solves p1*g1 = p2*g2 where each
/// p_j is the clearing price with the user entering at weight eps (resp. 1-eps).
template <typename Scalar>
Equilibrium<Scalar> find_fractional_mce(const Market<Scalar>& market, const MuTable<Scalar>& table,
                                        Index rank) {
  const Index n = market.size();
  if (rank < 0 || rank >= n) throw ContractError("undecided rank out of range");
  if (!table.teeter(rank)) {
    std::ostringstream msg;
    msg << "user at alpha rank " << rank << " is not undecided\n" << table.dump();
    throw ContractError(msg.str());
  }
  const Index l = market.by_alpha()[static_cast<std::size_t>(rank)];
  const Scalar al = market.a()(l);
  const Scalar g1 = market.g()(l, 0);
  const Scalar g2 = market.g()(l, 1);

  // Bracketing prices: the user fully with provider 1, resp. fully with provider 2.
  const Scalar p1_with = table.p1[static_cast<std::size_t>(rank + 1)];
  const Scalar p2_with = table.p2[static_cast<std::size_t>(rank)];
  if (!(al > p1_with * g1) || !(al > p2_with * g2)) {
    throw ContractError("undecided user has zero demand at a bracketing price");
  }

  Vector<Scalar> a1, gv1, a2, gv2;
  detail::gather(market, Side::one, detail::prefix(market, rank), a1, gv1);
  detail::gather(market, Side::two, detail::suffix(market, rank + 1), a2, gv2);
  const Scalar q1 = market.supply(Side::one);
  const Scalar q2 = market.supply(Side::two);

  const auto prices = [&](Scalar eps) {
    return std::pair{epsilon_price(a1, gv1, q1, al, g1, eps),
                     epsilon_price(a2, gv2, q2, al, g2, Scalar(1) - eps)};
  };
  const auto gap = [&](Scalar eps) {
    const auto [p1, p2] = prices(eps);
    return p1 * g1 - p2 * g2;
  };

  Scalar lo(0);
  Scalar hi(1);
  if (!(gap(lo) < Scalar(0)) || !(gap(hi) > Scalar(0))) {
    throw InternalInvariantError("epsilon bisection does not bracket a root\n" + table.dump());
  }
  // Run to the end of the representable bracket; the price ratio can be far
  // more sensitive to eps than eps itself.
  for (int it = 0; it < tolerance::max_bisection_iterations; ++it) {
    const Scalar mid = (lo + hi) / Scalar(2);
    if (!(mid > lo && mid < hi)) break;
    (gap(mid) < Scalar(0) ? lo : hi) = mid;
  }
  const Scalar eps = (lo + hi) / Scalar(2);
  const auto [p1, p2] = prices(eps);

  Equilibrium<Scalar> eq;
  eq.kind = EquilibriumKind::fractional;
  eq.p1 = p1;
  eq.p2 = p2;
  eq.cut = rank;
  eq.q = PairMatrix<Scalar>::Zero(n, 2);
  const auto& order = market.by_alpha();
  for (Index r = 0; r < n; ++r) {
    const Index i = order[static_cast<std::size_t>(r)];
    if (r < rank) {
      eq.q(i, 0) = demand(market.a()(i), market.g()(i, 0), p1);
    } else if (r > rank) {
      eq.q(i, 1) = demand(market.a()(i), market.g()(i, 1), p2);
    }
  }
  eq.q(l, 0) = eps * demand(al, g1, p1);
  eq.q(l, 1) = (Scalar(1) - eps) * demand(al, g2, p2);
  eq.undecided = Undecided<Scalar>{market.user(l).id, l, eps};
  return eq;
}

template <typename Scalar>
Equilibrium<Scalar> find_fractional_mce(const Market<Scalar>& market, Index rank) {
  return find_fractional_mce(market, mu_table(market), rank);
}

/// The unique Nash equilibrium: an integer cut if one exists, otherwise the
/// fractional split of the undecided user.
template <typename Scalar>
Equilibrium<Scalar> solve_nash(const Market<Scalar>& market) {
  const auto table = mu_table(market);
  const Index n = market.size();

  std::vector<Index> fixed;
  std::vector<Index> teeter;
  bool boundary = false;
  for (Index k = 0; k <= n; ++k) {
    if (table.fixed_point(k)) fixed.push_back(k);
    if (k < n && table.teeter(k)) teeter.push_back(k);
    boundary = boundary || table.boundary_hit(k);
  }

  if (fixed.size() == 1 && teeter.empty()) {
    const auto k = fixed.front();
    return detail::integer_equilibrium(market, k, table.p1[static_cast<std::size_t>(k)],
                                       table.p2[static_cast<std::size_t>(k)]);
  }
  if (fixed.empty() && teeter.size() == 1) return find_fractional_mce(market, table, teeter.front());
  if (boundary) {
    throw DegenerateBoundary("optimal price ratio lands on a user's alpha\n" + table.dump());
  }
  std::ostringstream msg;
  msg << "expected exactly one integer cut or undecided user, found " << fixed.size()
      << " cuts and " << teeter.size() << " undecided users\n"
      << table.dump();
  throw InternalInvariantError(msg.str());
}

}  // namespace duomarket

#endif  // DUOMARKET_DUOPOLY_HPP
