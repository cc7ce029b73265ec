#ifndef DUOMARKET_WELFARE_HPP
#define DUOMARKET_WELFARE_HPP

// Social welfare for a(i) * log(1 + x_i), x_i = q_i1/g_i1 + q_i2/g_i2:
// KKT verification, an independent welfare maximiser, and a brute-force
// stability oracle.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <vector>

#include "duomarket/duopoly.hpp"
#include "duomarket/errors.hpp"
#include "duomarket/market.hpp"
#include "duomarket/monopoly.hpp"
#include "duomarket/tolerances.hpp"

namespace duomarket {

/// Row i = market user i, column j = provider j.
template <typename Scalar>
using Allocation = PairMatrix<Scalar>;

/// Effective rates x_i = q_i1/g_i1 + q_i2/g_i2.
template <typename Scalar>
Vector<Scalar> effective_rates(const Market<Scalar>& market, const Allocation<Scalar>& q) {
  return (q.array() / market.g().array()).rowwise().sum().matrix();
}

/// U_T = sum_i a_i log(1 + x_i). Payments cancel against provider revenue.
template <typename Scalar>
Scalar total_utility(const Market<Scalar>& market, const Allocation<Scalar>& q) {
  if (q.rows() != market.size()) throw DomainError("allocation has the wrong number of rows");
  if ((q.array() < Scalar(0)).any()) throw DomainError("allocation must be nonnegative");
  return (market.a().array() * effective_rates(market, q).array().log1p()).sum();
}

template <typename Scalar>
struct KktReport {
  Scalar p1 = Scalar(0);
  Scalar p2 = Scalar(0);
  /// max over (i, j) of (marginal_ij - p_j) / p_j, floored at 0.
  Scalar max_stationarity_residual = Scalar(0);
  /// max over (i, j) of q_ij * |marginal_ij - p_j| / (p_j * Q_j).
  Scalar max_complementarity_residual = Scalar(0);
  /// (sum_i q_ij - Q_j) / Q_j.
  std::array<Scalar, 2> clearing_residual{Scalar(0), Scalar(0)};
  bool feasible = false;
  bool passes = false;
  Scalar tol = Scalar(0);
};

/// Evaluates the optimality conditions of the welfare problem with
/// multipliers (p1, p2). The marginal value of resource from provider j is
/// a_i / ((1 + x_i) g_ij). Residuals are scaled by the price (and supply) so
/// the report does not depend on the units of g.
template <typename Scalar>
KktReport<Scalar> check_kkt(const Market<Scalar>& market, const Allocation<Scalar>& q, Scalar p1,
                            Scalar p2, Scalar tol = Scalar(tolerance::kkt)) {
  if (!(tol > Scalar(0))) throw DomainError("tolerance must be positive");
  if (q.rows() != market.size()) throw DomainError("allocation has the wrong number of rows");
  KktReport<Scalar> r;
  r.p1 = p1;
  r.p2 = p2;
  r.tol = tol;
  r.feasible = p1 > Scalar(0) && p2 > Scalar(0) && (q.array() >= Scalar(0)).all() &&
               q.allFinite();

  const std::array<Scalar, 2> price{p1, p2};
  const Vector<Scalar> x = effective_rates(market, q);
  for (int j = 0; j < 2; ++j) {
    const Scalar supply = market.supply(static_cast<Side>(j));
    r.clearing_residual[static_cast<std::size_t>(j)] = (q.col(j).sum() - supply) / supply;
    if (!(price[static_cast<std::size_t>(j)] > Scalar(0))) continue;
    const Scalar p = price[static_cast<std::size_t>(j)];
    for (Index i = 0; i < market.size(); ++i) {
      const Scalar marginal = market.a()(i) / ((Scalar(1) + x(i)) * market.g()(i, j));
      const Scalar rel = (marginal - p) / p;
      using std::abs;
      using std::max;
      r.max_stationarity_residual = max(r.max_stationarity_residual, rel);
      r.max_complementarity_residual =
          max(r.max_complementarity_residual, abs(q(i, j)) * abs(rel) / supply);
    }
  }
  using std::abs;
  r.passes = r.feasible && r.max_stationarity_residual <= tol &&
             r.max_complementarity_residual <= tol && abs(r.clearing_residual[0]) <= tol &&
             abs(r.clearing_residual[1]) <= tol;
  return r;
}

template <typename Scalar>
struct SystemSolution {
  Allocation<Scalar> q;
  Scalar p1 = Scalar(0);
  Scalar p2 = Scalar(0);
  /// Position of the user buying from both providers, if any.
  std::optional<Index> split;
  int iterations = 0;
};

namespace detail {

template <typename Scalar>
struct DualResponse {
  Scalar p2 = Scalar(0);
  Allocation<Scalar> q;
  std::optional<Index> split;
};

/// Users' best response to multipliers (p1, p2): buy x = (a / min_j p_j g_ij - 1)^+
/// from the cheaper provider, ties to provider 1.
template <typename Scalar>
Allocation<Scalar> best_response(const Market<Scalar>& market, Scalar p1, Scalar p2) {
  Allocation<Scalar> q = Allocation<Scalar>::Zero(market.size(), 2);
  for (Index i = 0; i < market.size(); ++i) {
    const Scalar c1 = p1 * market.g()(i, 0);
    const Scalar c2 = p2 * market.g()(i, 1);
    const int j = c1 <= c2 ? 0 : 1;
    const Scalar c = j == 0 ? c1 : c2;
    const Scalar x = market.a()(i) / c - Scalar(1);
    if (x > Scalar(0)) q(i, j) = x * market.g()(i, j);
  }
  return q;
}

template <typename Scalar>
bool collapsed(Scalar lo, Scalar hi) {
  using std::sqrt;
  const Scalar mid = sqrt(lo) * sqrt(hi);
  return !(mid > lo && mid < hi);
}

/// For fixed p1, the p2 at which provider 2's demand meets its supply. When
/// the crossing is a jump (a user switching sides), that user is split so
/// provider 2 clears exactly.
template <typename Scalar>
DualResponse<Scalar> clear_provider_two(const Market<Scalar>& market, Scalar p1, int max_iters,
                                        int& iterations) {
  const Scalar supply = market.supply(Side::two);
  const auto excess = [&](Scalar p2) {
    return best_response(market, p1, p2).col(1).sum() - supply;
  };
  Scalar hi = (market.a().array() / market.g(Side::two).array()).maxCoeff();
  Scalar lo = hi / Scalar(2);
  for (int it = 0; !(excess(lo) > Scalar(0)); ++it) {
    if (it > max_iters) throw ConvergenceError("solve_system: cannot bracket provider 2 price");
    hi = lo;
    lo /= Scalar(2);
  }
  for (int it = 0; !collapsed(lo, hi); ++it) {
    if (it > max_iters) throw ConvergenceError("solve_system: provider 2 bisection did not converge");
    ++iterations;
    using std::sqrt;
    const Scalar mid = sqrt(lo) * sqrt(hi);
    (excess(mid) > Scalar(0) ? lo : hi) = mid;
  }

  DualResponse<Scalar> out;
  // A user buying from provider 2 at lo but not at hi switched sides inside
  // the final bracket.
  const Allocation<Scalar> below = best_response(market, p1, lo);
  const Allocation<Scalar> above = best_response(market, p1, hi);
  for (Index i = 0; i < market.size(); ++i) {
    if (below(i, 1) > Scalar(0) && above(i, 1) == Scalar(0) && above(i, 0) > Scalar(0)) {
      out.split = i;
      break;
    }
  }
  if (!out.split) {
    out.p2 = hi;
    out.q = best_response(market, p1, hi);
    return out;
  }
  const Index l = *out.split;
  out.p2 = p1 * market.alpha()(l);
  out.q = best_response(market, p1, out.p2);
  out.q.row(l).setZero();
  const Scalar g1 = market.g()(l, 0);
  const Scalar g2 = market.g()(l, 1);
  using std::max;
  using std::min;
  const Scalar x = max(market.a()(l) / (p1 * g1) - Scalar(1), Scalar(0));
  const Scalar residual = supply - out.q.col(1).sum();
  const Scalar q2 = min(max(residual, Scalar(0)), x * g2);
  out.q(l, 1) = q2;
  out.q(l, 0) = max(x - q2 / g2, Scalar(0)) * g1;
  if (out.q(l, 0) == Scalar(0) || out.q(l, 1) == Scalar(0)) out.split.reset();
  return out;
}

}  // namespace detail

/// Maximises sum_i a_i log(1 + x_i) subject to sum_i q_ij = Q_j by searching
/// the multipliers. For fixed p1 the inner bisection finds the p2 that clears
/// provider 2; provider 1's resulting excess demand falls as p1 rises, which
/// the outer bisection drives to zero. Independent of the clearing-price
/// routines used by the equilibrium solver.
template <typename Scalar>
SystemSolution<Scalar> solve_system(const Market<Scalar>& market,
                                    Scalar tol = Scalar(tolerance::system),
                                    int max_iters = tolerance::max_bisection_iterations) {
  if (!(tol > Scalar(0))) throw DomainError("tolerance must be positive");
  if (max_iters <= 0) throw DomainError("iteration cap must be positive");
  SystemSolution<Scalar> sol;
  const Scalar supply = market.supply(Side::one);
  const auto respond = [&](Scalar p1) {
    return detail::clear_provider_two(market, p1, max_iters, sol.iterations);
  };
  const auto excess = [&](const detail::DualResponse<Scalar>& r) {
    return r.q.col(0).sum() - supply;
  };

  Scalar hi = (market.a().array() / market.g(Side::one).array()).maxCoeff();
  Scalar lo = hi / Scalar(2);
  for (int it = 0; !(excess(respond(lo)) > Scalar(0)); ++it) {
    if (it > max_iters) throw ConvergenceError("solve_system: cannot bracket provider 1 price");
    hi = lo;
    lo /= Scalar(2);
  }
  for (int it = 0; !detail::collapsed(lo, hi); ++it) {
    if (it > max_iters) throw ConvergenceError("solve_system: provider 1 bisection did not converge");
    using std::sqrt;
    const Scalar mid = sqrt(lo) * sqrt(hi);
    (excess(respond(mid)) > Scalar(0) ? lo : hi) = mid;
  }

  auto at_lo = respond(lo);
  auto at_hi = respond(hi);
  using std::abs;
  auto& best = abs(excess(at_lo)) <= abs(excess(at_hi)) ? at_lo : at_hi;
  sol.p1 = &best == &at_lo ? lo : hi;
  sol.p2 = best.p2;
  sol.q = std::move(best.q);
  sol.split = best.split;

  const Scalar r1 = (sol.q.col(0).sum() - supply) / supply;
  const Scalar r2 = (sol.q.col(1).sum() - market.supply(Side::two)) / market.supply(Side::two);
  if (abs(r1) > tol || abs(r2) > tol) {
    std::ostringstream msg;
    msg << "solve_system: clearing residuals " << r1 << ", " << r2 << " exceed " << tol;
    throw ConvergenceError(msg.str());
  }
  return sol;
}

template <typename Scalar>
struct StabilityReport {
  /// The stable contiguous cut, as an integer equilibrium.
  std::optional<Equilibrium<Scalar>> equilibrium;
  std::size_t stable_cuts = 0;
  /// Filled only when every subset was enumerated.
  std::size_t stable_partitions = 0;
  std::size_t stable_noncontiguous = 0;
  bool full_scan = false;
};

inline constexpr Index kMaxStabilityOracleUsers = 20;
inline constexpr Index kMaxFullScanUsers = 12;

/// Brute-force integer equilibrium search. Every contiguous alpha cut is
/// priced side by side and accepted when each user already sits with its
/// cheaper provider (ties to provider 1). Up to 12 users every subset is
/// tried as well, to confirm that only contiguous cuts can be stable.
template <typename Scalar>
StabilityReport<Scalar> exhaustive_stability_oracle(const Market<Scalar>& market) {
  const Index n = market.size();
  if (n > kMaxStabilityOracleUsers) {
    throw CapExceeded("stability oracle is limited to " + std::to_string(kMaxStabilityOracleUsers) +
                      " users, got " + std::to_string(n));
  }
  const auto& order = market.by_alpha();
  const auto stable = [&](const std::vector<char>& on_one) {
    std::vector<Index> one, two;
    for (Index r = 0; r < n; ++r) {
      (on_one[static_cast<std::size_t>(r)] ? one : two).push_back(order[static_cast<std::size_t>(r)]);
    }
    const Scalar p1 = optimal_price(market, Side::one, one).price;
    const Scalar p2 = optimal_price(market, Side::two, two).price;
    for (Index r = 0; r < n; ++r) {
      const Index i = order[static_cast<std::size_t>(r)];
      const bool prefers_one = p1 * market.g()(i, 0) <= p2 * market.g()(i, 1);
      if (prefers_one != static_cast<bool>(on_one[static_cast<std::size_t>(r)])) {
        return std::optional<std::pair<Scalar, Scalar>>{};
      }
    }
    return std::optional<std::pair<Scalar, Scalar>>{{p1, p2}};
  };

  StabilityReport<Scalar> report;
  std::vector<char> mask(static_cast<std::size_t>(n));
  for (Index k = 0; k <= n; ++k) {
    for (Index r = 0; r < n; ++r) mask[static_cast<std::size_t>(r)] = r < k;
    if (const auto prices = stable(mask)) {
      ++report.stable_cuts;
      if (!report.equilibrium) {
        report.equilibrium = detail::integer_equilibrium(market, k, prices->first, prices->second);
      }
    }
  }

  if (n <= kMaxFullScanUsers) {
    report.full_scan = true;
    const std::uint32_t subsets = std::uint32_t{1} << n;
    for (std::uint32_t bits = 0; bits < subsets; ++bits) {
      Index ones = 0;
      for (Index r = 0; r < n; ++r) {
        mask[static_cast<std::size_t>(r)] = (bits >> r) & 1U;
        ones += mask[static_cast<std::size_t>(r)];
      }
      if (!stable(mask)) continue;
      ++report.stable_partitions;
      const bool contiguous = bits == (std::uint32_t{1} << ones) - 1U;
      if (!contiguous) ++report.stable_noncontiguous;
    }
  }
  return report;
}

}  // namespace duomarket

#endif  // DUOMARKET_WELFARE_HPP
