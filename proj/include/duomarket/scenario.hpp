#ifndef DUOMARKET_SCENARIO_HPP
#define DUOMARKET_SCENARIO_HPP

// Planar deployments: two base stations, users in a rectangle, and the
// path-loss channel g_ij = d_ij^beta.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "duomarket/duopoly.hpp"
#include "duomarket/errors.hpp"
#include "duomarket/market.hpp"
#include "duomarket/monopoly.hpp"

namespace duomarket {

/// SplitMix64 (Steele, Lea, Flood 2014). Output is identical on every
/// platform, which std::uniform_real_distribution does not promise.
class SplitMix64 {
 public:
  static constexpr int kVersion = 1;

  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Independent generator for (stream, index); adding users never shifts
  /// the draws of existing ones.
  static SplitMix64 substream(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
    SplitMix64 mix(seed ^ (stream * 0xD1B54A32D192ED03ULL));
    const std::uint64_t base = mix.next();
    SplitMix64 per_index(base ^ (index * 0x9E3779B97F4A7C15ULL + 0x632BE59BD9B4E019ULL));
    return SplitMix64(per_index.next());
  }

 private:
  std::uint64_t state_;
};

namespace stream {
inline constexpr std::uint64_t position = 1;
inline constexpr std::uint64_t willingness = 2;
inline constexpr std::uint64_t perturbation = 3;
}  // namespace stream

template <typename Scalar>
using Point = Eigen::Matrix<Scalar, 2, 1>;

template <typename Scalar>
struct PlanarScenario {
  Point<Scalar> area{Scalar(10), Scalar(20)};
  std::array<Point<Scalar>, 2> bs_positions{Point<Scalar>{Scalar(2.5), Scalar(10)},
                                            Point<Scalar>{Scalar(7.5), Scalar(10)}};
  std::vector<Point<Scalar>> user_positions;
  /// Explicit willingness to pay per user; empty means draw from a_range.
  std::vector<Scalar> user_a;
  std::pair<Scalar, Scalar> a_range{Scalar(0.5), Scalar(1.5)};
  Scalar beta = Scalar(3);
  Scalar q1 = Scalar(1000);
  Scalar q2 = Scalar(1000);
  std::uint64_t seed = 42;

  void validate() const {
    if (!(area.x() > Scalar(0)) || !(area.y() > Scalar(0))) throw ValidationError("area must be positive");
    if (!(beta >= Scalar(0))) throw ValidationError("path-loss exponent must be nonnegative");
    if (!(a_range.first > Scalar(0)) || !(a_range.first <= a_range.second)) {
      throw ValidationError("a_range must satisfy 0 < low <= high");
    }
    if (!(q1 > Scalar(0)) || !(q2 > Scalar(0))) throw ValidationError("supplies must be positive");
    if (user_positions.empty()) throw ValidationError("scenario has no users");
    if (!user_a.empty() && user_a.size() != user_positions.size()) {
      throw ValidationError("explicit a values must match the number of users");
    }
    for (const Scalar a : user_a) {
      if (!(a > Scalar(0))) throw ValidationError("willingness to pay must be positive");
    }
    const auto inside = [&](const Point<Scalar>& p) {
      return p.x() >= Scalar(0) && p.y() >= Scalar(0) && p.x() <= area.x() && p.y() <= area.y();
    };
    for (const auto& b : bs_positions) {
      if (!inside(b)) throw ValidationError("base station outside the area");
    }
    for (std::size_t i = 0; i < user_positions.size(); ++i) {
      if (!inside(user_positions[i])) {
        throw ValidationError("user " + std::to_string(i + 1) + " outside the area");
      }
      for (const auto& b : bs_positions) {
        if ((user_positions[i] - b).norm() <= Scalar(1e-9)) {
          throw ValidationError("user " + std::to_string(i + 1) + " coincides with a base station");
        }
      }
    }
  }
};

/// `count` positions drawn uniformly over the area.
template <typename Scalar>
std::vector<Point<Scalar>> random_positions(const Point<Scalar>& area, std::size_t count,
                                            std::uint64_t seed) {
  std::vector<Point<Scalar>> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    auto rng = SplitMix64::substream(seed, stream::position, i);
    const double x = rng.uniform(0.0, static_cast<double>(area.x()));
    const double y = rng.uniform(0.0, static_cast<double>(area.y()));
    out.emplace_back(Scalar(x), Scalar(y));
  }
  return out;
}

/// The documented seeded deployment: 10 x 20 area, 30 users, beta = 3,
/// Q1 = Q2 = 1000.
template <typename Scalar = double>
PlanarScenario<Scalar> default_scenario() {
  PlanarScenario<Scalar> s;
  s.user_positions = random_positions<Scalar>(s.area, 30, s.seed);
  return s;
}

/// Equal willingness to pay, `left` users drawn over the left half of the
/// area and `right` over the right half.
template <typename Scalar = double>
PlanarScenario<Scalar> split_density_scenario(std::size_t left, std::size_t right,
                                              std::uint64_t seed = 42) {
  PlanarScenario<Scalar> s;
  s.seed = seed;
  const double half = static_cast<double>(s.area.x()) / 2;
  for (std::size_t i = 0; i < left + right; ++i) {
    auto rng = SplitMix64::substream(seed, stream::position, i);
    const double x0 = i < left ? 0.0 : half;
    const double x = rng.uniform(x0, x0 + half);
    const double y = rng.uniform(0.0, static_cast<double>(s.area.y()));
    s.user_positions.emplace_back(Scalar(x), Scalar(y));
  }
  s.user_a.assign(left + right, Scalar(1));
  return s;
}

/// g = d^beta toward each base station.
template <typename Scalar>
std::array<Scalar, 2> path_loss_offsets(const PlanarScenario<Scalar>& s, const Point<Scalar>& at) {
  using std::pow;
  return {pow((at - s.bs_positions[0]).norm(), s.beta), pow((at - s.bs_positions[1]).norm(), s.beta)};
}

/// Willingness to pay of user i: explicit, or drawn from its own substream.
template <typename Scalar>
Scalar willingness(const PlanarScenario<Scalar>& s, std::size_t i) {
  if (!s.user_a.empty()) return s.user_a[i];
  auto rng = SplitMix64::substream(s.seed, stream::willingness, i);
  return Scalar(rng.uniform(static_cast<double>(s.a_range.first), static_cast<double>(s.a_range.second)));
}

/// Builds the Market (user ids 1..n in position order). Users whose alphas
/// tie are nudged by at most 1e-9 and the nudge is appended to `log`.
template <typename Scalar>
Market<Scalar> compile(const PlanarScenario<Scalar>& scenario,
                       std::vector<std::string>* log = nullptr) {
  scenario.validate();
  std::vector<Point<Scalar>> positions = scenario.user_positions;
  const std::size_t n = positions.size();

  constexpr int kAttempts = 8;
  for (int attempt = 0;; ++attempt) {
    std::vector<User<Scalar>> users;
    users.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      users.push_back({static_cast<int>(i + 1), willingness(scenario, i),
                       path_loss_offsets(scenario, positions[i])});
    }

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t l, std::size_t r) { return users[l].alpha() < users[r].alpha(); });
    std::vector<std::size_t> tied;
    for (std::size_t k = 1; k < n; ++k) {
      if (!(users[order[k - 1]].alpha() < users[order[k]].alpha())) tied.push_back(order[k]);
    }
    if (tied.empty()) return Market<Scalar>(std::move(users), scenario.q1, scenario.q2);
    if (scenario.beta == Scalar(0) || attempt == kAttempts) {
      std::ostringstream msg;
      msg << "user " << tied.front() + 1 << " ties another user's alpha";
      if (scenario.beta == Scalar(0)) msg << " (beta = 0 makes every alpha equal to 1)";
      throw ValidationError(msg.str());
    }
    for (const std::size_t i : tied) {
      auto rng = SplitMix64::substream(scenario.seed, stream::perturbation + static_cast<std::uint64_t>(attempt), i);
      const Point<Scalar> nudge{Scalar(rng.uniform(-1e-9, 1e-9)), Scalar(rng.uniform(-1e-9, 1e-9))};
      const Point<Scalar> moved = positions[i] + nudge;
      positions[i] = moved.cwiseMax(Point<Scalar>::Zero()).cwiseMin(scenario.area);
      if (log) {
        std::ostringstream msg;
        msg << "user " << i + 1 << ": alpha tie, position nudged by (" << nudge.x() << ", "
            << nudge.y() << ")";
        log->push_back(msg.str());
      }
    }
  }
}

enum class RegionLabel : int {
  no_demand = 0,
  provider1 = 1,
  provider2 = 2,
  no_demand1 = 3,  ///< would pick provider 1, but demands nothing
  no_demand2 = 4,
};

/// Label of a probe user with willingness `probe_a` standing at `at`.
/// Zero demand toward the preferred provider means zero demand toward both.
template <typename Scalar>
RegionLabel region_label(const PlanarScenario<Scalar>& s, const Point<Scalar>& at, Scalar p1,
                         Scalar p2, Scalar probe_a, bool three_region) {
  const auto g = path_loss_offsets(s, at);
  const bool one = p1 * g[0] <= p2 * g[1];
  const Scalar cost = one ? p1 * g[0] : p2 * g[1];
  if (probe_a > cost) return one ? RegionLabel::provider1 : RegionLabel::provider2;
  if (three_region) return RegionLabel::no_demand;
  return one ? RegionLabel::no_demand1 : RegionLabel::no_demand2;
}

template <typename Scalar>
struct RegionGrid {
  Index nx = 0;
  Index ny = 0;
  /// cells(iy, ix); row 0 is the lowest y.
  Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> cells;
  Scalar p1 = Scalar(0);
  Scalar p2 = Scalar(0);
  Scalar probe_a = Scalar(1);
  bool three_region = false;

  RegionLabel at(Index iy, Index ix) const { return static_cast<RegionLabel>(cells(iy, ix)); }
};

/// Labels the cell centres of an nx x ny grid over the scenario area.
template <typename Scalar>
RegionGrid<Scalar> region_grid(const PlanarScenario<Scalar>& s, Scalar p1, Scalar p2,
                               Scalar probe_a, Index nx, Index ny, bool three_region = false) {
  if (!(p1 > Scalar(0)) || !(p2 > Scalar(0))) throw DomainError("prices must be positive");
  if (nx <= 0 || ny <= 0) throw DomainError("grid resolution must be positive");
  RegionGrid<Scalar> grid;
  grid.nx = nx;
  grid.ny = ny;
  grid.p1 = p1;
  grid.p2 = p2;
  grid.probe_a = probe_a;
  grid.three_region = three_region;
  grid.cells.resize(ny, nx);
  for (Index iy = 0; iy < ny; ++iy) {
    for (Index ix = 0; ix < nx; ++ix) {
      const Point<Scalar> centre{(Scalar(ix) + Scalar(0.5)) * s.area.x() / Scalar(nx),
                                 (Scalar(iy) + Scalar(0.5)) * s.area.y() / Scalar(ny)};
      grid.cells(iy, ix) = static_cast<int>(region_label(s, centre, p1, p2, probe_a, three_region));
    }
  }
  return grid;
}

template <typename Scalar>
struct SweepRow {
  Scalar beta = Scalar(0);
  Scalar p1_duo = Scalar(0);
  Scalar p2_duo = Scalar(0);
  Scalar p1_mono = Scalar(0);
  Scalar p2_mono = Scalar(0);
  std::optional<EquilibriumKind> kind;
  /// Set when this row failed; the sweep carries on.
  std::string error;
};

/// Monopoly prices: each provider alone serving every user.
template <typename Scalar>
std::pair<Scalar, Scalar> monopoly_prices(const Market<Scalar>& market) {
  const std::vector<Index>& all = market.by_alpha();
  return {optimal_price(market, Side::one, all).price, optimal_price(market, Side::two, all).price};
}

/// Duopoly and monopoly prices for each path-loss exponent on the same users.
template <typename Scalar>
std::vector<SweepRow<Scalar>> sweep_beta(const PlanarScenario<Scalar>& base,
                                         const std::vector<Scalar>& betas) {
  if (betas.empty()) throw DomainError("sweep needs at least one beta");
  std::vector<SweepRow<Scalar>> rows;
  rows.reserve(betas.size());
  for (const Scalar beta : betas) {
    SweepRow<Scalar> row;
    row.beta = beta;
    try {
      auto s = base;
      s.beta = beta;
      const auto market = compile(s);
      const auto eq = solve_nash(market);
      std::tie(row.p1_mono, row.p2_mono) = monopoly_prices(market);
      row.p1_duo = eq.p1;
      row.p2_duo = eq.p2;
      row.kind = eq.kind;
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace duomarket

#endif  // DUOMARKET_SCENARIO_HPP
