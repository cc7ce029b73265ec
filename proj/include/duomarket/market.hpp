#ifndef DUOMARKET_MARKET_HPP
#define DUOMARKET_MARKET_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_set>
#include <utility>
#include <vector>

#include "duomarket/errors.hpp"

namespace duomarket {

using Index = Eigen::Index;

/// Which of the two providers. Documentation and I/O number them 1 and 2.
enum class Side : int { one = 0, two = 1 };

inline constexpr int column(Side s) { return static_cast<int>(s); }
inline constexpr Side other(Side s) { return s == Side::one ? Side::two : Side::one; }
inline constexpr int provider_number(Side s) { return column(s) + 1; }

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// One column per provider, one row per user.
template <typename Scalar>
using PairMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, 2>;

/// A user with log utility a*log(1 + q/g_j) - p_j*q toward provider j.
/// g folds channel gain and noise into the amount of resource needed per
/// unit of effective rate: larger g means a worse channel.
template <typename Scalar>
struct User {
  int id = 0;
  Scalar a = Scalar(1);
  std::array<Scalar, 2> g{Scalar(1), Scalar(1)};

  Scalar offset(Side s) const { return g[column(s)]; }
  Scalar alpha() const { return g[0] / g[1]; }
};

template <typename Scalar>
struct Provider {
  int id = 1;
  Scalar supply = Scalar(1);
};

/// A validated two-provider market. Immutable after construction.
///
/// Users keep their input order; `by_alpha()` gives the ascending-alpha
/// permutation every duopoly routine works in.
template <typename Scalar>
class Market {
 public:
  Market(std::vector<User<Scalar>> users, Scalar supply_one, Scalar supply_two)
      : users_(std::move(users)), providers_{{{1, supply_one}, {2, supply_two}}} {
    validate();
    const auto n = static_cast<Index>(users_.size());
    a_.resize(n);
    g_.resize(n, 2);
    alpha_.resize(n);
    for (Index i = 0; i < n; ++i) {
      const auto& u = users_[static_cast<std::size_t>(i)];
      a_(i) = u.a;
      g_(i, 0) = u.g[0];
      g_(i, 1) = u.g[1];
      alpha_(i) = u.alpha();
    }
    order_.resize(users_.size());
    std::iota(order_.begin(), order_.end(), Index{0});
    std::sort(order_.begin(), order_.end(),
              [this](Index l, Index r) { return alpha_(l) < alpha_(r); });
    for (std::size_t k = 1; k < order_.size(); ++k) {
      if (!(alpha_(order_[k - 1]) < alpha_(order_[k]))) {
        std::ostringstream msg;
        msg << "users " << users_[static_cast<std::size_t>(order_[k - 1])].id << " and "
            << users_[static_cast<std::size_t>(order_[k])].id
            << " have identical alpha = " << alpha_(order_[k]);
        throw ValidationError(msg.str());
      }
    }
  }

  Index size() const { return static_cast<Index>(users_.size()); }
  const std::vector<User<Scalar>>& users() const { return users_; }
  const User<Scalar>& user(Index i) const { return users_[static_cast<std::size_t>(i)]; }
  const Provider<Scalar>& provider(Side s) const { return providers_[column(s)]; }
  Scalar supply(Side s) const { return providers_[column(s)].supply; }

  const Vector<Scalar>& a() const { return a_; }
  const PairMatrix<Scalar>& g() const { return g_; }
  auto g(Side s) const { return g_.col(column(s)); }
  const Vector<Scalar>& alpha() const { return alpha_; }

  /// Positions of users sorted by ascending alpha.
  const std::vector<Index>& by_alpha() const { return order_; }

  /// Position of the user with the given id, or -1.
  Index position_of(int id) const {
    for (std::size_t i = 0; i < users_.size(); ++i) {
      if (users_[i].id == id) return static_cast<Index>(i);
    }
    return -1;
  }

 private:
  void validate() const {
    if (users_.empty()) throw ValidationError("market has no users");
    for (const auto& p : providers_) {
      if (!(p.supply > Scalar(0))) {
        throw ValidationError("provider " + std::to_string(p.id) + " supply must be positive");
      }
    }
    std::unordered_set<int> ids;
    for (const auto& u : users_) {
      if (!ids.insert(u.id).second) {
        throw ValidationError("duplicate user id " + std::to_string(u.id));
      }
      if (!(u.a > Scalar(0)) || !(u.g[0] > Scalar(0)) || !(u.g[1] > Scalar(0))) {
        throw ValidationError("user " + std::to_string(u.id) + " needs a > 0 and g > 0");
      }
      using std::isfinite;
      if (!isfinite(u.a) || !isfinite(u.g[0]) || !isfinite(u.g[1])) {
        throw ValidationError("user " + std::to_string(u.id) + " has non-finite parameters");
      }
    }
  }

  std::vector<User<Scalar>> users_;
  std::array<Provider<Scalar>, 2> providers_;
  Vector<Scalar> a_;
  PairMatrix<Scalar> g_;
  Vector<Scalar> alpha_;
  std::vector<Index> order_;
};

}  // namespace duomarket

#endif  // DUOMARKET_MARKET_HPP
