#ifndef DUOMARKET_TOLERANCES_HPP
#define DUOMARKET_TOLERANCES_HPP

namespace duomarket::tolerance {

// Every tolerance used by a solver or a postcondition lives here.

/// optimal_price drops a user when a - p*g < -demand_sign * p*g.
inline constexpr double demand_sign = 1e-12;
/// Default relative tolerance for equality postconditions (clearing etc.).
inline constexpr double relative = 1e-8;
/// |p1*g_l1 - p2*g_l2| relative bound for the undecided user.
inline constexpr double indifference = 1e-9;
/// A ratio this close (relative) to an alpha is treated as sitting on it.
inline constexpr double boundary = 1e-12;
/// Default tolerance of check_kkt.
inline constexpr double kkt = 1e-7;
/// Default tolerance of solve_system.
inline constexpr double system = 1e-10;
/// Default bisection iteration cap.
inline constexpr int max_bisection_iterations = 400;

}  // namespace duomarket::tolerance

#endif  // DUOMARKET_TOLERANCES_HPP
