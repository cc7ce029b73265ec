#ifndef DUOMARKET_DUOMARKET_HPP
#define DUOMARKET_DUOMARKET_HPP

#include "duomarket/duopoly.hpp"
#include "duomarket/errors.hpp"
#include "duomarket/market.hpp"
#include "duomarket/monopoly.hpp"
#include "duomarket/random_market.hpp"
#include "duomarket/scenario.hpp"
#include "duomarket/tolerances.hpp"
#include "duomarket/welfare.hpp"

#endif  // DUOMARKET_DUOMARKET_HPP
