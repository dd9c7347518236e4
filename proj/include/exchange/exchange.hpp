// Umbrella header for the exchange-process library.
#ifndef EXCHANGE_EXCHANGE_HPP
#define EXCHANGE_EXCHANGE_HPP

#include "exchange/analysis.hpp"
#include "exchange/checker.hpp"
#include "exchange/conservation.hpp"
#include "exchange/cycles.hpp"
#include "exchange/exactgen.hpp"
#include "exchange/kmc.hpp"
#include "exchange/model.hpp"
#include "exchange/partitions.hpp"
#include "exchange/rng.hpp"
#include "exchange/sum_tree.hpp"
#include "exchange/types.hpp"
#include "exchange/union_find.hpp"

#endif  // EXCHANGE_EXCHANGE_HPP
