// SPDX-License-Identifier: Apache-2.0
#ifndef HOPROUTER_ROUTING_STATE_HPP_
#define HOPROUTER_ROUTING_STATE_HPP_

#include <cstddef>
#include <string>

namespace hoprouter {

/// Decision-time state: context so far, hop index and accumulated cost.
struct RoutingState {
  std::string context;
  int depth = 0;
  double cum_cost = 0.0;
};

/// `halt` is only consulted when halting mode is enabled.
struct RoutingAction {
  std::size_t model_index = 0;
  bool halt = false;
};

}  // namespace hoprouter

#endif  // HOPROUTER_ROUTING_STATE_HPP_
