#pragma once

#include <span>
#include <vector>

#include "sparselb/common.hpp"
#include "sparselb/traffic.hpp"

namespace sparselb {

struct SystemParams {
  int buffer = 5;
  // One entry means homogeneous servers; otherwise one rate per queue.
  std::vector<double> service_rates{1.0};
  RegimeParams regime;
  // Start distribution over {0..buffer}; empty means all queues start empty.
  std::vector<double> initial_distribution;

  void validate(std::size_t n_nodes) const;
  double service_rate(NodeId i) const {
    return service_rates.size() == 1 ? service_rates[0] : service_rates[i];
  }
};

struct SystemState {
  std::vector<int> queues;
  ArrivalRegime regime;
  int epoch_index = 0;
};

// Fraction of queues at each filling level 0..buffer.
std::vector<double> empirical_distribution(std::span<const int> queues, int buffer);

}  // namespace sparselb
