#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sparselb/topology.hpp"

namespace sparselb {

enum class ObservationMode { Global, Neighborhood, OwnState };

std::string to_string(ObservationMode mode);
ObservationMode parse_observation_mode(std::string_view text);

/// Probability vector over {0..B} seen by the upper-level policy.
struct Observation {
  ObservationMode mode = ObservationMode::Global;
  std::vector<double> vector;
};

// Empirical distribution of all queues.
Observation global_observation(std::span<const int> queues, int buffer);
// Empirical distribution over agent i's own queue and its neighbours.
Observation neighborhood_observation(NodeId i, std::span<const int> queues,
                                     const Topology& topology, int buffer);
// One-hot of agent i's own queue.
Observation own_observation(NodeId i, std::span<const int> queues, int buffer);

Observation observe(ObservationMode mode, NodeId agent, std::span<const int> queues,
                    const Topology& topology, int buffer);

}  // namespace sparselb
