#include "sparselb/observation.hpp"

#include <stdexcept>

#include "sparselb/system.hpp"

namespace sparselb {

std::string to_string(ObservationMode mode) {
  switch (mode) {
    case ObservationMode::Global: return "global";
    case ObservationMode::Neighborhood: return "neighborhood";
    case ObservationMode::OwnState: return "own";
  }
  return "unknown";
}

ObservationMode parse_observation_mode(std::string_view text) {
  if (text == "global") return ObservationMode::Global;
  if (text == "neighborhood" || text == "neighbourhood") return ObservationMode::Neighborhood;
  if (text == "own" || text == "own_state") return ObservationMode::OwnState;
  throw std::invalid_argument("unknown observation mode '" + std::string(text) + "'");
}

Observation global_observation(std::span<const int> queues, int buffer) {
  return {ObservationMode::Global, empirical_distribution(queues, buffer)};
}

Observation neighborhood_observation(NodeId i, std::span<const int> queues,
                                     const Topology& topology, int buffer) {
  std::vector<double> v(buffer + 1, 0.0);
  auto nbrs = topology.neighbors(i);
  const double w = 1.0 / static_cast<double>(nbrs.size() + 1);
  v[queues[i]] += w;
  for (NodeId j : nbrs) v[queues[j]] += w;
  return {ObservationMode::Neighborhood, std::move(v)};
}

Observation own_observation(NodeId i, std::span<const int> queues, int buffer) {
  std::vector<double> v(buffer + 1, 0.0);
  v[queues[i]] = 1.0;
  return {ObservationMode::OwnState, std::move(v)};
}

Observation observe(ObservationMode mode, NodeId agent, std::span<const int> queues,
                    const Topology& topology, int buffer) {
  switch (mode) {
    case ObservationMode::Global: return global_observation(queues, buffer);
    case ObservationMode::Neighborhood: return neighborhood_observation(agent, queues, topology, buffer);
    case ObservationMode::OwnState: return own_observation(agent, queues, buffer);
  }
  throw std::logic_error("unhandled observation mode");
}

}  // namespace sparselb
