#pragma once

#include <span>
#include <vector>

#include "sparselb/topology.hpp"

namespace sparselb {

/// Per-agent routing distributions for one epoch. Row i covers the
/// accessible set of agent i: slot 0 is its own queue, slot k >= 1 is
/// neighbors(i)[k - 1].
class RoutingTable {
 public:
  explicit RoutingTable(const Topology& topology);

  const Topology& topology() const { return *topology_; }
  std::size_t size() const { return topology_->size(); }

  std::span<double> row(NodeId i) {
    return {weights_.data() + row_start(i), topology_->degree(i) + 1};
  }
  std::span<const double> row(NodeId i) const {
    return {weights_.data() + row_start(i), topology_->degree(i) + 1};
  }

  // Own queue with probability 1 - a, otherwise a uniform neighbour.
  // Agents without neighbours always keep their packets.
  void set_offload(NodeId i, double offload);
  void set_target(NodeId i, std::size_t slot);
  void set_distribution(NodeId i, std::span<const double> probabilities);

  // Queue receiving a packet from agent i given u ~ U[0, 1).
  NodeId route(NodeId i, double u) const;

  // Offload probability a_i = 1 - row(i)[0].
  double offload(NodeId i) const { return 1.0 - weights_[row_start(i)]; }

  // Arrival rate induced at every queue when each scheduler sees base_rate.
  std::vector<double> induced_rates(double base_rate) const;

 private:
  std::size_t row_start(NodeId i) const { return topology_->offset(i) + i; }

  const Topology* topology_;
  std::vector<double> weights_;
};

}  // namespace sparselb
