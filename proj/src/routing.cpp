#include "sparselb/routing.hpp"

#include <cmath>
#include <stdexcept>

namespace sparselb {

RoutingTable::RoutingTable(const Topology& topology)
    : topology_(&topology), weights_(topology.offset(static_cast<NodeId>(topology.size())) + topology.size(), 0.0) {
  for (NodeId i = 0; i < topology.size(); ++i) weights_[row_start(i)] = 1.0;
}

void RoutingTable::set_offload(NodeId i, double offload) {
  if (!(offload >= 0.0 && offload <= 1.0)) {
    throw std::invalid_argument("offload probability must lie in [0, 1]");
  }
  auto r = row(i);
  const std::size_t d = r.size() - 1;
  if (d == 0) {
    r[0] = 1.0;
    return;
  }
  r[0] = 1.0 - offload;
  const double share = offload / static_cast<double>(d);
  for (std::size_t k = 1; k <= d; ++k) r[k] = share;
}

void RoutingTable::set_target(NodeId i, std::size_t slot) {
  auto r = row(i);
  if (slot >= r.size()) throw std::out_of_range("routing slot outside the accessible set");
  std::fill(r.begin(), r.end(), 0.0);
  r[slot] = 1.0;
}

void RoutingTable::set_distribution(NodeId i, std::span<const double> probabilities) {
  auto r = row(i);
  if (probabilities.size() != r.size()) {
    throw std::invalid_argument("distribution size does not match the accessible set");
  }
  double sum = 0.0;
  for (double p : probabilities) {
    if (!(p >= 0.0)) throw std::invalid_argument("routing probabilities must be non-negative");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("routing probabilities must sum to 1");
  std::copy(probabilities.begin(), probabilities.end(), r.begin());
}

NodeId RoutingTable::route(NodeId i, double u) const {
  auto r = row(i);
  double acc = r[0];
  if (u < acc) return i;
  auto nbrs = topology_->neighbors(i);
  std::size_t last = 0;
  for (std::size_t k = 1; k < r.size(); ++k) {
    if (r[k] <= 0.0) continue;
    last = k;
    acc += r[k];
    if (u < acc) return nbrs[k - 1];
  }
  // rounding left u above the accumulated mass
  return last == 0 ? i : nbrs[last - 1];
}

std::vector<double> RoutingTable::induced_rates(double base_rate) const {
  std::vector<double> rates(size(), 0.0);
  for (NodeId i = 0; i < size(); ++i) {
    auto r = row(i);
    auto nbrs = topology_->neighbors(i);
    rates[i] += base_rate * r[0];
    for (std::size_t k = 1; k < r.size(); ++k) rates[nbrs[k - 1]] += base_rate * r[k];
  }
  return rates;
}

}  // namespace sparselb
