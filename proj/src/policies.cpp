#include "sparselb/policies.hpp"

#include <algorithm>
#include <map>
#include <sstream>
#include <stdexcept>

namespace sparselb {

namespace {

// Lowest cost wins; strict comparison keeps the own queue (slot 0) on ties,
// and neighbours are already sorted by index.
template <typename Cost>
TargetDistribution argmin_target(NodeId i, const Topology& topology, Cost cost) {
  auto nbrs = topology.neighbors(i);
  TargetDistribution target(nbrs.size() + 1, 0.0);
  std::size_t best = 0;
  double best_cost = cost(i);
  for (std::size_t k = 0; k < nbrs.size(); ++k) {
    const double c = cost(nbrs[k]);
    if (c < best_cost) {
      best_cost = c;
      best = k + 1;
    }
  }
  target[best] = 1.0;
  return target;
}

std::size_t argmax_slot(const TargetDistribution& target) {
  return static_cast<std::size_t>(std::max_element(target.begin(), target.end()) - target.begin());
}

}  // namespace

TargetDistribution jsq_rule(NodeId i, std::span<const int> queues, const Topology& topology) {
  return argmin_target(i, topology, [&](NodeId j) { return static_cast<double>(queues[j]); });
}

TargetDistribution rnd_rule(NodeId i, const Topology& topology) {
  const std::size_t slots = topology.degree(i) + 1;
  return TargetDistribution(slots, 1.0 / static_cast<double>(slots));
}

TargetDistribution own_rule(NodeId i, const Topology& topology) {
  TargetDistribution target(topology.degree(i) + 1, 0.0);
  target[0] = 1.0;
  return target;
}

TargetDistribution sed_rule(NodeId i, std::span<const int> queues, const Topology& topology,
                            const SystemParams& params) {
  return argmin_target(i, topology, [&](NodeId j) {
    return (static_cast<double>(queues[j]) + 1.0) / params.service_rate(j);
  });
}

std::vector<double> offload_from_zeta(std::span<const double> zeta, std::span<const int> queues) {
  std::vector<double> a(queues.size());
  for (std::size_t i = 0; i < queues.size(); ++i) {
    if (queues[i] < 0 || static_cast<std::size_t>(queues[i]) >= zeta.size()) {
      throw std::out_of_range("queue state outside the decision rule's domain");
    }
    a[i] = zeta[queues[i]];
  }
  return a;
}

void JsqPolicy::decide(const DecisionContext& ctx, RoutingTable& routing) const {
  for (NodeId i = 0; i < ctx.topology.size(); ++i) {
    routing.set_target(i, argmax_slot(jsq_rule(i, ctx.queues, ctx.topology)));
  }
}

void RndPolicy::decide(const DecisionContext& ctx, RoutingTable& routing) const {
  for (NodeId i = 0; i < ctx.topology.size(); ++i) {
    const auto d = static_cast<double>(ctx.topology.degree(i));
    routing.set_offload(i, d / (d + 1.0));
  }
}

void OwnPolicy::decide(const DecisionContext& ctx, RoutingTable& routing) const {
  for (NodeId i = 0; i < ctx.topology.size(); ++i) routing.set_target(i, 0);
}

void SedPolicy::decide(const DecisionContext& ctx, RoutingTable& routing) const {
  for (NodeId i = 0; i < ctx.topology.size(); ++i) {
    routing.set_target(i, argmax_slot(sed_rule(i, ctx.queues, ctx.topology, ctx.params)));
  }
}

ZetaPolicy::ZetaPolicy(std::vector<double> zeta, std::string label)
    : zeta_(std::move(zeta)), label_(std::move(label)) {
  if (zeta_.empty()) throw std::invalid_argument("decision rule must be non-empty");
  for (double p : zeta_) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("decision rule entries must lie in [0, 1]");
  }
  if (label_.empty()) {
    std::ostringstream s;
    s << "zeta[";
    for (std::size_t k = 0; k < zeta_.size(); ++k) s << (k ? " " : "") << zeta_[k];
    s << "]";
    label_ = s.str();
  }
}

void ZetaPolicy::decide(const DecisionContext& ctx, RoutingTable& routing) const {
  if (zeta_.size() != static_cast<std::size_t>(ctx.params.buffer) + 1) {
    throw std::invalid_argument("decision rule length must be buffer + 1");
  }
  for (NodeId i = 0; i < ctx.topology.size(); ++i) routing.set_offload(i, zeta_[ctx.queues[i]]);
}

MfrPolicy::MfrPolicy(PolicyNetwork network, std::string label)
    : network_(std::move(network)), mode_(network_.observation_mode), label_(std::move(label)) {}

MfrPolicy::MfrPolicy(PolicyNetwork network, ObservationMode mode, std::string label)
    : network_(std::move(network)), mode_(mode), label_(std::move(label)) {}

std::vector<double> MfrPolicy::zeta(const Observation& obs, Regime regime) const {
  return network_.mean_zeta(obs, regime);
}

void MfrPolicy::decide(const DecisionContext& ctx, RoutingTable& routing) const {
  if (ctx.params.buffer != network_.buffer) {
    throw std::invalid_argument("MF-R policy was built for a different buffer size");
  }
  const Regime regime = ctx.regime.current();
  if (mode_ == ObservationMode::Global) {
    const auto z = zeta(global_observation(ctx.queues, ctx.params.buffer), regime);
    for (NodeId i = 0; i < ctx.topology.size(); ++i) routing.set_offload(i, z[ctx.queues[i]]);
    return;
  }
  // local observations repeat heavily; evaluate each distinct one once
  std::map<std::vector<double>, std::vector<double>> cache;
  for (NodeId i = 0; i < ctx.topology.size(); ++i) {
    Observation obs = observe(mode_, i, ctx.queues, ctx.topology, ctx.params.buffer);
    auto it = cache.find(obs.vector);
    if (it == cache.end()) it = cache.emplace(obs.vector, zeta(obs, regime)).first;
    routing.set_offload(i, it->second[ctx.queues[i]]);
  }
}

}  // namespace sparselb
