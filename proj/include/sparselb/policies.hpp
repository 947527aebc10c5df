#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "sparselb/network.hpp"
#include "sparselb/observation.hpp"
#include "sparselb/routing.hpp"
#include "sparselb/system.hpp"
#include "sparselb/topology.hpp"

namespace sparselb {

// Distribution over agent i's accessible set: slot 0 own queue, slot k the
// k-th (sorted) neighbour.
using TargetDistribution = std::vector<double>;

// Shortest accessible queue; ties go to the own queue, then the lowest index.
TargetDistribution jsq_rule(NodeId i, std::span<const int> queues, const Topology& topology);
// Uniform over own queue and neighbours.
TargetDistribution rnd_rule(NodeId i, const Topology& topology);
TargetDistribution own_rule(NodeId i, const Topology& topology);
// Minimises (z_j + 1) / alpha_j over the accessible set, JSQ tie-breaking.
TargetDistribution sed_rule(NodeId i, std::span<const int> queues, const Topology& topology,
                            const SystemParams& params);

// Offload probability for every agent: a_i = zeta[z_i].
std::vector<double> offload_from_zeta(std::span<const double> zeta, std::span<const int> queues);

struct DecisionContext {
  const Topology& topology;
  std::span<const int> queues;
  const SystemParams& params;
  const ArrivalRegime& regime;
};

/// Fills the routing table for one epoch from the epoch-start snapshot.
/// Implementations are deterministic and safe to share across threads.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::string name() const = 0;
  virtual void decide(const DecisionContext& ctx, RoutingTable& routing) const = 0;
};

class JsqPolicy final : public Policy {
 public:
  std::string name() const override { return "jsq"; }
  void decide(const DecisionContext& ctx, RoutingTable& routing) const override;
};

class RndPolicy final : public Policy {
 public:
  std::string name() const override { return "rnd"; }
  void decide(const DecisionContext& ctx, RoutingTable& routing) const override;
};

class OwnPolicy final : public Policy {
 public:
  std::string name() const override { return "own"; }
  void decide(const DecisionContext& ctx, RoutingTable& routing) const override;
};

class SedPolicy final : public Policy {
 public:
  std::string name() const override { return "sed"; }
  void decide(const DecisionContext& ctx, RoutingTable& routing) const override;
};

/// Fixed decision rule zeta, independent of the observation.
class ZetaPolicy final : public Policy {
 public:
  explicit ZetaPolicy(std::vector<double> zeta, std::string label = "");
  std::string name() const override { return label_; }
  void decide(const DecisionContext& ctx, RoutingTable& routing) const override;
  const std::vector<double>& zeta() const { return zeta_; }

 private:
  std::vector<double> zeta_;
  std::string label_;
};

/// Learned MF-R policy evaluated with its mean action. In Global mode one
/// decision rule is broadcast; in Neighborhood and OwnState mode every agent
/// computes its own rule from its local observation.
class MfrPolicy final : public Policy {
 public:
  explicit MfrPolicy(PolicyNetwork network, std::string label = "mfr");
  // Evaluate a trained network under a different observation mode.
  MfrPolicy(PolicyNetwork network, ObservationMode mode, std::string label);

  std::string name() const override { return label_; }
  void decide(const DecisionContext& ctx, RoutingTable& routing) const override;

  std::vector<double> zeta(const Observation& obs, Regime regime) const;
  const PolicyNetwork& network() const { return network_; }
  ObservationMode mode() const { return mode_; }

 private:
  PolicyNetwork network_;
  ObservationMode mode_;
  std::string label_;
};

}  // namespace sparselb
