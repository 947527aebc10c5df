#pragma once

#include <optional>
#include <span>
#include <vector>

#include "sparselb/observation.hpp"
#include "sparselb/routing.hpp"
#include "sparselb/simulator.hpp"

namespace sparselb {

struct EnvConfig {
  SystemParams system;
  double epoch_length = 1.0;
  int horizon = 50;
  ObservationMode observation_mode = ObservationMode::Global;
  bool observe_regime = false;
  // Replace realised drops by their kernel expectation given the epoch start.
  bool expected_drop_reward = false;
  // Agent whose local view is returned in Neighborhood / OwnState mode.
  NodeId designated_agent = 0;

  void validate(const Topology& topology) const;
};

using McObservation = Observation;

struct McTransition {
  McObservation observation;
  std::vector<double> action;
  double reward = 0.0;  // minus mean drops per agent over the epoch
  McObservation next_observation;
  Regime regime = Regime::High;  // in force during the epoch
  Regime next_regime = Regime::High;
  bool done = false;
};

/// Single-agent view of the finite system: the action is one decision rule
/// zeta broadcast to every agent, each of which offloads with probability
/// zeta(z_i) for the whole epoch.
class MfcEnv {
 public:
  MfcEnv(const Topology& topology, EnvConfig config);

  McObservation reset(std::uint64_t seed);
  McTransition step(std::span<const double> zeta);

  const EnvConfig& config() const { return config_; }
  const Topology& topology() const { return *topology_; }
  const SystemState& state() const;
  Regime regime() const { return state().regime.current(); }
  bool done() const;
  // Number of steps whose action had to be clamped into [0, 1].
  int clamped_steps() const { return clamped_steps_; }

 private:
  McObservation observe_current() const;
  double expected_mean_drops() const;

  const Topology* topology_;
  EnvConfig config_;
  std::optional<Episode> episode_;
  RoutingTable routing_;
  int clamped_steps_ = 0;
};

// sum_t gamma^t rewards[t]
double discounted_return(std::span<const double> rewards, double gamma);

}  // namespace sparselb
