#pragma once

#include <functional>
#include <span>
#include <vector>

#include "sparselb/policies.hpp"
#include "sparselb/routing.hpp"
#include "sparselb/system.hpp"
#include "sparselb/topology.hpp"

namespace sparselb {

struct EpochOutcome {
  std::vector<int> next_queues;
  std::vector<int> drops;     // rejected at each queue
  std::vector<int> arrivals;  // routed to each queue, including dropped ones
  std::vector<int> services;

  long total_drops() const;
};

/// Exact continuous-time simulation of one epoch with frozen routing and
/// arrival rate. Every scheduler emits packets at `arrival_rate`; each packet
/// is routed through `routing`; busy queues complete service at their rate.
EpochOutcome run_epoch(const Topology& topology, const RoutingTable& routing,
                       std::span<const int> queues, double arrival_rate, double epoch_length,
                       const SystemParams& params, Rng& rng);

// Convenience form: per-agent offload probability with uniform neighbour choice.
EpochOutcome run_epoch(const Topology& topology, std::span<const double> offload,
                       std::span<const int> queues, double arrival_rate, double epoch_length,
                       const SystemParams& params, Rng& rng);

/// One finite-system episode: owns the state and the random stream. Shared by
/// the policy evaluator and the MFC environment so both consume randomness
/// identically.
class Episode {
 public:
  Episode(const Topology& topology, const SystemParams& params, double epoch_length,
          std::uint64_t seed);

  const SystemState& state() const { return state_; }
  const Topology& topology() const { return *topology_; }
  const SystemParams& params() const { return params_; }
  double epoch_length() const { return epoch_length_; }

  // Runs the epoch, applies the outcome and resamples the arrival regime.
  EpochOutcome advance(const RoutingTable& routing);

 private:
  const Topology* topology_;
  SystemParams params_;
  double epoch_length_;
  Rng rng_;
  SystemState state_;
};

struct EpochRecord {
  int epoch = 0;
  Regime regime = Regime::High;
  double arrival_rate = 0.0;
  std::vector<double> distribution;  // at epoch start
  double mean_drops = 0.0;           // per agent over this epoch
};

struct EpisodeResult {
  std::vector<double> epoch_drops;                 // mean drops per agent, per epoch
  std::vector<std::vector<double>> distributions;  // mu(0) .. mu(T)
  std::vector<Regime> regimes;                     // regime in force during each epoch
  double total_drops = 0.0;                        // sum of epoch_drops
};

using TraceSink = std::function<void(const EpochRecord&)>;

EpisodeResult run_episode(const Topology& topology, const Policy& policy, int horizon,
                          double epoch_length, const SystemParams& params, std::uint64_t seed,
                          const TraceSink& trace = {});

}  // namespace sparselb
