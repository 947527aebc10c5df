#include "sparselb/mfcenv.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <map>
#include <stdexcept>
#include <utility>

#include "sparselb/kernel.hpp"

namespace sparselb {

void EnvConfig::validate(const Topology& topology) const {
  system.validate(topology.size());
  if (!(epoch_length > 0.0)) throw std::invalid_argument("epoch length must be positive");
  if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
  if (designated_agent >= topology.size()) throw std::invalid_argument("designated agent out of range");
}

MfcEnv::MfcEnv(const Topology& topology, EnvConfig config)
    : topology_(&topology), config_(std::move(config)), routing_(topology) {
  config_.validate(topology);
}

const SystemState& MfcEnv::state() const {
  if (!episode_) throw std::logic_error("environment used before reset");
  return episode_->state();
}

bool MfcEnv::done() const { return state().epoch_index >= config_.horizon; }

McObservation MfcEnv::observe_current() const {
  return observe(config_.observation_mode, config_.designated_agent, state().queues, *topology_,
                 config_.system.buffer);
}

McObservation MfcEnv::reset(std::uint64_t seed) {
  episode_.emplace(*topology_, config_.system, config_.epoch_length, seed);
  return observe_current();
}

double MfcEnv::expected_mean_drops() const {
  const SystemState& s = state();
  const auto rates = routing_.induced_rates(s.regime.rate());
  std::map<std::pair<double, double>, EpochKernel> kernels;
  double total = 0.0;
  for (NodeId i = 0; i < topology_->size(); ++i) {
    const auto key = std::make_pair(rates[i], config_.system.service_rate(i));
    auto it = kernels.find(key);
    if (it == kernels.end()) {
      it = kernels.emplace(key, EpochKernel(key.first, key.second, config_.system.buffer,
                                            config_.epoch_length)).first;
    }
    total += it->second.expected_drops(s.queues[i]);
  }
  return total / static_cast<double>(topology_->size());
}

McTransition MfcEnv::step(std::span<const double> zeta) {
  if (done()) throw std::logic_error("episode finished; call reset()");
  const int buffer = config_.system.buffer;
  if (zeta.size() != static_cast<std::size_t>(buffer) + 1) {
    throw std::invalid_argument("decision rule must have buffer + 1 entries");
  }
  McTransition tr;
  tr.action.assign(zeta.begin(), zeta.end());
  bool clamped = false;
  for (double& p : tr.action) {
    if (std::isnan(p)) throw std::invalid_argument("decision rule contains NaN");
    if (p < 0.0 || p > 1.0) {
      p = std::clamp(p, 0.0, 1.0);
      clamped = true;
    }
  }
  if (clamped) {
    if (clamped_steps_++ == 0) std::cerr << "warning: decision rule clamped into [0, 1]\n";
  }

  tr.observation = observe_current();
  tr.regime = regime();
  const SystemState& s = state();
  for (NodeId i = 0; i < topology_->size(); ++i) routing_.set_offload(i, tr.action[s.queues[i]]);

  const double expected = config_.expected_drop_reward ? expected_mean_drops() : 0.0;
  const EpochOutcome outcome = episode_->advance(routing_);
  const double realised = static_cast<double>(outcome.total_drops()) / static_cast<double>(topology_->size());
  tr.reward = -(config_.expected_drop_reward ? expected : realised);
  tr.next_observation = observe_current();
  tr.next_regime = regime();
  tr.done = done();
  return tr;
}

double discounted_return(std::span<const double> rewards, double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("discount must lie in [0, 1]");
  double total = 0.0, weight = 1.0;
  for (double r : rewards) {
    total += weight * r;
    weight *= gamma;
  }
  return total;
}

}  // namespace sparselb
