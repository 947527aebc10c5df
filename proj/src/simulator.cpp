#include "sparselb/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace sparselb {

long EpochOutcome::total_drops() const {
  return std::accumulate(drops.begin(), drops.end(), 0L);
}

namespace {

// Busy queues grouped by service rate so a service event is picked in
// O(number of distinct rates).
class BusySets {
 public:
  BusySets(const SystemParams& params, std::size_t n) : class_of_(n, 0), position_(n, 0) {
    for (NodeId i = 0; i < n; ++i) {
      const double a = params.service_rate(i);
      auto it = std::find(rates_.begin(), rates_.end(), a);
      if (it == rates_.end()) {
        rates_.push_back(a);
        members_.emplace_back();
        it = rates_.end() - 1;
      }
      class_of_[i] = static_cast<std::uint32_t>(it - rates_.begin());
    }
  }

  void insert(NodeId i) {
    auto& m = members_[class_of_[i]];
    position_[i] = static_cast<std::uint32_t>(m.size());
    m.push_back(i);
  }

  void erase(NodeId i) {
    auto& m = members_[class_of_[i]];
    const NodeId moved = m.back();
    m[position_[i]] = moved;
    position_[moved] = position_[i];
    m.pop_back();
  }

  double total_rate() const {
    double r = 0.0;
    for (std::size_t c = 0; c < rates_.size(); ++c) r += rates_[c] * static_cast<double>(members_[c].size());
    return r;
  }

  // x uniform on [0, total_rate())
  NodeId pick(double x) const {
    for (std::size_t c = 0; c < rates_.size(); ++c) {
      const auto size = members_[c].size();
      const double weight = rates_[c] * static_cast<double>(size);
      if (size > 0 && (x < weight || c + 1 == rates_.size())) {
        const auto idx = std::min<std::size_t>(size - 1, static_cast<std::size_t>(x / rates_[c]));
        return members_[c][idx];
      }
      x -= weight;
    }
    // rounding pushed x past the last non-empty class
    for (std::size_t c = rates_.size(); c-- > 0;) {
      if (!members_[c].empty()) return members_[c].back();
    }
    throw std::logic_error("service event with no busy queue");
  }

 private:
  std::vector<double> rates_;
  std::vector<std::vector<NodeId>> members_;
  std::vector<std::uint32_t> class_of_;
  std::vector<std::uint32_t> position_;
};

}  // namespace

EpochOutcome run_epoch(const Topology& topology, const RoutingTable& routing,
                       std::span<const int> queues, double arrival_rate, double epoch_length,
                       const SystemParams& params, Rng& rng) {
  const std::size_t n = topology.size();
  if (queues.size() != n) throw std::invalid_argument("queue vector does not match topology");
  if (&routing.topology() != &topology) throw std::invalid_argument("routing table built for another topology");
  if (!(arrival_rate >= 0.0) || !(epoch_length >= 0.0)) {
    throw std::invalid_argument("arrival rate and epoch length must be non-negative");
  }
  const int buffer = params.buffer;

  EpochOutcome out;
  out.next_queues.assign(queues.begin(), queues.end());
  out.drops.assign(n, 0);
  out.arrivals.assign(n, 0);
  out.services.assign(n, 0);

  BusySets busy(params, n);
  for (NodeId i = 0; i < n; ++i) {
    if (queues[i] < 0 || queues[i] > buffer) throw std::out_of_range("queue filling outside {0..B}");
    if (queues[i] > 0) busy.insert(i);
  }

  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::exponential_distribution<double> holding(1.0);
  const double arrival_total = arrival_rate * static_cast<double>(n);
  double t = 0.0;
  while (true) {
    const double total = arrival_total + busy.total_rate();
    if (total <= 0.0) break;
    t += holding(rng) / total;
    if (t >= epoch_length) break;
    double x = unif(rng) * total;
    if (x < arrival_total) {
      const auto scheduler = static_cast<NodeId>(std::min<double>(static_cast<double>(n - 1), std::floor(x / arrival_rate)));
      const NodeId target = routing.route(scheduler, unif(rng));
      ++out.arrivals[target];
      int& q = out.next_queues[target];
      if (q >= buffer) {
        ++out.drops[target];
      } else {
        if (q == 0) busy.insert(target);
        ++q;
      }
    } else {
      const NodeId j = busy.pick(x - arrival_total);
      ++out.services[j];
      if (--out.next_queues[j] == 0) busy.erase(j);
    }
  }
  return out;
}

EpochOutcome run_epoch(const Topology& topology, std::span<const double> offload,
                       std::span<const int> queues, double arrival_rate, double epoch_length,
                       const SystemParams& params, Rng& rng) {
  if (offload.size() != topology.size()) throw std::invalid_argument("offload vector does not match topology");
  RoutingTable routing(topology);
  for (NodeId i = 0; i < topology.size(); ++i) routing.set_offload(i, offload[i]);
  return run_epoch(topology, routing, queues, arrival_rate, epoch_length, params, rng);
}

namespace {

SystemState initial_state(const Topology& topology, const SystemParams& params, Rng& rng) {
  std::vector<int> queues(topology.size(), 0);
  if (!params.initial_distribution.empty()) {
    std::discrete_distribution<int> start(params.initial_distribution.begin(),
                                          params.initial_distribution.end());
    for (auto& q : queues) q = start(rng);
  }
  return SystemState{std::move(queues), ArrivalRegime::init(params.regime, rng), 0};
}

const SystemParams& validated(const SystemParams& params, const Topology& topology) {
  params.validate(topology.size());
  return params;
}

}  // namespace

Episode::Episode(const Topology& topology, const SystemParams& params, double epoch_length,
                 std::uint64_t seed)
    : topology_(&topology),
      params_(validated(params, topology)),
      epoch_length_(epoch_length),
      rng_(seed),
      state_(initial_state(topology, params_, rng_)) {
  if (!(epoch_length > 0.0) || !std::isfinite(epoch_length)) {
    throw std::invalid_argument("epoch length must be positive");
  }
}

EpochOutcome Episode::advance(const RoutingTable& routing) {
  EpochOutcome outcome = run_epoch(*topology_, routing, state_.queues, state_.regime.rate(),
                                   epoch_length_, params_, rng_);
  state_.queues = outcome.next_queues;
  state_.regime.step(rng_);
  ++state_.epoch_index;
  return outcome;
}

EpisodeResult run_episode(const Topology& topology, const Policy& policy, int horizon,
                          double epoch_length, const SystemParams& params, std::uint64_t seed,
                          const TraceSink& trace) {
  if (horizon < 1) throw std::invalid_argument("episode horizon must be >= 1");
  Episode episode(topology, params, epoch_length, seed);
  RoutingTable routing(topology);
  EpisodeResult result;
  const double n = static_cast<double>(topology.size());
  for (int t = 0; t < horizon; ++t) {
    const SystemState& s = episode.state();
    result.distributions.push_back(empirical_distribution(s.queues, params.buffer));
    result.regimes.push_back(s.regime.current());
    const double rate = s.regime.rate();
    policy.decide(DecisionContext{topology, s.queues, params, s.regime}, routing);
    const EpochOutcome outcome = episode.advance(routing);
    const double mean_drops = static_cast<double>(outcome.total_drops()) / n;
    result.epoch_drops.push_back(mean_drops);
    result.total_drops += mean_drops;
    if (trace) trace(EpochRecord{t, result.regimes.back(), rate, result.distributions.back(), mean_drops});
  }
  result.distributions.push_back(empirical_distribution(episode.state().queues, params.buffer));
  return result;
}

}  // namespace sparselb
