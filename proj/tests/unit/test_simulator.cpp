#include <cmath>
#include <numeric>

#include "doctest.h"
#include "sparselb/kernel.hpp"
#include "sparselb/simulator.hpp"

using namespace sparselb;

namespace {

double poisson_pmf(int k, double mean) { return std::exp(k * std::log(mean) - mean - std::lgamma(k + 1.0)); }

}  // namespace

TEST_CASE("empirical distribution") {
  const std::vector<int> q{0, 1, 1, 5, 5, 5};
  const auto mu = empirical_distribution(q, 5);
  const std::vector<double> expected{1.0 / 6, 2.0 / 6, 0, 0, 0, 3.0 / 6};
  for (int z = 0; z <= 5; ++z) CHECK(mu[z] == doctest::Approx(expected[z]).epsilon(1e-15));
  const auto empty = empirical_distribution(std::vector<int>(7, 0), 5);
  CHECK(empty[0] == 1.0);
  CHECK(std::accumulate(empty.begin(), empty.end(), 0.0) == 1.0);
}

TEST_CASE("kernel and event simulation agree on a 3-cycle") {
  const Topology tri = build_cyc1d(3);
  SystemParams params;
  params.buffer = 5;
  params.service_rates = {1.0, 1.5, 0.8};
  const std::vector<double> offload{0.3, 0.7, 0.0};
  const std::vector<int> start{0, 3, 5};
  const double lambda = 0.9, dt = 2.0;
  const auto rates = effective_rates(tri, offload, lambda);

  const int samples = 100000;
  std::vector<std::vector<double>> hist(3, std::vector<double>(6, 0.0));
  std::vector<double> drop_sum(3, 0.0), drop_sq(3, 0.0);
  Rng rng(2024);
  for (int s = 0; s < samples; ++s) {
    const EpochOutcome out = run_epoch(tri, offload, start, lambda, dt, params, rng);
    for (int i = 0; i < 3; ++i) {
      hist[i][out.next_queues[i]] += 1.0 / samples;
      drop_sum[i] += out.drops[i];
      drop_sq[i] += double(out.drops[i]) * out.drops[i];
      CHECK(start[i] + out.arrivals[i] - out.services[i] - out.drops[i] == out.next_queues[i]);
    }
  }
  for (int i = 0; i < 3; ++i) {
    const EpochKernel k(rates[i], params.service_rates[i], 5, dt);
    const Vector law = k.epoch_law(start[i]);
    double tv = 0.0;
    for (int z = 0; z <= 5; ++z) tv += 0.5 * std::abs(law(z) - hist[i][z]);
    CHECK(tv < 0.01);
    const double mean = drop_sum[i] / samples;
    const double se = std::sqrt((drop_sq[i] / samples - mean * mean) / samples);
    CHECK(std::abs(mean - k.expected_drops(start[i])) < 3.0 * se + 1e-12);
  }
}

TEST_CASE("arrival counts are Poisson at the thinned rates") {
  const Topology tri = build_cyc1d(3);
  SystemParams params;
  params.buffer = 40;  // wide buffer so nothing is dropped
  const std::vector<double> offload{1.0, 0.2, 0.5};
  const std::vector<int> start{0, 0, 0};
  const double lambda = 0.8, dt = 3.0;
  const auto rates = effective_rates(tri, offload, lambda);
  const int samples = 40000;
  std::vector<std::vector<int>> counts(3, std::vector<int>(60, 0));
  Rng rng(9);
  for (int s = 0; s < samples; ++s) {
    const EpochOutcome out = run_epoch(tri, offload, start, lambda, dt, params, rng);
    for (int i = 0; i < 3; ++i) ++counts[i][std::min(out.arrivals[i], 59)];
  }
  for (int i = 0; i < 3; ++i) {
    const double mean = rates[i] * dt;
    // Chi-square over bins with expected count >= 20, remaining mass pooled.
    double chi2 = 0.0, tail_obs = samples, tail_exp = samples;
    int dof = 0;
    for (int k = 0; k < 60; ++k) {
      const double e = samples * poisson_pmf(k, mean);
      if (e < 20.0) continue;
      chi2 += (counts[i][k] - e) * (counts[i][k] - e) / e;
      tail_obs -= counts[i][k];
      tail_exp -= e;
      ++dof;
    }
    if (tail_exp >= 5.0) chi2 += (tail_obs - tail_exp) * (tail_obs - tail_exp) / tail_exp;
    // 99.9% quantile of chi-square is below dof + 5 sqrt(2 dof) + 10 for these sizes.
    CHECK(chi2 < dof + 5.0 * std::sqrt(2.0 * dof) + 10.0);
  }
}

TEST_CASE("time to the first event is exponential with the total rate") {
  // No event before t iff an epoch of length t leaves everything untouched.
  const Topology tri = build_cyc1d(3);
  SystemParams params;
  params.buffer = 5;
  params.service_rates = {1.0, 2.0, 0.5};
  const std::vector<double> offload{0.5, 0.5, 0.5};
  const std::vector<int> start{2, 0, 1};
  const double lambda = 0.9;
  const double total = 3 * lambda + 1.0 + 0.5;
  const int samples = 10000;
  Rng rng(77);
  double worst = 0.0;
  for (double t : {0.05, 0.1, 0.2, 0.3, 0.5, 0.8, 1.2}) {
    int quiet = 0;
    for (int s = 0; s < samples; ++s) {
      const EpochOutcome out = run_epoch(tri, offload, start, lambda, t, params, rng);
      const int events = std::accumulate(out.arrivals.begin(), out.arrivals.end(), 0) +
                         std::accumulate(out.services.begin(), out.services.end(), 0);
      quiet += events == 0;
    }
    worst = std::max(worst, std::abs(quiet / double(samples) - std::exp(-total * t)));
  }
  // Kolmogorov 1% critical value at n = 10^4.
  CHECK(worst < 1.63 / std::sqrt(double(samples)));
}

TEST_CASE("no traffic drains queues") {
  const Topology g = build_cyc1d(5);
  SystemParams params;
  const std::vector<int> start{5, 4, 3, 2, 1};
  Rng rng(1);
  for (int s = 0; s < 100; ++s) {
    const EpochOutcome out = run_epoch(g, std::vector<double>(5, 0.5), start, 0.0, 1.0, params, rng);
    CHECK(out.total_drops() == 0);
    for (int i = 0; i < 5; ++i) {
      CHECK(out.arrivals[i] == 0);
      CHECK(out.next_queues[i] <= start[i]);
    }
  }
}

TEST_CASE("episodes") {
  const Topology g = build_cyc1d(101);
  SystemParams params;
  const RndPolicy rnd;
  CHECK_THROWS_AS(run_episode(g, rnd, 0, 1.0, params, 1), std::invalid_argument);

  const EpisodeResult one = run_episode(g, rnd, 1, 1.0, params, 1);
  CHECK(one.epoch_drops.size() == 1);
  CHECK(one.distributions.size() == 2);
  CHECK(one.regimes.size() == 1);
  CHECK(one.distributions[0][0] == 1.0);

  const EpisodeResult a = run_episode(g, rnd, 50, 1.0, params, 123);
  const EpisodeResult b = run_episode(g, rnd, 50, 1.0, params, 123);
  CHECK(a.total_drops > 0.0);
  CHECK(a.total_drops == b.total_drops);
  CHECK(a.epoch_drops == b.epoch_drops);
  CHECK(a.distributions == b.distributions);
  CHECK(a.regimes == b.regimes);
  CHECK(a.total_drops == doctest::Approx(std::accumulate(a.epoch_drops.begin(), a.epoch_drops.end(), 0.0)));
  for (const auto& mu : a.distributions) {
    CHECK(std::accumulate(mu.begin(), mu.end(), 0.0) == doctest::Approx(1.0));
  }

  int traced = 0;
  run_episode(g, rnd, 10, 1.0, params, 5, [&](const EpochRecord& r) {
    CHECK(r.epoch == traced);
    ++traced;
  });
  CHECK(traced == 10);
}

TEST_CASE("initial distribution") {
  const Topology g = build_cyc1d(1000);
  SystemParams params;
  params.initial_distribution = {0.0, 0.0, 0.0, 0.0, 0.0, 1.0};
  const OwnPolicy own;
  const EpisodeResult r = run_episode(g, own, 1, 1.0, params, 3);
  CHECK(r.distributions[0][5] == 1.0);

  params.initial_distribution = {0.5, 0.0, 0.5, 0.0, 0.0, 0.0};
  const EpisodeResult h = run_episode(g, own, 1, 1.0, params, 3);
  CHECK(std::abs(h.distributions[0][0] - 0.5) < 0.06);
  CHECK(h.distributions[0][0] + h.distributions[0][2] == doctest::Approx(1.0));

  params.initial_distribution = {0.5, 0.6, 0.0, 0.0, 0.0, 0.0};
  CHECK_THROWS(params.validate(1000));
}
