#include "sparselb/system.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace sparselb {

void SystemParams::validate(std::size_t n_nodes) const {
  if (buffer < 1) throw std::invalid_argument("buffer must be >= 1");
  if (service_rates.size() != 1 && service_rates.size() != n_nodes) {
    throw std::invalid_argument("expected 1 or " + std::to_string(n_nodes) + " service rates, got " +
                                std::to_string(service_rates.size()));
  }
  for (double a : service_rates) {
    if (!(a > 0.0) || !std::isfinite(a)) throw std::invalid_argument("service rates must be positive");
  }
  regime.validate();
  if (!initial_distribution.empty()) {
    if (initial_distribution.size() != static_cast<std::size_t>(buffer) + 1) {
      throw std::invalid_argument("initial distribution must have buffer + 1 entries");
    }
    double sum = 0.0;
    for (double p : initial_distribution) {
      if (!(p >= 0.0)) throw std::invalid_argument("initial distribution must be non-negative");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("initial distribution must sum to 1");
  }
}

std::vector<double> empirical_distribution(std::span<const int> queues, int buffer) {
  std::vector<std::size_t> counts(buffer + 1, 0);
  for (int z : queues) {
    if (z < 0 || z > buffer) throw std::out_of_range("queue filling outside {0..B}");
    ++counts[z];
  }
  std::vector<double> mu(buffer + 1);
  const double n = static_cast<double>(queues.size());
  for (int k = 0; k <= buffer; ++k) mu[k] = static_cast<double>(counts[k]) / n;
  return mu;
}

}  // namespace sparselb
