#include "sparselb/traffic.hpp"

#include <cmath>
#include <stdexcept>

namespace sparselb {

void RegimeParams::validate() const {
  if (!(rate_low >= 0.0) || !(rate_high >= rate_low) || !std::isfinite(rate_high)) {
    throw std::invalid_argument("arrival rates must satisfy 0 <= rate_low <= rate_high");
  }
  auto is_prob = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!is_prob(p_high_to_low) || !is_prob(p_low_to_high)) {
    throw std::invalid_argument("regime switching probabilities must lie in [0, 1]");
  }
}

double RegimeParams::stationary_high() const {
  const double total = p_high_to_low + p_low_to_high;
  if (total == 0.0) return 0.5;
  return p_low_to_high / total;
}

ArrivalRegime::ArrivalRegime(RegimeParams params, Regime current)
    : params_(params), current_(current) {
  params_.validate();
}

ArrivalRegime ArrivalRegime::init(const RegimeParams& params, Rng& rng) {
  std::bernoulli_distribution coin(0.5);
  return ArrivalRegime(params, coin(rng) ? Regime::High : Regime::Low);
}

void ArrivalRegime::step(Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double u = unif(rng);
  if (current_ == Regime::High) {
    if (u < params_.p_high_to_low) current_ = Regime::Low;
  } else {
    if (u < params_.p_low_to_high) current_ = Regime::High;
  }
}

}  // namespace sparselb
