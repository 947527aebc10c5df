#pragma once

#include "sparselb/common.hpp"

namespace sparselb {

struct RegimeParams {
  double rate_high = 0.9;
  double rate_low = 0.6;
  double p_high_to_low = 0.2;
  double p_low_to_high = 0.5;

  void validate() const;
  // Long-run fraction of epochs spent in the high-rate regime.
  double stationary_high() const;
};

enum class Regime { High, Low };

/// Two-state Markov-modulated arrival rate shared by all schedulers.
/// Held constant within a decision epoch and resampled at its end.
class ArrivalRegime {
 public:
  ArrivalRegime(RegimeParams params, Regime current);

  // Uniform draw of the starting regime.
  static ArrivalRegime init(const RegimeParams& params, Rng& rng);

  void step(Rng& rng);

  Regime current() const { return current_; }
  double rate() const { return current_ == Regime::High ? params_.rate_high : params_.rate_low; }
  const RegimeParams& params() const { return params_; }

 private:
  RegimeParams params_;
  Regime current_;
};

}  // namespace sparselb
