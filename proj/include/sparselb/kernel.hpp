#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "sparselb/topology.hpp"

namespace sparselb {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Per-queue arrival rates induced by offload probabilities:
///   rate_i = base_rate * (1 - a_i + sum_{j in N_i} a_j / |N_j|).
/// Isolated nodes cannot offload; their a_i is treated as 0.
std::vector<double> effective_rates(const Topology& topology, std::span<const double> offload,
                                    double base_rate);

// Column-generator convention: Q(to, from). Tridiagonal birth-death chain on
// {0..buffer} with up-rate `arrival_rate` and down-rate `service_rate`.
Matrix build_generator(double arrival_rate, double service_rate, int buffer);

// Generator with one extra drop-counting row: entry (buffer+1, buffer) is the
// arrival rate, the extra column is zero.
Matrix build_augmented(double arrival_rate, double service_rate, int buffer);

bool is_column_generator(const Matrix& m, double tol = 1e-12);

// exp(m * t). Column generators go through uniformization, anything else
// through scaling-and-squaring of the Taylor series.
Matrix matrix_exponential(const Matrix& m, double t);

Matrix expm_uniformization(const Matrix& generator, double t);
Matrix expm_taylor(const Matrix& m, double t);

/// Exact single-queue dynamics over one epoch with frozen arrival rate.
class EpochKernel {
 public:
  EpochKernel(double arrival_rate, double service_rate, int buffer, double epoch_length);

  int buffer() const { return buffer_; }
  double arrival_rate() const { return arrival_rate_; }
  double service_rate() const { return service_rate_; }
  double epoch_length() const { return epoch_length_; }

  const Matrix& generator() const { return generator_; }
  const Matrix& augmented() const { return augmented_; }
  // exp(generator * epoch_length); column z is the law started from z.
  const Matrix& transition() const { return transition_; }

  Vector epoch_law(int start_state) const;
  double expected_drops(int start_state) const;

 private:
  int buffer_;
  double arrival_rate_;
  double service_rate_;
  double epoch_length_;
  Matrix generator_;
  Matrix augmented_;
  Matrix transition_;
  Matrix augmented_transition_;
};

}  // namespace sparselb
