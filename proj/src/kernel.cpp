#include "sparselb/kernel.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace sparselb {

std::vector<double> effective_rates(const Topology& topology, std::span<const double> offload,
                                    double base_rate) {
  const std::size_t n = topology.size();
  if (offload.size() != n) {
    throw std::invalid_argument("offload vector has " + std::to_string(offload.size()) +
                                " entries, topology has " + std::to_string(n));
  }
  if (!(base_rate >= 0.0)) throw std::invalid_argument("base rate must be non-negative");
  std::vector<double> share(n, 0.0);
  for (NodeId j = 0; j < n; ++j) {
    const double a = offload[j];
    if (!(a >= 0.0 && a <= 1.0)) throw std::invalid_argument("offload probabilities must lie in [0, 1]");
    if (topology.degree(j) > 0) share[j] = a / static_cast<double>(topology.degree(j));
  }
  std::vector<double> rates(n);
  // Compensated sum of (incoming shares - own offload), so that balanced
  // profiles such as RND on a regular graph give exactly 1.
  for (NodeId i = 0; i < n; ++i) {
    double s = topology.degree(i) > 0 ? -offload[i] : 0.0;
    double c = 0.0;
    for (NodeId j : topology.neighbors(i)) {
      const double t = s + share[j];
      c += std::abs(s) >= std::abs(share[j]) ? (s - t) + share[j] : (share[j] - t) + s;
      s = t;
    }
    rates[i] = base_rate * (1.0 + (s + c));
  }
  return rates;
}

Matrix build_generator(double arrival_rate, double service_rate, int buffer) {
  if (buffer < 1) throw std::invalid_argument("buffer must be >= 1");
  if (!(arrival_rate >= 0.0) || !std::isfinite(arrival_rate)) {
    throw std::invalid_argument("arrival rate must be finite and non-negative");
  }
  if (!(service_rate > 0.0) || !std::isfinite(service_rate)) {
    throw std::invalid_argument("service rate must be finite and positive");
  }
  Matrix q = Matrix::Zero(buffer + 1, buffer + 1);
  for (int k = 0; k <= buffer; ++k) {
    double out = 0.0;
    if (k < buffer) {
      q(k + 1, k) = arrival_rate;
      out += arrival_rate;
    }
    if (k > 0) {
      q(k - 1, k) = service_rate;
      out += service_rate;
    }
    q(k, k) = -out;
  }
  return q;
}

Matrix build_augmented(double arrival_rate, double service_rate, int buffer) {
  Matrix aug = Matrix::Zero(buffer + 2, buffer + 2);
  aug.topLeftCorner(buffer + 1, buffer + 1) = build_generator(arrival_rate, service_rate, buffer);
  aug(buffer + 1, buffer) = arrival_rate;
  return aug;
}

bool is_column_generator(const Matrix& m, double tol) {
  if (m.rows() != m.cols()) return false;
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    double sum = 0.0, scale = 0.0;
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      if (r != c && m(r, c) < 0.0) return false;
      sum += m(r, c);
      scale += std::abs(m(r, c));
    }
    if (std::abs(sum) > tol * std::max(1.0, scale)) return false;
  }
  return true;
}

namespace {

void require_finite(const Matrix& m, double t) {
  if (m.rows() != m.cols()) throw std::invalid_argument("matrix exponential needs a square matrix");
  if (!m.allFinite() || !std::isfinite(t)) {
    throw std::invalid_argument("matrix exponential input has non-finite entries");
  }
}

Matrix square_repeatedly(Matrix e, int times) {
  for (int k = 0; k < times; ++k) e = e * e;
  return e;
}

}  // namespace

Matrix expm_uniformization(const Matrix& generator, double t) {
  require_finite(generator, t);
  const Eigen::Index n = generator.rows();
  Matrix a = generator * t;
  double q = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) q = std::max(q, -a(k, k));
  if (q == 0.0) return Matrix::Identity(n, n);

  // keep exp(-q) well away from underflow; the pieces are squared back up
  int squarings = 0;
  constexpr double kMaxRate = 32.0;
  if (q > kMaxRate) {
    squarings = static_cast<int>(std::ceil(std::log2(q / kMaxRate)));
    const double scale = std::ldexp(1.0, -squarings);
    a *= scale;
    q *= scale;
  }
  const Matrix p = Matrix::Identity(n, n) + a / q;

  constexpr double kTail = 1e-13;
  Matrix power = Matrix::Identity(n, n);
  double weight = std::exp(-q);
  double mass = weight;
  Matrix result = weight * power;
  for (int k = 1; k < 2000 && 1.0 - mass > kTail; ++k) {
    power = p * power;
    weight *= q / k;
    mass += weight;
    result += weight * power;
  }
  return square_repeatedly(std::move(result), squarings);
}

Matrix expm_taylor(const Matrix& m, double t) {
  require_finite(m, t);
  const Eigen::Index n = m.rows();
  Matrix a = m * t;
  const double norm = a.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  if (norm > 0.5) {
    squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
    a *= std::ldexp(1.0, -squarings);
  }
  Matrix term = Matrix::Identity(n, n);
  Matrix result = term;
  for (int k = 1; k <= 30; ++k) {
    term = a * term / static_cast<double>(k);
    result += term;
    if (term.cwiseAbs().maxCoeff() < 1e-18) break;
  }
  return square_repeatedly(std::move(result), squarings);
}

Matrix matrix_exponential(const Matrix& m, double t) {
  require_finite(m, t);
  if (t >= 0.0 && is_column_generator(m)) return expm_uniformization(m, t);
  return expm_taylor(m, t);
}

EpochKernel::EpochKernel(double arrival_rate, double service_rate, int buffer, double epoch_length)
    : buffer_(buffer),
      arrival_rate_(arrival_rate),
      service_rate_(service_rate),
      epoch_length_(epoch_length),
      generator_(build_generator(arrival_rate, service_rate, buffer)),
      augmented_(build_augmented(arrival_rate, service_rate, buffer)) {
  if (!(epoch_length >= 0.0) || !std::isfinite(epoch_length)) {
    throw std::invalid_argument("epoch length must be finite and non-negative");
  }
  transition_ = expm_uniformization(generator_, epoch_length_);
  augmented_transition_ = expm_taylor(augmented_, epoch_length_);
}

Vector EpochKernel::epoch_law(int start_state) const {
  if (start_state < 0 || start_state > buffer_) throw std::out_of_range("start state outside {0..B}");
  return transition_.col(start_state);
}

double EpochKernel::expected_drops(int start_state) const {
  if (start_state < 0 || start_state > buffer_) throw std::out_of_range("start state outside {0..B}");
  return augmented_transition_(buffer_ + 1, start_state);
}

}  // namespace sparselb
