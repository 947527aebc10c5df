#pragma once

#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "sparselb/common.hpp"
#include "sparselb/observation.hpp"
#include "sparselb/traffic.hpp"

namespace sparselb {

/// Fully connected network with tanh hidden layers and a linear output.
/// Parameters live in one flat vector, layer by layer: W (out x in,
/// column-major) followed by b (out).
class Mlp {
 public:
  struct Cache {
    // activations[0] is the input batch, activations[l] the output of layer l
    std::vector<Eigen::MatrixXd> activations;
  };

  Mlp() = default;
  explicit Mlp(std::vector<int> layer_sizes);

  const std::vector<int>& layer_sizes() const { return sizes_; }
  int input_dim() const { return sizes_.front(); }
  int output_dim() const { return sizes_.back(); }
  Eigen::Index num_params() const { return params_.size(); }

  const Eigen::VectorXd& params() const { return params_; }
  void set_params(const Eigen::VectorXd& params);

  // Normal(0, 1/fan_in) weights, zero biases; output layer scaled by output_gain.
  void init(Rng& rng, double output_gain);

  // x is input_dim x batch; returns output_dim x batch.
  Eigen::MatrixXd forward(const Eigen::MatrixXd& x, Cache* cache = nullptr) const;

  // Gradient of a loss w.r.t. the parameters, given dLoss/dOutput for the
  // batch that produced `cache`.
  Eigen::VectorXd backward(const Cache& cache, const Eigen::MatrixXd& grad_output) const;

 private:
  std::size_t layers() const { return sizes_.size() - 1; }
  Eigen::Map<const Eigen::MatrixXd> weight(std::size_t l) const;
  Eigen::Map<const Eigen::VectorXd> bias(std::size_t l) const;

  std::vector<int> sizes_;
  std::vector<Eigen::Index> offsets_;
  Eigen::VectorXd params_;
};

inline constexpr double kMinExplorationStd = 0.01;
inline constexpr double kInitialExplorationStd = 0.2;

/// MF-R upper-level policy: observation -> decision rule zeta in [0,1]^{B+1}
/// through a logistic squash of the network output, with a state-independent
/// diagonal Gaussian for exploration around that mean.
struct PolicyNetwork {
  int buffer = 5;
  ObservationMode observation_mode = ObservationMode::Global;
  bool observe_regime = false;
  Mlp net;
  Eigen::VectorXd log_std;
  Eigen::VectorXd input_offset;
  Eigen::VectorXd input_scale;

  static PolicyNetwork create(int buffer, ObservationMode mode, bool observe_regime,
                              const std::vector<int>& hidden, Rng& rng);

  int input_dim() const { return buffer + 1 + (observe_regime ? 1 : 0); }
  int output_dim() const { return buffer + 1; }

  Eigen::VectorXd input(const Observation& obs, Regime regime) const;
  Eigen::VectorXd mean(const Eigen::VectorXd& input) const;
  std::vector<double> mean_zeta(const Observation& obs, Regime regime) const;
  Eigen::VectorXd stddev() const;

  nlohmann::json to_json() const;
  static PolicyNetwork from_json(const nlohmann::json& doc);
};

Eigen::MatrixXd logistic(const Eigen::MatrixXd& x);

}  // namespace sparselb
