#include "sparselb/network.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace sparselb {

Mlp::Mlp(std::vector<int> layer_sizes) : sizes_(std::move(layer_sizes)) {
  if (sizes_.size() < 2) throw std::invalid_argument("network needs input and output sizes");
  for (int s : sizes_) {
    if (s <= 0) throw std::invalid_argument("layer sizes must be positive");
  }
  Eigen::Index total = 0;
  for (std::size_t l = 0; l < layers(); ++l) {
    offsets_.push_back(total);
    total += static_cast<Eigen::Index>(sizes_[l + 1]) * sizes_[l] + sizes_[l + 1];
  }
  offsets_.push_back(total);
  params_ = Eigen::VectorXd::Zero(total);
}

void Mlp::set_params(const Eigen::VectorXd& params) {
  if (params.size() != params_.size()) {
    throw std::invalid_argument("expected " + std::to_string(params_.size()) + " parameters, got " +
                                std::to_string(params.size()));
  }
  params_ = params;
}

Eigen::Map<const Eigen::MatrixXd> Mlp::weight(std::size_t l) const {
  return {params_.data() + offsets_[l], sizes_[l + 1], sizes_[l]};
}

Eigen::Map<const Eigen::VectorXd> Mlp::bias(std::size_t l) const {
  return {params_.data() + offsets_[l] + static_cast<Eigen::Index>(sizes_[l + 1]) * sizes_[l],
          sizes_[l + 1]};
}

void Mlp::init(Rng& rng, double output_gain) {
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t l = 0; l < layers(); ++l) {
    const double scale = (l + 1 == layers() ? output_gain : 1.0) / std::sqrt(sizes_[l]);
    const Eigen::Index nw = static_cast<Eigen::Index>(sizes_[l + 1]) * sizes_[l];
    for (Eigen::Index k = 0; k < nw; ++k) params_[offsets_[l] + k] = scale * normal(rng);
    for (Eigen::Index k = nw; k < offsets_[l + 1] - offsets_[l]; ++k) params_[offsets_[l] + k] = 0.0;
  }
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& x, Cache* cache) const {
  if (x.rows() != input_dim()) throw std::invalid_argument("network input has wrong dimension");
  Eigen::MatrixXd h = x;
  if (cache) {
    cache->activations.clear();
    cache->activations.push_back(h);
  }
  for (std::size_t l = 0; l < layers(); ++l) {
    Eigen::MatrixXd z = weight(l) * h;
    z.colwise() += bias(l);
    if (l + 1 < layers()) z = z.array().tanh().matrix();
    h = std::move(z);
    if (cache) cache->activations.push_back(h);
  }
  return h;
}

Eigen::VectorXd Mlp::backward(const Cache& cache, const Eigen::MatrixXd& grad_output) const {
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(params_.size());
  Eigen::MatrixXd delta = grad_output;  // dL/dz for the current layer
  for (std::size_t l = layers(); l-- > 0;) {
    const Eigen::MatrixXd& input = cache.activations[l];
    Eigen::Map<Eigen::MatrixXd> gw(grad.data() + offsets_[l], sizes_[l + 1], sizes_[l]);
    Eigen::Map<Eigen::VectorXd> gb(grad.data() + offsets_[l] + gw.size(), sizes_[l + 1]);
    gw.noalias() = delta * input.transpose();
    gb = delta.rowwise().sum();
    if (l == 0) break;
    Eigen::MatrixXd back = weight(l).transpose() * delta;
    // input is tanh output of layer l-1: d tanh = 1 - h^2
    delta = back.array() * (1.0 - input.array().square());
  }
  return grad;
}

Eigen::MatrixXd logistic(const Eigen::MatrixXd& x) {
  return (1.0 / (1.0 + (-x.array()).exp())).matrix();
}

PolicyNetwork PolicyNetwork::create(int buffer, ObservationMode mode, bool observe_regime,
                                    const std::vector<int>& hidden, Rng& rng) {
  if (buffer < 1) throw std::invalid_argument("buffer must be >= 1");
  PolicyNetwork p;
  p.buffer = buffer;
  p.observation_mode = mode;
  p.observe_regime = observe_regime;
  std::vector<int> sizes{p.input_dim()};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(p.output_dim());
  p.net = Mlp(sizes);
  p.net.init(rng, 0.01);
  p.log_std = Eigen::VectorXd::Constant(p.output_dim(), std::log(kInitialExplorationStd));
  p.input_offset = Eigen::VectorXd::Zero(p.input_dim());
  p.input_scale = Eigen::VectorXd::Ones(p.input_dim());
  return p;
}

Eigen::VectorXd PolicyNetwork::input(const Observation& obs, Regime regime) const {
  if (static_cast<int>(obs.vector.size()) != buffer + 1) {
    throw std::invalid_argument("observation dimension " + std::to_string(obs.vector.size()) +
                                " does not match buffer " + std::to_string(buffer));
  }
  Eigen::VectorXd x(input_dim());
  for (int k = 0; k <= buffer; ++k) x[k] = obs.vector[k];
  if (observe_regime) x[buffer + 1] = regime == Regime::High ? 1.0 : 0.0;
  return ((x - input_offset).array() * input_scale.array()).matrix();
}

Eigen::VectorXd PolicyNetwork::mean(const Eigen::VectorXd& in) const {
  return logistic(net.forward(in)).col(0);
}

std::vector<double> PolicyNetwork::mean_zeta(const Observation& obs, Regime regime) const {
  Eigen::VectorXd m = mean(input(obs, regime));
  return {m.data(), m.data() + m.size()};
}

Eigen::VectorXd PolicyNetwork::stddev() const {
  return log_std.array().exp().max(kMinExplorationStd).matrix();
}

namespace {

nlohmann::json to_array(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::VectorXd from_array(const nlohmann::json& a, Eigen::Index expected, const char* what) {
  auto values = a.get<std::vector<double>>();
  if (static_cast<Eigen::Index>(values.size()) != expected) {
    throw std::invalid_argument(std::string("policy document: wrong length for ") + what);
  }
  return Eigen::Map<const Eigen::VectorXd>(values.data(), expected);
}

}  // namespace

nlohmann::json PolicyNetwork::to_json() const {
  return {
      {"format", "sparselb.mfr_policy"},
      {"version", 1},
      {"buffer", buffer},
      {"observation_mode", to_string(observation_mode)},
      {"observe_regime", observe_regime},
      {"layer_sizes", net.layer_sizes()},
      {"activation", "tanh"},
      {"output_squash", "logistic"},
      {"weights", to_array(net.params())},
      {"log_std", to_array(log_std)},
      {"normalization", {{"offset", to_array(input_offset)}, {"scale", to_array(input_scale)}}},
  };
}

PolicyNetwork PolicyNetwork::from_json(const nlohmann::json& doc) {
  if (doc.value("format", "") != "sparselb.mfr_policy") {
    throw std::invalid_argument("not an MF-R policy document");
  }
  if (doc.at("version").get<int>() != 1) throw std::invalid_argument("unsupported policy version");
  PolicyNetwork p;
  p.buffer = doc.at("buffer").get<int>();
  p.observation_mode = parse_observation_mode(doc.at("observation_mode").get<std::string>());
  p.observe_regime = doc.at("observe_regime").get<bool>();
  auto sizes = doc.at("layer_sizes").get<std::vector<int>>();
  if (sizes.size() < 2 || sizes.front() != p.input_dim() || sizes.back() != p.output_dim()) {
    throw std::invalid_argument("policy document: layer sizes inconsistent with buffer");
  }
  p.net = Mlp(sizes);
  p.net.set_params(from_array(doc.at("weights"), p.net.num_params(), "weights"));
  p.log_std = from_array(doc.at("log_std"), p.output_dim(), "log_std");
  p.input_offset = from_array(doc.at("normalization").at("offset"), p.input_dim(), "offset");
  p.input_scale = from_array(doc.at("normalization").at("scale"), p.input_dim(), "scale");
  return p;
}

}  // namespace sparselb
