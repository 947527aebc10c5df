#include "sparselb/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "sparselb/policies.hpp"
#include "sparselb/simulator.hpp"

namespace sparselb {

void TrainerConfig::validate(int horizon) const {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("gamma must lie in [0, 1]");
  if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0)) throw std::invalid_argument("gae_lambda must lie in [0, 1]");
  if (!(clip > 0.0)) throw std::invalid_argument("clip must be positive");
  if (!(kl_coeff >= 0.0) || !(kl_target > 0.0)) throw std::invalid_argument("invalid KL settings");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (batch_size < horizon) throw std::invalid_argument("batch size must cover at least one episode");
  if (minibatch_size < 1 || minibatch_size > batch_size) {
    throw std::invalid_argument("minibatch size must lie in [1, batch size]");
  }
  if (sgd_iters < 1 || epochs < 0 || eval_episodes < 0) throw std::invalid_argument("invalid iteration counts");
}

void CemConfig::validate() const {
  if (population < 4) throw std::invalid_argument("CEM population must be >= 4");
  if (!(elite_frac > 0.0 && elite_frac < 1.0)) throw std::invalid_argument("elite fraction must lie in (0, 1)");
  if (iterations < 0 || eval_episodes < 1) throw std::invalid_argument("invalid CEM iteration counts");
  if (!(init_std > 0.0) || !(min_std >= 0.0)) throw std::invalid_argument("invalid CEM spreads");
}

double gaussian_logp(const Eigen::VectorXd& x, const Eigen::VectorXd& mean, const Eigen::VectorXd& std) {
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  double lp = 0.0;
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    const double u = (x[k] - mean[k]) / std[k];
    lp += -0.5 * u * u - std::log(std[k]) - half_log_2pi;
  }
  return lp;
}

Batch collect_batch(const Topology& topology, const EnvConfig& env, const PolicyNetwork& policy,
                    int batch_size, std::uint64_t seed, int workers) {
  if (batch_size < env.horizon) throw std::invalid_argument("batch size must be >= horizon");
  const std::size_t episodes = (static_cast<std::size_t>(batch_size) + env.horizon - 1) / env.horizon;
  std::vector<std::vector<Sample>> per_episode(episodes);
  const Eigen::VectorXd stddev = policy.stddev();

  parallel_for(episodes, workers, [&](std::size_t k) {
    MfcEnv mfc(topology, env);
    McObservation obs = mfc.reset(combine_seed(seed, k));
    Rng noise(combine_seed(seed ^ 0x6e6f697365ULL, k));
    std::normal_distribution<double> normal(0.0, 1.0);
    auto& out = per_episode[k];
    while (!mfc.done()) {
      Sample s;
      s.input = policy.input(obs, mfc.regime());
      s.old_mean = policy.mean(s.input);
      s.old_std = stddev;
      s.raw_action = s.old_mean;
      for (Eigen::Index j = 0; j < s.raw_action.size(); ++j) s.raw_action[j] += stddev[j] * normal(noise);
      s.old_logp = gaussian_logp(s.raw_action, s.old_mean, stddev);
      Eigen::VectorXd action = s.raw_action.cwiseMax(0.0).cwiseMin(1.0);
      McTransition tr = mfc.step(std::span<const double>(action.data(), action.size()));
      s.reward = tr.reward;
      obs = std::move(tr.next_observation);
      out.push_back(std::move(s));
    }
  });

  Batch batch;
  batch.horizon = env.horizon;
  for (auto& ep : per_episode) {
    batch.episode_starts.push_back(batch.samples.size());
    double ret = 0.0;
    for (auto& s : ep) {
      ret += s.reward;
      batch.samples.push_back(std::move(s));
    }
    batch.episode_returns.push_back(ret);
  }
  return batch;
}

Advantages compute_advantages(std::span<const double> rewards, std::span<const double> values,
                              double gamma, double gae_lambda) {
  if (rewards.size() != values.size()) throw std::invalid_argument("rewards and values differ in length");
  const std::size_t n = rewards.size();
  Advantages out{std::vector<double>(n), std::vector<double>(n)};
  double gae = 0.0, ret = 0.0;
  for (std::size_t t = n; t-- > 0;) {
    const double next_value = t + 1 < n ? values[t + 1] : 0.0;
    const double delta = rewards[t] + gamma * next_value - values[t];
    gae = delta + gamma * gae_lambda * gae;
    ret = rewards[t] + gamma * ret;
    out.advantages[t] = gae;
    out.returns[t] = ret;
  }
  return out;
}

namespace {

Eigen::MatrixXd stack_inputs(const std::vector<Sample>& samples, std::span<const std::size_t> indices) {
  Eigen::MatrixXd x(samples[indices[0]].input.size(), static_cast<Eigen::Index>(indices.size()));
  for (std::size_t c = 0; c < indices.size(); ++c) x.col(static_cast<Eigen::Index>(c)) = samples[indices[c]].input;
  return x;
}

std::vector<std::size_t> iota_indices(std::size_t n) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  return idx;
}

}  // namespace

void compute_advantages(Batch& batch, const Mlp& critic, double gamma, double gae_lambda) {
  if (batch.samples.empty()) return;
  const auto all = iota_indices(batch.samples.size());
  const Eigen::MatrixXd values = critic.forward(stack_inputs(batch.samples, all));
  for (std::size_t e = 0; e < batch.episode_starts.size(); ++e) {
    const std::size_t begin = batch.episode_starts[e];
    const std::size_t end = e + 1 < batch.episode_starts.size() ? batch.episode_starts[e + 1] : batch.samples.size();
    std::vector<double> r, v;
    for (std::size_t t = begin; t < end; ++t) {
      r.push_back(batch.samples[t].reward);
      v.push_back(values(0, static_cast<Eigen::Index>(t)));
    }
    const Advantages adv = compute_advantages(r, v, gamma, gae_lambda);
    for (std::size_t t = begin; t < end; ++t) {
      Sample& s = batch.samples[t];
      s.value = v[t - begin];
      s.advantage = adv.advantages[t - begin];
      s.value_target = adv.returns[t - begin];
    }
  }
}

PolicyLoss ppo_policy_loss(const PolicyNetwork& policy, const std::vector<Sample>& samples,
                           std::span<const std::size_t> indices, double clip, double kl_coeff) {
  if (indices.empty()) throw std::invalid_argument("empty minibatch");
  const auto m = static_cast<double>(indices.size());
  Mlp::Cache cache;
  const Eigen::MatrixXd mu = logistic(policy.net.forward(stack_inputs(samples, indices), &cache));
  const Eigen::VectorXd sigma = policy.stddev();
  const Eigen::Index dim = sigma.size();

  Eigen::MatrixXd grad_mu = Eigen::MatrixXd::Zero(mu.rows(), mu.cols());
  Eigen::VectorXd grad_log_std = Eigen::VectorXd::Zero(dim);
  double surrogate = 0.0, kl = 0.0;
  std::size_t clipped = 0;

  for (std::size_t c = 0; c < indices.size(); ++c) {
    const Sample& s = samples[indices[c]];
    const auto col = static_cast<Eigen::Index>(c);
    const Eigen::VectorXd mean = mu.col(col);
    const double logp = gaussian_logp(s.raw_action, mean, sigma);
    const double ratio = std::exp(logp - s.old_logp);
    const double adv = s.advantage;
    surrogate += std::min(ratio * adv, std::clamp(ratio, 1.0 - clip, 1.0 + clip) * adv);
    if (ratio < 1.0 - clip || ratio > 1.0 + clip) ++clipped;
    // the min() picks the unclipped term strictly inside the trust region
    const bool active = (adv > 0.0 && ratio < 1.0 + clip) || (adv < 0.0 && ratio > 1.0 - clip);
    const double coef = active ? -adv * ratio / m : 0.0;
    const double kl_scale = kl_coeff / m;
    for (Eigen::Index k = 0; k < dim; ++k) {
      const double var = sigma[k] * sigma[k];
      const double diff = s.raw_action[k] - mean[k];
      const double old_var = s.old_std[k] * s.old_std[k];
      const double shift = s.old_mean[k] - mean[k];
      kl += std::log(sigma[k] / s.old_std[k]) + (old_var + shift * shift) / (2.0 * var) - 0.5;
      grad_mu(k, col) += coef * diff / var - kl_scale * shift / var;
      grad_log_std[k] += coef * (diff * diff / var - 1.0) + kl_scale * (1.0 - (old_var + shift * shift) / var);
    }
  }

  PolicyLoss loss;
  loss.kl = kl / m;
  loss.clip_fraction = static_cast<double>(clipped) / m;
  loss.value = -surrogate / m + kl_coeff * loss.kl;
  const Eigen::MatrixXd grad_out = (grad_mu.array() * mu.array() * (1.0 - mu.array())).matrix();
  loss.grad_net = policy.net.backward(cache, grad_out);
  // the exploration floor is flat in log_std
  for (Eigen::Index k = 0; k < dim; ++k) {
    if (std::exp(policy.log_std[k]) <= kMinExplorationStd) grad_log_std[k] = 0.0;
  }
  loss.grad_log_std = grad_log_std;
  return loss;
}

ValueLoss critic_loss(const Mlp& critic, const std::vector<Sample>& samples,
                      std::span<const std::size_t> indices) {
  const auto m = static_cast<double>(indices.size());
  Mlp::Cache cache;
  const Eigen::MatrixXd v = critic.forward(stack_inputs(samples, indices), &cache);
  Eigen::MatrixXd grad(1, v.cols());
  double loss = 0.0;
  for (std::size_t c = 0; c < indices.size(); ++c) {
    const double err = v(0, static_cast<Eigen::Index>(c)) - samples[indices[c]].value_target;
    loss += 0.5 * err * err;
    grad(0, static_cast<Eigen::Index>(c)) = err / m;
  }
  return {loss / m, critic.backward(cache, grad)};
}

Adam::Adam(Eigen::Index size, double learning_rate)
    : lr_(learning_rate), m_(Eigen::VectorXd::Zero(size)), v_(Eigen::VectorXd::Zero(size)) {}

void Adam::step(Eigen::VectorXd& params, const Eigen::VectorXd& grad) {
  ++t_;
  m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
  v_ = beta2_ * v_ + (1.0 - beta2_) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  params.array() -= lr_ * (m_.array() / c1) / ((v_.array() / c2).sqrt() + eps_);
}

namespace {

Mlp make_critic(const PolicyNetwork& policy, const std::vector<int>& hidden, Rng& rng) {
  std::vector<int> sizes{policy.input_dim()};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(1);
  Mlp critic(sizes);
  critic.init(rng, 1.0);
  return critic;
}

}  // namespace

PpoLearner::PpoLearner(PolicyNetwork policy, const TrainerConfig& config, Rng& init_rng)
    : config_(config),
      policy_(std::move(policy)),
      critic_(make_critic(policy_, config.hidden, init_rng)),
      policy_opt_(policy_.net.num_params(), config.learning_rate),
      log_std_opt_(policy_.log_std.size(), config.learning_rate),
      critic_opt_(critic_.num_params(), config.learning_rate),
      kl_coeff_(config.kl_coeff) {}

UpdateDiagnostics PpoLearner::update(Batch& batch, Rng& rng) {
  compute_advantages(batch, critic_, config_.gamma, config_.gae_lambda);
  auto& samples = batch.samples;
  if (!samples.empty() && config_.standardize_advantages) {
    double mean = 0.0, sq = 0.0;
    for (const auto& s : samples) mean += s.advantage;
    mean /= static_cast<double>(samples.size());
    for (const auto& s : samples) sq += (s.advantage - mean) * (s.advantage - mean);
    const double sd = std::sqrt(sq / static_cast<double>(samples.size()));
    for (auto& s : samples) s.advantage = (s.advantage - mean) / (sd + 1e-8);
  }
  return optimize(batch, rng);
}

UpdateDiagnostics PpoLearner::optimize(Batch& batch, Rng& rng) {
  UpdateDiagnostics diag;
  auto& samples = batch.samples;
  if (samples.empty()) return diag;

  const PolicyNetwork snapshot = policy_;
  const Mlp critic_snapshot = critic_;
  auto order = iota_indices(samples.size());
  const std::size_t mb = static_cast<std::size_t>(config_.minibatch_size);
  std::size_t updates = 0;
  for (int pass = 0; pass < config_.sgd_iters; ++pass) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t begin = 0; begin < order.size(); begin += mb) {
      const std::span<const std::size_t> idx(order.data() + begin, std::min(mb, order.size() - begin));
      const PolicyLoss pl = ppo_policy_loss(policy_, samples, idx, config_.clip, kl_coeff_);
      const ValueLoss vl = critic_loss(critic_, samples, idx);
      if (!std::isfinite(pl.value) || !std::isfinite(vl.value) || !pl.grad_net.allFinite() ||
          !vl.grad.allFinite()) {
        policy_ = snapshot;
        critic_ = critic_snapshot;
        diag.aborted = true;
        diag.message = "non-finite loss; update discarded";
        diag.kl_coeff = kl_coeff_;
        return diag;
      }
      Eigen::VectorXd params = policy_.net.params();
      policy_opt_.step(params, pl.grad_net);
      policy_.net.set_params(params);
      log_std_opt_.step(policy_.log_std, pl.grad_log_std);
      Eigen::VectorXd cparams = critic_.params();
      critic_opt_.step(cparams, vl.grad);
      critic_.set_params(cparams);
      diag.policy_loss += pl.value;
      diag.value_loss += vl.value;
      diag.clip_fraction += pl.clip_fraction;
      ++updates;
    }
  }
  diag.policy_loss /= static_cast<double>(updates);
  diag.value_loss /= static_cast<double>(updates);
  diag.clip_fraction /= static_cast<double>(updates);

  const auto all = iota_indices(samples.size());
  diag.kl = ppo_policy_loss(policy_, samples, all, config_.clip, kl_coeff_).kl;
  if (diag.kl > 2.0 * config_.kl_target) {
    kl_coeff_ *= 2.0;
  } else if (diag.kl < 0.5 * config_.kl_target) {
    kl_coeff_ *= 0.5;
  }
  diag.kl_coeff = kl_coeff_;
  return diag;
}

double evaluate_policy_network(const Topology& topology, const EnvConfig& env,
                               const PolicyNetwork& policy, int episodes, std::uint64_t seed,
                               int workers) {
  if (episodes < 1) throw std::invalid_argument("evaluation needs at least one episode");
  const MfrPolicy mfr(policy);
  std::vector<double> totals(static_cast<std::size_t>(episodes));
  parallel_for(totals.size(), workers, [&](std::size_t k) {
    totals[k] = run_episode(topology, mfr, env.horizon, env.epoch_length, env.system,
                            combine_seed(seed, k)).total_drops;
  });
  return std::accumulate(totals.begin(), totals.end(), 0.0) / static_cast<double>(episodes);
}

TrainResult train(const Topology& topology, const EnvConfig& env, const TrainerConfig& config,
                  std::uint64_t seed, const ProgressFn& progress) {
  env.validate(topology);
  config.validate(env.horizon);
  Rng rng(seed);
  PolicyNetwork initial =
      PolicyNetwork::create(env.system.buffer, env.observation_mode, env.observe_regime, config.hidden, rng);
  PpoLearner learner(initial, config, rng);
  const std::uint64_t eval_seed = combine_seed(seed, 0xe7a1ULL);

  TrainResult result{initial, {}, 0, 0.0};
  if (config.eval_episodes > 0) {
    result.best_eval_drops =
        evaluate_policy_network(topology, env, initial, config.eval_episodes, eval_seed, config.workers);
  }
  for (int it = 1; it <= config.epochs; ++it) {
    Batch batch = collect_batch(topology, env, learner.policy(), config.batch_size,
                                combine_seed(seed, static_cast<std::uint64_t>(it)), config.workers);
    const UpdateDiagnostics diag = learner.update(batch, rng);
    CurveRow row;
    row.iteration = it;
    row.mean_return = std::accumulate(batch.episode_returns.begin(), batch.episode_returns.end(), 0.0) /
                      static_cast<double>(batch.episode_returns.size());
    row.kl = diag.kl;
    row.clip_fraction = diag.clip_fraction;
    if (config.eval_episodes > 0) {
      row.eval_drops = evaluate_policy_network(topology, env, learner.policy(), config.eval_episodes,
                                               eval_seed, config.workers);
      if (row.eval_drops < result.best_eval_drops) {
        result.best_eval_drops = row.eval_drops;
        result.best_iteration = it;
        result.policy = learner.policy();
      }
    } else {
      result.policy = learner.policy();
      result.best_iteration = it;
    }
    result.curve.push_back(row);
    if (progress) progress(row);
  }
  return result;
}

TrainResult cem_train(const Topology& topology, const EnvConfig& env, const CemConfig& config,
                      std::uint64_t seed, const ProgressFn& progress) {
  env.validate(topology);
  config.validate();
  Rng rng(seed);
  PolicyNetwork base =
      PolicyNetwork::create(env.system.buffer, env.observation_mode, env.observe_regime, config.hidden, rng);
  const std::uint64_t eval_seed = combine_seed(seed, 0xce3ULL);
  auto score = [&](const Eigen::VectorXd& params) {
    PolicyNetwork p = base;
    p.net.set_params(params);
    return evaluate_policy_network(topology, env, p, config.eval_episodes, eval_seed, config.workers);
  };

  Eigen::VectorXd mean = base.net.params();
  Eigen::VectorXd spread = Eigen::VectorXd::Constant(mean.size(), config.init_std);
  TrainResult result{base, {}, 0, score(mean)};
  Eigen::VectorXd best = mean;
  const auto elites = static_cast<std::size_t>(
      std::max(1.0, std::ceil(config.elite_frac * static_cast<double>(config.population))));
  std::normal_distribution<double> normal(0.0, 1.0);

  for (int it = 1; it <= config.iterations; ++it) {
    std::vector<Eigen::VectorXd> members(static_cast<std::size_t>(config.population));
    for (auto& m : members) {
      m = mean;
      for (Eigen::Index k = 0; k < m.size(); ++k) m[k] += spread[k] * normal(rng);
    }
    std::vector<double> drops(members.size());
    for (std::size_t k = 0; k < members.size(); ++k) drops[k] = score(members[k]);

    auto order = iota_indices(members.size());
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return drops[a] < drops[b]; });
    if (drops[order[0]] < result.best_eval_drops) {
      result.best_eval_drops = drops[order[0]];
      result.best_iteration = it;
      best = members[order[0]];
    }
    Eigen::VectorXd new_mean = Eigen::VectorXd::Zero(mean.size());
    for (std::size_t e = 0; e < elites; ++e) new_mean += members[order[e]];
    new_mean /= static_cast<double>(elites);
    Eigen::VectorXd var = Eigen::VectorXd::Zero(mean.size());
    for (std::size_t e = 0; e < elites; ++e) var += (members[order[e]] - new_mean).cwiseAbs2();
    var /= static_cast<double>(elites);
    mean = new_mean;
    spread = var.cwiseSqrt().cwiseMax(config.min_std);

    CurveRow row;
    row.iteration = it;
    row.mean_return = -std::accumulate(drops.begin(), drops.end(), 0.0) / static_cast<double>(drops.size());
    row.eval_drops = result.best_eval_drops;
    result.curve.push_back(row);
    if (progress) progress(row);
  }
  result.policy.net.set_params(best);
  return result;
}

}  // namespace sparselb
