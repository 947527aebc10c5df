#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sparselb/mfcenv.hpp"
#include "sparselb/network.hpp"
#include "sparselb/parallel.hpp"

namespace sparselb {

struct TrainerConfig {
  double gamma = 0.99;
  double gae_lambda = 1.0;
  double clip = 0.3;
  double kl_coeff = 0.2;
  double kl_target = 0.01;
  double learning_rate = 5e-5;
  int batch_size = 4000;
  int minibatch_size = 512;
  int sgd_iters = 6;
  int epochs = 50;
  std::vector<int> hidden{256, 256};
  bool standardize_advantages = true;
  int eval_episodes = 10;
  int workers = 1;

  void validate(int horizon) const;
};

/// One environment step as seen by the learner.
struct Sample {
  Eigen::VectorXd input;       // network input
  Eigen::VectorXd raw_action;  // Gaussian sample before clamping
  Eigen::VectorXd old_mean;
  Eigen::VectorXd old_std;
  double old_logp = 0.0;
  double reward = 0.0;
  double value = 0.0;
  double advantage = 0.0;
  double value_target = 0.0;
};

struct Batch {
  std::vector<Sample> samples;             // whole episodes, in order
  std::vector<std::size_t> episode_starts;
  std::vector<double> episode_returns;     // undiscounted
  int horizon = 0;
};

/// Collects whole episodes until at least `batch_size` transitions exist.
/// Episode k uses seed combine_seed(seed, k) for the system and a separate
/// derived stream for exploration noise, so the batch does not depend on
/// the worker count.
Batch collect_batch(const Topology& topology, const EnvConfig& env, const PolicyNetwork& policy,
                    int batch_size, std::uint64_t seed, int workers);

struct Advantages {
  std::vector<double> advantages;
  std::vector<double> returns;
};

// Single episode; values[t] is the critic estimate at step t, the value after
// the final step is taken as zero.
Advantages compute_advantages(std::span<const double> rewards, std::span<const double> values,
                              double gamma, double gae_lambda);

// Fills value, advantage and value_target for every sample in the batch.
void compute_advantages(Batch& batch, const Mlp& critic, double gamma, double gae_lambda);

// Log-density of a diagonal Gaussian.
double gaussian_logp(const Eigen::VectorXd& x, const Eigen::VectorXd& mean, const Eigen::VectorXd& std);

struct PolicyLoss {
  double value = 0.0;  // clipped surrogate + kl_coeff * KL
  double kl = 0.0;     // mean KL(old || new)
  double clip_fraction = 0.0;
  Eigen::VectorXd grad_net;
  Eigen::VectorXd grad_log_std;
};

// PPO policy loss and its gradient on `samples[indices]`.
PolicyLoss ppo_policy_loss(const PolicyNetwork& policy, const std::vector<Sample>& samples,
                           std::span<const std::size_t> indices, double clip, double kl_coeff);

struct ValueLoss {
  double value = 0.0;
  Eigen::VectorXd grad;
};

ValueLoss critic_loss(const Mlp& critic, const std::vector<Sample>& samples,
                      std::span<const std::size_t> indices);

class Adam {
 public:
  explicit Adam(Eigen::Index size, double learning_rate);
  void step(Eigen::VectorXd& params, const Eigen::VectorXd& grad);

 private:
  double lr_;
  double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  long t_ = 0;
  Eigen::VectorXd m_, v_;
};

struct UpdateDiagnostics {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double kl = 0.0;
  double clip_fraction = 0.0;
  double kl_coeff = 0.0;
  bool aborted = false;
  std::string message;
};

/// Policy + critic + optimiser state across PPO iterations.
class PpoLearner {
 public:
  PpoLearner(PolicyNetwork policy, const TrainerConfig& config, Rng& init_rng);

  const PolicyNetwork& policy() const { return policy_; }
  const Mlp& critic() const { return critic_; }
  double kl_coeff() const { return kl_coeff_; }

  // sgd_iters shuffled passes of minibatch updates; adapts the KL coefficient.
  UpdateDiagnostics update(Batch& batch, Rng& rng);
  // The minibatch passes alone, on advantages already stored in the batch.
  UpdateDiagnostics optimize(Batch& batch, Rng& rng);

 private:
  TrainerConfig config_;
  PolicyNetwork policy_;
  Mlp critic_;
  Adam policy_opt_;
  Adam log_std_opt_;
  Adam critic_opt_;
  double kl_coeff_;
};

struct CurveRow {
  int iteration = 0;
  double mean_return = 0.0;
  double kl = 0.0;
  double clip_fraction = 0.0;
  double eval_drops = 0.0;
};

struct TrainResult {
  PolicyNetwork policy;  // best by evaluation
  std::vector<CurveRow> curve;
  int best_iteration = 0;
  double best_eval_drops = 0.0;
};

// Mean episode drops of the deterministic (mean-action) policy over a fixed
// seed set.
double evaluate_policy_network(const Topology& topology, const EnvConfig& env,
                               const PolicyNetwork& policy, int episodes, std::uint64_t seed,
                               int workers);

using ProgressFn = std::function<void(const CurveRow&)>;

TrainResult train(const Topology& topology, const EnvConfig& env, const TrainerConfig& config,
                  std::uint64_t seed, const ProgressFn& progress = {});

struct CemConfig {
  int population = 16;
  double elite_frac = 0.25;
  int iterations = 20;
  double init_std = 1.0;
  double min_std = 0.02;
  int eval_episodes = 8;
  std::vector<int> hidden{};
  int workers = 1;

  void validate() const;
};

/// Cross-entropy search over the flattened network weights; the score is
/// minus the mean episode drops over a fixed seed set.
TrainResult cem_train(const Topology& topology, const EnvConfig& env, const CemConfig& config,
                      std::uint64_t seed, const ProgressFn& progress = {});

}  // namespace sparselb
