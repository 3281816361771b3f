#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "sod/ppo/env.hpp"
#include "sod/ppo/net.hpp"

namespace sod::ppo {

class PPOError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PPOConfig {
  double clip = 0.2;
  double gamma = 0.99;
  double lambda = 0.95;
  int minibatch = 64;
  int epochs = 10;
  double learning_rate = 0.003;
  int num_envs = 8;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  double entropy_coef = 0.0;
  double max_grad_norm = 0.5;  // per network; 0 disables clipping
  int rollout_length = 180;    // steps per environment per update
  std::vector<int> hidden = {64, 64};
  std::uint64_t seed = 7;

  void validate() const;
};

nlohmann::json to_json(const PPOConfig& c);
// Missing keys keep their defaults; unknown keys are an error.
PPOConfig ppo_config_from_json(const nlohmann::json& j);

double td_error(double reward, double value, double next_value, double gamma, bool done);

// Backward recursion A_t = delta_t + gamma * lambda * (1 - done_t) * A_{t+1}.
std::vector<double> gae(const std::vector<double>& deltas, const std::vector<std::uint8_t>& dones, double gamma,
                        double lambda);

double clip_g(double epsilon, double advantage);

struct PolicyBatch {
  MatrixXd states;  // one column per transition
  std::vector<int> actions;
  VectorXd old_log_prob;
  VectorXd advantages;
};

struct PolicyObjective {
  double surrogate = 0.0;  // mean clipped surrogate, to be maximized
  double entropy = 0.0;    // mean policy entropy
  double approx_kl = 0.0;  // mean(old_log_prob - log_prob)
  double clip_fraction = 0.0;
  VectorXd grad;  // gradient of surrogate + entropy_coef * entropy
};

PolicyObjective surrogate_loss(const DenseNet& actor, const PolicyBatch& batch, double clip, double entropy_coef);

struct ValueObjective {
  double loss = 0.0;  // mean squared error
  VectorXd grad;
};

ValueObjective critic_loss(const DenseNet& critic, const MatrixXd& states, const VectorXd& targets);

class Adam {
 public:
  Adam() = default;
  Adam(Eigen::Index n, double lr, double beta1, double beta2, double epsilon);
  // Descends along `grad`.
  void step(VectorXd& params, const VectorXd& grad);
  long steps() const { return t_; }

 private:
  VectorXd m_, v_;
  double lr_ = 0.0, beta1_ = 0.9, beta2_ = 0.999, epsilon_ = 1e-8;
  long t_ = 0;
};

// One environment's trajectory segment from one collection round.
struct Rollout {
  MatrixXd states;
  std::vector<int> actions;
  std::vector<double> rewards;
  std::vector<double> values;
  std::vector<double> log_probs;
  std::vector<std::uint8_t> dones;
  double bootstrap_value = 0.0;  // V of the state after the last step, 0 if done
  std::vector<double> episode_returns;  // episodes completed in this segment
};

// An environment with its own action RNG and instance-seed stream.
struct EnvSlot {
  std::unique_ptr<Environment> env;
  std::mt19937_64 rng;
  std::function<std::uint64_t(std::uint64_t episode)> instance_seed;
  std::uint64_t episodes = 0;
  VectorXd observation;
  bool in_episode = false;
  double running_return = 0.0;
};

struct ActionSample {
  int action = 0;
  double log_prob = 0.0;
};

ActionSample sample_action(const DenseNet& actor, const VectorXd& state, std::mt19937_64& rng);
int greedy_action(const DenseNet& actor, const VectorXd& state);

// Advances every slot by `steps` actions under the given networks. Slots run
// on separate threads when `parallel`; results are ordered by slot index.
std::vector<Rollout> collect_rollouts(std::vector<EnvSlot>& slots, const DenseNet& actor, const DenseNet& critic,
                                      int steps, bool parallel = true);

struct UpdateStats {
  int update = 0;
  long env_steps = 0;
  int episodes = 0;
  double mean_episode_reward = 0.0;  // NaN when no episode finished
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
};

class Agent {
 public:
  Agent(int observation_size, int action_count, const PPOConfig& config);
  Agent(DenseNet actor, DenseNet critic, const PPOConfig& config);

  const PPOConfig& config() const { return config_; }
  const DenseNet& actor() const { return actor_; }
  const DenseNet& critic() const { return critic_; }

  // Computes advantages for every rollout, then runs the clipped-surrogate
  // epochs. Throws PPOError on non-finite values, leaving the parameters as
  // they were before the call.
  UpdateStats update(const std::vector<Rollout>& rollouts);

 private:
  PPOConfig config_;
  DenseNet actor_, critic_;
  Adam actor_opt_, critic_opt_;
  std::mt19937_64 rng_;
  int updates_ = 0;
  long env_steps_ = 0;
};

struct Checkpoint {
  int layout_version = 0;
  PPOConfig config;
  DenseNet actor;
  DenseNet critic;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
// Refuses files whose layout version differs from `expected_layout`.
Checkpoint load_checkpoint(const std::string& path, int expected_layout);

}  // namespace sod::ppo
