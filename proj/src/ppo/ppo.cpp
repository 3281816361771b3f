#include "sod/ppo/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <thread>

#include <nlohmann/json.hpp>

namespace sod::ppo {

namespace {

bool finite(const VectorXd& v) { return v.allFinite(); }

void clip_norm(VectorXd& g, double max_norm) {
  if (max_norm <= 0.0) return;
  const double n = g.norm();
  if (n > max_norm) g *= max_norm / n;
}

constexpr const char* kCheckpointFormat = "sod-ppo-checkpoint";

nlohmann::json net_to_json(const DenseNet& net) {
  const VectorXd& p = net.parameters();
  return {{"sizes", net.sizes()}, {"parameters", std::vector<double>(p.data(), p.data() + p.size())}};
}

DenseNet net_from_json(const nlohmann::json& j) {
  DenseNet net(j.at("sizes").get<std::vector<int>>());
  const auto p = j.at("parameters").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(p.size()) != net.parameter_count()) {
    throw PPOError("checkpoint: parameter count does not match layer sizes");
  }
  net.set_parameters(Eigen::Map<const VectorXd>(p.data(), static_cast<Eigen::Index>(p.size())));
  return net;
}

}  // namespace

void PPOConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("ppo: ") + what);
  };
  require(clip > 0.0 && clip < 1.0, "clip must be in (0, 1)");
  require(gamma >= 0.0 && gamma <= 1.0, "gamma must be in [0, 1]");
  require(lambda >= 0.0 && lambda <= 1.0, "lambda must be in [0, 1]");
  require(minibatch > 0 && epochs > 0 && num_envs > 0 && rollout_length > 0, "sizes must be > 0");
  require(learning_rate > 0.0, "learning_rate must be > 0");
  require(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 && adam_beta2 < 1.0, "adam betas in [0, 1)");
  require(adam_epsilon > 0.0, "adam_epsilon must be > 0");
  require(entropy_coef >= 0.0 && max_grad_norm >= 0.0, "coefficients must be >= 0");
  for (int h : hidden) require(h > 0, "hidden sizes must be > 0");
}

nlohmann::json to_json(const PPOConfig& c) {
  return {{"clip", c.clip},
          {"gamma", c.gamma},
          {"lambda", c.lambda},
          {"minibatch", c.minibatch},
          {"epochs", c.epochs},
          {"learning_rate", c.learning_rate},
          {"num_envs", c.num_envs},
          {"adam_beta1", c.adam_beta1},
          {"adam_beta2", c.adam_beta2},
          {"adam_epsilon", c.adam_epsilon},
          {"entropy_coef", c.entropy_coef},
          {"max_grad_norm", c.max_grad_norm},
          {"rollout_length", c.rollout_length},
          {"hidden", c.hidden},
          {"seed", c.seed}};
}

PPOConfig ppo_config_from_json(const nlohmann::json& j) {
  PPOConfig c;
  const nlohmann::json known = to_json(c);
  for (const auto& [k, v] : j.items()) {
    if (!known.contains(k)) throw std::invalid_argument("ppo: unknown key '" + k + "'");
  }
  c.clip = j.value("clip", c.clip);
  c.gamma = j.value("gamma", c.gamma);
  c.lambda = j.value("lambda", c.lambda);
  c.minibatch = j.value("minibatch", c.minibatch);
  c.epochs = j.value("epochs", c.epochs);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.num_envs = j.value("num_envs", c.num_envs);
  c.adam_beta1 = j.value("adam_beta1", c.adam_beta1);
  c.adam_beta2 = j.value("adam_beta2", c.adam_beta2);
  c.adam_epsilon = j.value("adam_epsilon", c.adam_epsilon);
  c.entropy_coef = j.value("entropy_coef", c.entropy_coef);
  c.max_grad_norm = j.value("max_grad_norm", c.max_grad_norm);
  c.rollout_length = j.value("rollout_length", c.rollout_length);
  c.hidden = j.value("hidden", c.hidden);
  c.seed = j.value("seed", c.seed);
  c.validate();
  return c;
}

double td_error(double reward, double value, double next_value, double gamma, bool done) {
  return reward + gamma * next_value * (done ? 0.0 : 1.0) - value;
}

std::vector<double> gae(const std::vector<double>& deltas, const std::vector<std::uint8_t>& dones, double gamma,
                        double lambda) {
  if (deltas.size() != dones.size()) throw std::invalid_argument("gae: deltas and dones differ in length");
  std::vector<double> adv(deltas.size());
  double next = 0.0;
  for (std::size_t i = deltas.size(); i-- > 0;) {
    next = deltas[i] + gamma * lambda * (dones[i] ? 0.0 : 1.0) * next;
    adv[i] = next;
  }
  return adv;
}

double clip_g(double epsilon, double advantage) {
  return advantage >= 0.0 ? (1.0 + epsilon) * advantage : (1.0 - epsilon) * advantage;
}

PolicyObjective surrogate_loss(const DenseNet& actor, const PolicyBatch& batch, double clip, double entropy_coef) {
  const Eigen::Index n = batch.states.cols();
  if (n == 0 || static_cast<Eigen::Index>(batch.actions.size()) != n || batch.old_log_prob.size() != n ||
      batch.advantages.size() != n) {
    throw std::invalid_argument("surrogate_loss: batch fields differ in length");
  }
  DenseNet::Tape tape;
  const MatrixXd logits = actor.forward(batch.states, tape);
  MatrixXd grad_logits(logits.rows(), n);
  PolicyObjective out;
  int clipped = 0;
  for (Eigen::Index b = 0; b < n; ++b) {
    const VectorXd lp = log_softmax(logits.col(b));
    const VectorXd p = lp.array().exp().matrix();
    const int a = batch.actions[b];
    const double ratio = std::exp(lp[a] - batch.old_log_prob[b]);
    const double adv = batch.advantages[b];
    const double unclipped = ratio * adv;
    const double bound = clip_g(clip, adv);
    double dterm = 0.0;
    if (unclipped < bound) {
      out.surrogate += unclipped;
      dterm = unclipped;  // d(ratio * A)/d log_prob
    } else {
      out.surrogate += bound;
      if (adv != 0.0) ++clipped;
    }
    VectorXd g = -dterm * p;
    g[a] += dterm;
    const double h = -(p.array() * lp.array()).sum();
    out.entropy += h;
    if (entropy_coef != 0.0) g += entropy_coef * (-(p.array() * (lp.array() + h))).matrix();
    grad_logits.col(b) = g;
    out.approx_kl += batch.old_log_prob[b] - lp[a];
  }
  const double inv = 1.0 / static_cast<double>(n);
  out.surrogate *= inv;
  out.entropy *= inv;
  out.approx_kl *= inv;
  out.clip_fraction = clipped * inv;
  out.grad = actor.backward(tape, grad_logits * inv);
  return out;
}

ValueObjective critic_loss(const DenseNet& critic, const MatrixXd& states, const VectorXd& targets) {
  if (states.cols() != targets.size() || targets.size() == 0) {
    throw std::invalid_argument("critic_loss: states and targets differ in length");
  }
  DenseNet::Tape tape;
  const MatrixXd v = critic.forward(states, tape);
  const VectorXd err = v.row(0).transpose() - targets;
  const double inv = 1.0 / static_cast<double>(targets.size());
  ValueObjective out;
  out.loss = err.squaredNorm() * inv;
  out.grad = critic.backward(tape, (2.0 * inv) * err.transpose());
  return out;
}

Adam::Adam(Eigen::Index n, double lr, double beta1, double beta2, double epsilon)
    : m_(VectorXd::Zero(n)), v_(VectorXd::Zero(n)), lr_(lr), beta1_(beta1), beta2_(beta2), epsilon_(epsilon) {}

void Adam::step(VectorXd& params, const VectorXd& grad) {
  ++t_;
  m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
  v_ = beta2_ * v_ + (1.0 - beta2_) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  params.array() -= lr_ * (m_.array() / c1) / ((v_.array() / c2).sqrt() + epsilon_);
}

ActionSample sample_action(const DenseNet& actor, const VectorXd& state, std::mt19937_64& rng) {
  const VectorXd lp = log_softmax(actor.forward(state));
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  double acc = 0.0;
  int a = static_cast<int>(lp.size()) - 1;
  for (int i = 0; i < lp.size(); ++i) {
    acc += std::exp(lp[i]);
    if (u < acc) {
      a = i;
      break;
    }
  }
  return {a, lp[a]};
}

int greedy_action(const DenseNet& actor, const VectorXd& state) { return argmax(actor.forward(state)); }

std::vector<Rollout> collect_rollouts(std::vector<EnvSlot>& slots, const DenseNet& actor, const DenseNet& critic,
                                      int steps, bool parallel) {
  std::vector<Rollout> out(slots.size());
  std::vector<std::exception_ptr> errors(slots.size());
  auto run = [&](std::size_t i) {
    try {
      EnvSlot& slot = slots[i];
      Rollout& r = out[i];
      r.states.resize(actor.input_size(), steps);
      for (int t = 0; t < steps; ++t) {
        if (!slot.in_episode) {
          slot.observation = slot.env->reset(slot.instance_seed(slot.episodes));
          slot.in_episode = true;
          slot.running_return = 0.0;
        }
        r.states.col(t) = slot.observation;
        r.values.push_back(critic.forward(slot.observation)[0]);
        const ActionSample s = sample_action(actor, slot.observation, slot.rng);
        r.actions.push_back(s.action);
        r.log_probs.push_back(s.log_prob);
        StepResult res = slot.env->step(s.action);
        r.rewards.push_back(res.reward);
        r.dones.push_back(res.done ? 1 : 0);
        slot.running_return += res.reward;
        if (res.done) {
          r.episode_returns.push_back(slot.running_return);
          ++slot.episodes;
          slot.in_episode = false;
        } else {
          slot.observation = std::move(res.observation);
        }
      }
      r.bootstrap_value = slot.in_episode ? critic.forward(slot.observation)[0] : 0.0;
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  if (parallel && slots.size() > 1) {
    std::vector<std::thread> threads;
    for (std::size_t i = 0; i < slots.size(); ++i) threads.emplace_back(run, i);
    for (auto& t : threads) t.join();
  } else {
    for (std::size_t i = 0; i < slots.size(); ++i) run(i);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

Agent::Agent(int observation_size, int action_count, const PPOConfig& config) : config_(config) {
  config_.validate();
  std::vector<int> actor_sizes{observation_size};
  actor_sizes.insert(actor_sizes.end(), config_.hidden.begin(), config_.hidden.end());
  std::vector<int> critic_sizes = actor_sizes;
  actor_sizes.push_back(action_count);
  critic_sizes.push_back(1);
  actor_ = DenseNet::orthogonal(actor_sizes, config_.seed, std::sqrt(2.0), 0.01);
  critic_ = DenseNet::orthogonal(critic_sizes, config_.seed + 1, std::sqrt(2.0), 1.0);
  actor_opt_ = Adam(actor_.parameter_count(), config_.learning_rate, config_.adam_beta1, config_.adam_beta2,
                    config_.adam_epsilon);
  critic_opt_ = Adam(critic_.parameter_count(), config_.learning_rate, config_.adam_beta1, config_.adam_beta2,
                     config_.adam_epsilon);
  rng_.seed(config_.seed + 2);
}

Agent::Agent(DenseNet actor, DenseNet critic, const PPOConfig& config)
    : config_(config), actor_(std::move(actor)), critic_(std::move(critic)) {
  config_.validate();
  actor_opt_ = Adam(actor_.parameter_count(), config_.learning_rate, config_.adam_beta1, config_.adam_beta2,
                    config_.adam_epsilon);
  critic_opt_ = Adam(critic_.parameter_count(), config_.learning_rate, config_.adam_beta1, config_.adam_beta2,
                     config_.adam_epsilon);
  rng_.seed(config_.seed + 2);
}

UpdateStats Agent::update(const std::vector<Rollout>& rollouts) {
  Eigen::Index total = 0;
  for (const Rollout& r : rollouts) total += static_cast<Eigen::Index>(r.rewards.size());
  if (total == 0) throw PPOError("update: empty batch");

  MatrixXd states(actor_.input_size(), total);
  std::vector<int> actions;
  VectorXd old_lp(total), adv(total), returns(total);
  UpdateStats stats;
  double reward_sum = 0.0;
  Eigen::Index off = 0;
  for (const Rollout& r : rollouts) {
    const std::size_t n = r.rewards.size();
    std::vector<double> deltas(n);
    for (std::size_t t = 0; t < n; ++t) {
      const double next = t + 1 < n ? r.values[t + 1] : r.bootstrap_value;
      deltas[t] = td_error(r.rewards[t], r.values[t], next, config_.gamma, r.dones[t] != 0);
    }
    const std::vector<double> a = gae(deltas, r.dones, config_.gamma, config_.lambda);
    for (std::size_t t = 0; t < n; ++t) {
      states.col(off) = r.states.col(static_cast<Eigen::Index>(t));
      actions.push_back(r.actions[t]);
      old_lp[off] = r.log_probs[t];
      adv[off] = a[t];
      returns[off] = a[t] + r.values[t];
      ++off;
    }
    for (double ret : r.episode_returns) reward_sum += ret;
    stats.episodes += static_cast<int>(r.episode_returns.size());
  }
  if (!finite(adv) || !finite(returns) || !states.allFinite()) throw PPOError("update: non-finite rollout values");

  const double mean = adv.mean();
  const double var = total > 1 ? (adv.array() - mean).square().sum() / static_cast<double>(total - 1) : 0.0;
  const double sd = std::sqrt(var);
  VectorXd norm_adv = (adv.array() - mean).matrix();
  if (sd > 1e-8) norm_adv /= sd;

  const DenseNet actor_backup = actor_;
  const DenseNet critic_backup = critic_;
  const Adam actor_opt_backup = actor_opt_;
  const Adam critic_opt_backup = critic_opt_;
  auto abort = [&](const std::string& what) {
    actor_ = actor_backup;
    critic_ = critic_backup;
    actor_opt_ = actor_opt_backup;
    critic_opt_ = critic_opt_backup;
    throw PPOError("update: " + what);
  };

  std::vector<Eigen::Index> perm(static_cast<std::size_t>(total));
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  int batches = 0;
  for (int epoch = 0; epoch < config_.epochs; ++epoch) {
    std::shuffle(perm.begin(), perm.end(), rng_);
    for (Eigen::Index start = 0; start < total; start += config_.minibatch) {
      const Eigen::Index m = std::min<Eigen::Index>(config_.minibatch, total - start);
      PolicyBatch batch;
      batch.states.resize(states.rows(), m);
      batch.old_log_prob.resize(m);
      batch.advantages.resize(m);
      VectorXd targets(m);
      for (Eigen::Index k = 0; k < m; ++k) {
        const Eigen::Index idx = perm[static_cast<std::size_t>(start + k)];
        batch.states.col(k) = states.col(idx);
        batch.actions.push_back(actions[static_cast<std::size_t>(idx)]);
        batch.old_log_prob[k] = old_lp[idx];
        batch.advantages[k] = norm_adv[idx];
        targets[k] = returns[idx];
      }
      PolicyObjective po = surrogate_loss(actor_, batch, config_.clip, config_.entropy_coef);
      ValueObjective vo = critic_loss(critic_, batch.states, targets);
      if (!std::isfinite(po.surrogate) || !finite(po.grad) || !std::isfinite(vo.loss) || !finite(vo.grad)) {
        abort("non-finite loss or gradient");
      }
      VectorXd ga = -po.grad;
      clip_norm(ga, config_.max_grad_norm);
      actor_opt_.step(actor_.parameters(), ga);
      clip_norm(vo.grad, config_.max_grad_norm);
      critic_opt_.step(critic_.parameters(), vo.grad);

      stats.policy_loss += -po.surrogate;
      stats.value_loss += vo.loss;
      stats.entropy += po.entropy;
      stats.approx_kl += po.approx_kl;
      stats.clip_fraction += po.clip_fraction;
      ++batches;
    }
  }
  if (!actor_.parameters().allFinite() || !critic_.parameters().allFinite()) abort("non-finite parameters");

  stats.policy_loss /= batches;
  stats.value_loss /= batches;
  stats.entropy /= batches;
  stats.approx_kl /= batches;
  stats.clip_fraction /= batches;
  env_steps_ += total;
  stats.update = ++updates_;
  stats.env_steps = env_steps_;
  stats.mean_episode_reward =
      stats.episodes > 0 ? reward_sum / stats.episodes : std::numeric_limits<double>::quiet_NaN();
  return stats;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  nlohmann::json j = {{"format", kCheckpointFormat},
                      {"layout_version", ckpt.layout_version},
                      {"config", to_json(ckpt.config)},
                      {"actor", net_to_json(ckpt.actor)},
                      {"critic", net_to_json(ckpt.critic)}};
  // Write then rename, so a failed write never clobbers the previous file.
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw PPOError("checkpoint: cannot write " + tmp);
    out << j.dump() << '\n';
    if (!out) throw PPOError("checkpoint: write failed for " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::string& path, int expected_layout) {
  std::ifstream in(path);
  if (!in) throw PPOError("checkpoint: cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw PPOError("checkpoint: malformed file " + path + ": " + e.what());
  }
  if (j.value("format", std::string{}) != kCheckpointFormat) throw PPOError("checkpoint: not a policy checkpoint");
  Checkpoint c;
  c.layout_version = j.at("layout_version").get<int>();
  if (c.layout_version != expected_layout) {
    throw PPOError("checkpoint: observation layout version " + std::to_string(c.layout_version) +
                   " does not match expected " + std::to_string(expected_layout));
  }
  c.config = ppo_config_from_json(j.at("config"));
  c.actor = net_from_json(j.at("actor"));
  c.critic = net_from_json(j.at("critic"));
  return c;
}

}  // namespace sod::ppo
