#include "sod/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>
#include <random>

#include "sod/matching.hpp"

namespace sod {

namespace {

int count_flexible(const World& world) {
  int n = 0;
  for (const CycleRecord& c : world.cycles()) n += c.flexible_stops;
  for (const Vehicle& v : world.vehicles()) {
    for (const Stop& st : v.schedule.stops) {
      if (st.kind == StopKind::kFlexiblePickup || st.kind == StopKind::kFlexibleDropoff) ++n;
    }
  }
  return n;
}

void audit_all(const World& world, std::vector<std::string>& out) {
  for (const Vehicle& v : world.vehicles()) {
    for (auto& msg : audit_schedule(world, v.id)) out.push_back("step " + std::to_string(world.step_index()) + ": " + msg);
  }
}

void finish(EpisodeResult& res, const World& world, const Dispatcher& d, const EpisodeOptions& options) {
  res.metrics = generalized_cost(world);
  res.dispatches = d.log();
  res.lateness = d.lateness();
  res.flexible_stops = count_flexible(world);
  for (auto& msg : audit_requests(world)) res.violations.push_back(msg);
  if (options.event_log) res.events = world.events();
}

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

EpisodeResult run_episode(const std::shared_ptr<const Runtime>& rt, PolicyKind policy, std::uint64_t seed,
                          const ppo::DenseNet* actor, const EpisodeOptions& options) {
  EpisodeResult r = run_episode_on(rt, policy, rt->demand->generate(seed), actor, options);
  r.seed = seed;
  return r;
}

EpisodeResult run_episode_on(const std::shared_ptr<const Runtime>& rt, PolicyKind policy,
                             std::vector<Request> requests, const ppo::DenseNet* actor,
                             const EpisodeOptions& options) {
  EpisodeResult res;
  res.policy = policy;
  if (policy == PolicyKind::kRLZonal) {
    if (actor == nullptr) throw std::invalid_argument("run_episode: the RL policy needs an actor network");
    if (actor->input_size() != kStateSize || actor->output_size() != kActionCount) {
      throw std::invalid_argument("run_episode: actor shape does not match the observation layout");
    }
    SodEnv env(rt);
    Eigen::VectorXd obs = env.reset_with(std::move(requests));
    env.enable_event_log(options.event_log);
    while (!env.done()) {
      const int a = ppo::greedy_action(*actor, obs);
      res.actions.push_back(a);
      ppo::StepResult s = env.step(a);
      res.reward_sum += s.reward;
      obs = std::move(s.observation);
      if (options.audit) audit_all(env.world(), res.violations);
    }
    finish(res, env.world(), env.dispatcher(), options);
    return res;
  }
  World world = rt->make_world(policy, std::move(requests));
  world.enable_event_log(options.event_log);
  Dispatcher dispatcher(policy, rt->scenario.dispatch);
  while (!world.finished()) {
    dispatcher.baseline_dispatch(world);
    match_step(world);
    StepReport rep = world.advance_step();
    for (auto& v : rep.violations) res.violations.push_back(v);
    if (options.audit) audit_all(world, res.violations);
  }
  finish(res, world, dispatcher, options);
  return res;
}

std::uint64_t training_instance(const Scenario& s, int instances, int env, std::uint64_t episode) {
  const int pool = instances > 0 ? std::min(instances, s.seeds.train_count) : s.seeds.train_count;
  if (pool <= 0) throw std::invalid_argument("train: no training instances configured");
  const std::uint64_t h = mix(mix(s.ppo.seed ^ (static_cast<std::uint64_t>(env) << 32)) + episode);
  return s.seeds.train_base + h % static_cast<std::uint64_t>(pool);
}

TrainResult train_policy(const std::shared_ptr<const Runtime>& rt, const TrainOptions& options) {
  const Scenario& sc = rt->scenario;
  const auto start = std::chrono::steady_clock::now();
  ppo::Agent agent(kStateSize, kActionCount, sc.ppo);
  std::vector<ppo::EnvSlot> slots(static_cast<std::size_t>(sc.ppo.num_envs));
  for (int i = 0; i < sc.ppo.num_envs; ++i) {
    auto& slot = slots[static_cast<std::size_t>(i)];
    slot.env = std::make_unique<SodEnv>(rt);
    slot.rng.seed(mix(sc.ppo.seed + 1000003ULL * static_cast<std::uint64_t>(i + 1)));
    const int instances = options.instances;
    slot.instance_seed = [&sc, instances, i](std::uint64_t episode) {
      return training_instance(sc, instances, i, episode);
    };
  }
  TrainResult out;
  for (int u = 0; u < options.updates; ++u) {
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (options.wall_clock_seconds > 0.0 && elapsed >= options.wall_clock_seconds) break;
    try {
      auto rollouts = ppo::collect_rollouts(slots, agent.actor(), agent.critic(), sc.ppo.rollout_length,
                                            options.parallel);
      ppo::UpdateStats st = agent.update(rollouts);
      out.stats.push_back(st);
      if (options.on_update) options.on_update(st);
    } catch (const ppo::PPOError& e) {
      out.aborted = true;
      out.abort_reason = e.what();
      break;
    }
  }
  out.actor = agent.actor();
  out.critic = agent.critic();
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

void write_training_csv(std::ostream& out, const std::vector<ppo::UpdateStats>& stats) {
  out << "update,env_steps,episodes,mean_episode_reward,value_loss,policy_loss,entropy,approx_kl,clip_fraction\n";
  for (const auto& s : stats) {
    out << s.update << ',' << s.env_steps << ',' << s.episodes << ',' << s.mean_episode_reward << ','
        << s.value_loss << ',' << s.policy_loss << ',' << s.entropy << ',' << s.approx_kl << ',' << s.clip_fraction
        << '\n';
  }
}

CompareResult compare_policies(const std::shared_ptr<const Runtime>& rt, const std::vector<PolicyKind>& policies,
                               const std::vector<std::uint64_t>& seeds, const ppo::DenseNet* actor,
                               const EpisodeOptions& options) {
  CompareResult out;
  out.policies = policies;
  out.seeds = seeds;
  out.runs.assign(policies.size(), std::vector<EpisodeResult>(seeds.size()));
  for (std::size_t s = 0; s < seeds.size(); ++s) {
    // One request stream per seed, shared by every policy.
    const std::vector<Request> demand = rt->demand->generate(seeds[s]);
    for (std::size_t p = 0; p < policies.size(); ++p) {
      try {
        out.runs[p][s] = run_episode_on(rt, policies[p], demand, actor, options);
        out.runs[p][s].seed = seeds[s];
      } catch (const std::exception& e) {
        out.errors.push_back(std::string(to_string(policies[p])) + " seed " + std::to_string(seeds[s]) + ": " +
                             e.what());
        out.runs[p][s].policy = policies[p];
        out.runs[p][s].seed = seeds[s];
      }
      const auto& acts = out.runs[p][s].actions;
      if (policies[p] == PolicyKind::kRLZonal) {
        if (out.action_counts.size() < acts.size()) out.action_counts.resize(acts.size(), {0, 0, 0, 0});
        for (std::size_t k = 0; k < acts.size(); ++k) ++out.action_counts[k][static_cast<std::size_t>(acts[k])];
      }
    }
  }
  return out;
}

void write_action_density_csv(std::ostream& out, const CompareResult& r, int bucket_steps) {
  bucket_steps = std::max(bucket_steps, 1);
  out << "bucket_start,action0,action1,action2,action3\n";
  for (std::size_t b = 0; b < r.action_counts.size(); b += static_cast<std::size_t>(bucket_steps)) {
    std::array<double, kActionCount> sum{};
    double total = 0.0;
    for (std::size_t k = b; k < std::min(r.action_counts.size(), b + bucket_steps); ++k) {
      for (int a = 0; a < kActionCount; ++a) {
        sum[a] += r.action_counts[k][a];
        total += r.action_counts[k][a];
      }
    }
    out << b;
    for (int a = 0; a < kActionCount; ++a) out << ',' << (total > 0 ? sum[a] / total : 0.0);
    out << '\n';
  }
}

Bootstrap paired_bootstrap(const std::vector<double>& a, const std::vector<double>& b, int resamples,
                           std::uint64_t seed, double confidence) {
  if (a.size() != b.size() || a.empty()) throw std::invalid_argument("bootstrap: samples must be paired and non-empty");
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  Bootstrap out;
  for (double x : d) out.mean += x;
  out.mean /= static_cast<double>(d.size());
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, d.size() - 1);
  std::vector<double> means(static_cast<std::size_t>(resamples));
  for (auto& m : means) {
    double s = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) s += d[pick(rng)];
    m = s / static_cast<double>(d.size());
  }
  out.lower = quantile(means, 1.0 - confidence);
  return out;
}

}  // namespace sod
