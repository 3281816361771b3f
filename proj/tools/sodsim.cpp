// Command-line front end: simulate, train, compare, dump-network, dump-demand.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "sod/env.hpp"
#include "sod/experiment.hpp"
#include "sod/scenario.hpp"

namespace fs = std::filesystem;
using namespace sod;

namespace {

enum ExitCode { kOk = 0, kUsage = 2, kConfig = 3, kRuntime = 4 };

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::shared_ptr<const Runtime> load_runtime(const std::string& path) {
  try {
    Scenario s = path.empty() ? Scenario{} : load_scenario(path);
    return Runtime::build(s);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

std::ofstream open_out(const fs::path& dir, const std::string& name) {
  fs::create_directories(dir);
  std::ofstream out(dir / name);
  if (!out) throw std::runtime_error("cannot write " + (dir / name).string());
  out.precision(10);
  return out;
}

std::optional<ppo::DenseNet> load_actor(const std::string& path, PolicyKind policy) {
  if (policy != PolicyKind::kRLZonal) return std::nullopt;
  if (path.empty()) throw ConfigError("the rl policy needs --checkpoint");
  return ppo::load_checkpoint(path, kStateLayoutVersion).actor;
}

std::vector<std::uint64_t> read_seeds(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open seed file " + path);
  std::vector<std::uint64_t> seeds;
  std::string tok;
  while (in >> tok) {
    try {
      seeds.push_back(std::stoull(tok));
    } catch (const std::exception&) {
      throw ConfigError("seed file " + path + ": '" + tok + "' is not a seed");
    }
  }
  return seeds;
}

void write_metrics(const fs::path& dir, const EpisodeResult& r) {
  nlohmann::json j = to_json(r.metrics);
  j["policy"] = to_string(r.policy);
  j["seed"] = r.seed;
  j["lateness"] = r.lateness;
  j["flexible_stops"] = r.flexible_stops;
  j["violations"] = r.violations;
  if (r.policy == PolicyKind::kRLZonal) j["reward_sum"] = r.reward_sum;
  open_out(dir, "metrics.json") << j.dump(2) << '\n';
  auto csv = open_out(dir, "metrics.csv");
  csv << "field,value\n";
  for (const auto& [k, v] : metric_fields(r.metrics)) csv << k << ',' << v << '\n';
}

int cmd_simulate(const std::string& config, const std::string& policy_name, std::uint64_t seed,
                 const std::string& checkpoint, const std::string& out, bool events) {
  auto rt = load_runtime(config);
  const PolicyKind policy = parse_policy(policy_name);
  auto actor = load_actor(checkpoint, policy);
  EpisodeOptions opt;
  opt.event_log = events;
  opt.audit = true;
  EpisodeResult r = run_episode(rt, policy, seed, actor ? &*actor : nullptr, opt);
  const fs::path dir(out);
  write_metrics(dir, r);
  {
    auto log = open_out(dir, "dispatch_log.csv");
    log << "step,vehicle,source,zone\n";
    for (const auto& c : r.dispatches) log << c.step << ',' << c.vehicle << ',' << to_string(c.source) << ',' << c.zone << '\n';
  }
  if (events) {
    auto ev = open_out(dir, "events.csv");
    ev << "step,time,vehicle,event,node,request\n";
    for (const Event& e : r.events) {
      ev << e.step << ',' << e.time << ',' << e.vehicle << ',' << to_string(e.kind) << ',' << e.node << ','
         << e.request << '\n';
    }
  }
  spdlog::info("{} seed {}: served {} rejected {} cost/pax {:.3f}", to_string(policy), seed, r.metrics.served,
               r.metrics.rejected, r.metrics.cost_per_passenger);
  if (!r.violations.empty()) {
    for (const auto& v : r.violations) spdlog::error("violation: {}", v);
    return kRuntime;
  }
  return kOk;
}

int cmd_train(const std::string& config, const std::string& out, int updates, double wall_clock, int instances) {
  auto rt = load_runtime(config);
  const fs::path dir(out);
  fs::create_directories(dir);
  const std::string ckpt_path = (dir / "checkpoint.json").string();
  TrainOptions opt;
  opt.updates = updates;
  opt.wall_clock_seconds = wall_clock;
  opt.instances = instances;
  auto stats_csv = open_out(dir, "training_stats.csv");
  stats_csv << "update,env_steps,episodes,mean_episode_reward,value_loss,policy_loss,entropy,approx_kl,clip_fraction\n";
  opt.on_update = [&](const ppo::UpdateStats& s) {
    spdlog::info("update {:4d} reward {:8.2f} value_loss {:9.4f} policy_loss {:8.4f} entropy {:6.4f}", s.update,
                 s.mean_episode_reward, s.value_loss, s.policy_loss, s.entropy);
    std::ostringstream row;
    write_training_csv(row, {s});
    const std::string text = row.str();
    stats_csv << text.substr(text.find('\n') + 1) << std::flush;
  };
  TrainResult r = train_policy(rt, opt);
  ppo::save_checkpoint(ckpt_path, {kStateLayoutVersion, rt->scenario.ppo, r.actor, r.critic});
  spdlog::info("{} updates in {:.1f} s, checkpoint {}", r.stats.size(), r.seconds, ckpt_path);
  if (r.aborted) {
    spdlog::error("training aborted: {}", r.abort_reason);
    return kRuntime;
  }
  return kOk;
}

int cmd_compare(const std::string& config, const std::vector<std::string>& policy_names,
                const std::string& seeds_file, const std::string& checkpoint, const std::string& out,
                int density_bucket) {
  auto rt = load_runtime(config);
  std::vector<PolicyKind> policies;
  for (const auto& n : policy_names) policies.push_back(parse_policy(n));
  std::optional<ppo::DenseNet> actor;
  for (PolicyKind p : policies) {
    if (p == PolicyKind::kRLZonal) actor = load_actor(checkpoint, p);
  }
  const std::vector<std::uint64_t> seeds = seeds_file.empty() ? rt->scenario.seeds.eval() : read_seeds(seeds_file);
  if (seeds.empty()) throw ConfigError("no evaluation seeds");
  spdlog::info("comparing {} policies on {} seeds", policies.size(), seeds.size());
  CompareResult r = compare_policies(rt, policies, seeds, actor ? &*actor : nullptr);
  const fs::path dir(out);
  {
    auto agg = open_out(dir, "aggregate.csv");
    for (std::size_t p = 0; p < policies.size(); ++p) {
      std::vector<RunMetrics> runs;
      for (const auto& e : r.runs[p]) runs.push_back(e.metrics);
      write_aggregate_csv(agg, to_string(policies[p]), runs, p == 0);
    }
  }
  {
    auto runs = open_out(dir, "runs.csv");
    runs << "policy,seed";
    for (const auto& [k, v] : metric_fields(RunMetrics{})) runs << ',' << k;
    runs << '\n';
    for (std::size_t p = 0; p < policies.size(); ++p) {
      for (const auto& e : r.runs[p]) {
        runs << to_string(policies[p]) << ',' << e.seed;
        for (const auto& [k, v] : metric_fields(e.metrics)) runs << ',' << v;
        runs << '\n';
      }
    }
  }
  if (!r.action_counts.empty()) {
    auto dens = open_out(dir, "action_density.csv");
    write_action_density_csv(dens, r, density_bucket);
  }
  nlohmann::json summary;
  summary["seeds"] = seeds.size();
  summary["errors"] = r.errors;
  for (std::size_t p = 0; p < policies.size(); ++p) {
    double served = 0.0, cost = 0.0;
    for (const auto& e : r.runs[p]) {
      served += e.metrics.served;
      cost += e.metrics.cost_per_passenger;
    }
    summary["policies"][to_string(policies[p])] = {{"mean_served", served / seeds.size()},
                                                   {"mean_cost_per_passenger", cost / seeds.size()}};
    spdlog::info("{:14s} mean served {:7.2f} mean cost/pax {:7.3f}", to_string(policies[p]), served / seeds.size(),
                 cost / seeds.size());
  }
  open_out(dir, "summary.json") << summary.dump(2) << '\n';
  for (const auto& e : r.errors) spdlog::error("{}", e);
  return r.errors.empty() ? kOk : kRuntime;
}

int cmd_dump_network(const std::string& config, const std::string& out) {
  auto rt = load_runtime(config);
  const fs::path dir(out);
  auto nodes = open_out(dir, "nodes.csv");
  auto edges = open_out(dir, "edges.csv");
  rt->network->write_csv(nodes, edges);
  spdlog::info("{} nodes written to {}", rt->network->node_count(), dir.string());
  return kOk;
}

int cmd_dump_demand(const std::string& config, std::uint64_t seed, const std::string& out) {
  auto rt = load_runtime(config);
  const auto requests = rt->demand->generate(seed);
  auto csv = open_out(fs::path(out), "demand.csv");
  write_demand_csv(csv, requests);
  spdlog::info("{} requests written", requests.size());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semi-on-demand feeder corridor simulator and dispatch trainer"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config, policy = "sod", checkpoint, out = "out", seeds_file, log_level = "info";
  std::uint64_t seed = 1;
  int updates = 40, instances = 0, density_bucket = 15;
  double wall_clock = 0.0;
  bool events = false;
  std::vector<std::string> policies = {"fixed", "sod", "nominal", "rl"};
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error")->capture_default_str();

  auto* sim = app.add_subcommand("simulate", "Run one episode and write metrics and logs");
  sim->add_option("--config", config, "Scenario JSON (defaults when omitted)");
  sim->add_option("--policy", policy, "fixed, sod, nominal, rl")->capture_default_str();
  sim->add_option("--seed", seed, "Demand instance seed")->capture_default_str();
  sim->add_option("--checkpoint", checkpoint, "Policy checkpoint for rl");
  sim->add_option("--out", out, "Output directory")->capture_default_str();
  sim->add_flag("--events", events, "Write the per-step event log");

  auto* train = app.add_subcommand("train", "Train the zonal dispatch policy with PPO");
  train->add_option("--config", config, "Scenario JSON");
  train->add_option("--out", out, "Output directory")->capture_default_str();
  train->add_option("--updates", updates, "PPO updates")->capture_default_str();
  train->add_option("--wall-clock", wall_clock, "Stop after this many seconds (0 = no limit)");
  train->add_option("--instances", instances, "Training instances to draw from (0 = all)");

  auto* cmp = app.add_subcommand("compare", "Evaluate policies on shared demand instances");
  cmp->add_option("--config", config, "Scenario JSON");
  cmp->add_option("--policy", policies, "Policies to compare")->delimiter(',')->capture_default_str();
  cmp->add_option("--seeds", seeds_file, "File of whitespace-separated seeds (default: evaluation set)");
  cmp->add_option("--checkpoint", checkpoint, "Policy checkpoint for rl");
  cmp->add_option("--out", out, "Output directory")->capture_default_str();
  cmp->add_option("--density-bucket", density_bucket, "Decisions per action-density bucket")->capture_default_str();

  auto* net = app.add_subcommand("dump-network", "Write the corridor network as node and edge CSV");
  net->add_option("--config", config, "Scenario JSON");
  net->add_option("--out", out, "Output directory")->capture_default_str();

  auto* dem = app.add_subcommand("dump-demand", "Write one demand instance as CSV");
  dem->add_option("--config", config, "Scenario JSON");
  dem->add_option("--seed", seed, "Demand instance seed")->capture_default_str();
  dem->add_option("--out", out, "Output directory")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    if (*sim) return cmd_simulate(config, policy, seed, checkpoint, out, events);
    if (*train) return cmd_train(config, out, updates, wall_clock, instances);
    if (*cmp) return cmd_compare(config, policies, seeds_file, checkpoint, out, density_bucket);
    if (*net) return cmd_dump_network(config, out);
    if (*dem) return cmd_dump_demand(config, seed, out);
  } catch (const ConfigError& e) {
    spdlog::error("config error: {}", e.what());
    return kConfig;
  } catch (const std::invalid_argument& e) {
    spdlog::error("invalid argument: {}", e.what());
    return kUsage;
  } catch (const std::exception& e) {
    spdlog::error("runtime error: {}", e.what());
    return kRuntime;
  }
  return kUsage;
}
