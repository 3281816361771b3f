#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sod/dispatch.hpp"
#include "sod/econ.hpp"
#include "sod/env.hpp"
#include "sod/scenario.hpp"

namespace sod {

struct EpisodeOptions {
  bool audit = false;      // check every schedule after every step
  bool event_log = false;  // keep the world's event log
};

struct EpisodeResult {
  PolicyKind policy = PolicyKind::kSemiOnDemand;
  std::uint64_t seed = 0;
  RunMetrics metrics;
  std::vector<DispatchCommand> dispatches;
  std::vector<int> actions;  // RL decisions, one per decision period
  double reward_sum = 0.0;   // RL runs: sum of step rewards
  int lateness = 0;
  int flexible_stops = 0;
  std::vector<std::string> violations;
  std::vector<Event> events;
};

// Runs one full horizon. RLZonal requires an actor and acts greedily.
EpisodeResult run_episode(const std::shared_ptr<const Runtime>& rt, PolicyKind policy, std::uint64_t seed,
                          const ppo::DenseNet* actor = nullptr, const EpisodeOptions& options = {});
EpisodeResult run_episode_on(const std::shared_ptr<const Runtime>& rt, PolicyKind policy,
                             std::vector<Request> requests, const ppo::DenseNet* actor = nullptr,
                             const EpisodeOptions& options = {});

struct TrainOptions {
  int updates = 40;
  double wall_clock_seconds = 0.0;  // 0 = no limit
  int instances = 0;                // training instances drawn from; 0 = all
  bool parallel = true;
  std::function<void(const ppo::UpdateStats&)> on_update;
};

struct TrainResult {
  ppo::DenseNet actor;
  ppo::DenseNet critic;
  std::vector<ppo::UpdateStats> stats;
  bool aborted = false;
  std::string abort_reason;
  double seconds = 0.0;
};

// Instance seed used by environment `env` for its `episode`-th episode.
std::uint64_t training_instance(const Scenario& s, int instances, int env, std::uint64_t episode);

TrainResult train_policy(const std::shared_ptr<const Runtime>& rt, const TrainOptions& options);

void write_training_csv(std::ostream& out, const std::vector<ppo::UpdateStats>& stats);

struct CompareResult {
  std::vector<PolicyKind> policies;
  std::vector<std::uint64_t> seeds;
  // runs[p][s]; a failed cell has its error recorded and default metrics.
  std::vector<std::vector<EpisodeResult>> runs;
  std::vector<std::string> errors;
  // RLZonal decisions: per decision index, counts of actions 0..3.
  std::vector<std::array<int, kActionCount>> action_counts;
};

CompareResult compare_policies(const std::shared_ptr<const Runtime>& rt, const std::vector<PolicyKind>& policies,
                               const std::vector<std::uint64_t>& seeds, const ppo::DenseNet* actor,
                               const EpisodeOptions& options = {});

void write_action_density_csv(std::ostream& out, const CompareResult& r, int bucket_steps);

struct Bootstrap {
  double mean = 0.0;   // observed mean of paired differences
  double lower = 0.0;  // one-sided lower confidence bound
};

// Percentile bootstrap of the mean of a[i] - b[i].
Bootstrap paired_bootstrap(const std::vector<double>& a, const std::vector<double>& b, int resamples,
                           std::uint64_t seed, double confidence = 0.95);

}  // namespace sod
