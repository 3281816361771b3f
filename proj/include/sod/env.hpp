#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "sod/dispatch.hpp"
#include "sod/ppo/env.hpp"
#include "sod/scenario.hpp"

namespace sod {

// Observation layout (index: quantity, scale):
//   0  vehicles away from the terminus              / fleet
//   1  controllable vehicles idle at the terminus   / fleet
//   2  demand forecast over the next window, total  / forecast
//   for k in {fixed route, zone 1, zone 2}:
//   3+3k  pending requests with service area k           / requests
//   4+3k  unused flexible-window seconds, vehicles z = k / flex_time
//   5+3k  planned, unexecuted boardings and alightings
//         of requests with service area k                / requests
//   12+k  seconds since the last dispatch with z = k     / time
//   15+k  demand forecast for segment k                  / forecast
// Category 0 doubles as zone assignment 0 (regular SoD) in entries 4 and 12.
inline constexpr int kStateLayoutVersion = 1;
inline constexpr int kStateSize = 18;
inline constexpr int kActionCount = 4;
inline constexpr int kHoldAction = 3;

using RawState = std::array<double, kStateSize>;

struct Range {
  double min = 0.0;
  double max = 1.0;
};

using StateRanges = std::array<Range, kStateSize>;

StateRanges state_ranges(const Scenario& s);
// (x - min) / (max - min) clamped to [0, 1].
RawState normalize(const RawState& raw, const StateRanges& ranges);
RawState denormalize(const RawState& state, const StateRanges& ranges);

RawState raw_state(const World& world, const DemandModel& demand, const RlSpec& rl);

// One simulation world as an episodic decision process. Each step applies the
// reserved override, then the action, then matching and the clock, for one
// decision period. Copying the environment snapshots the episode.
class SodEnv : public ppo::Environment {
 public:
  explicit SodEnv(std::shared_ptr<const Runtime> runtime);

  int observation_size() const override { return kStateSize; }
  int action_count() const override { return kActionCount; }

  Eigen::VectorXd reset(std::uint64_t seed) override;
  // Starts an episode on a given request stream.
  Eigen::VectorXd reset_with(std::vector<Request> requests);
  ppo::StepResult step(int action) override;

  Eigen::VectorXd observe() const;
  RawState raw() const;

  const World& world() const { return *world_; }
  void enable_event_log(bool on) { world_->enable_event_log(on); }
  const Dispatcher& dispatcher() const { return *dispatcher_; }
  int decision_index() const { return k_; }
  int episode_length() const { return episode_length_; }
  bool done() const { return k_ >= episode_length_; }

 private:
  std::shared_ptr<const Runtime> rt_;
  StateRanges ranges_;
  std::optional<World> world_;
  std::optional<Dispatcher> dispatcher_;
  int k_ = 0;
  int episode_length_ = 0;
};

}  // namespace sod
