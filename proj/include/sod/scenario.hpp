#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "sod/demand.hpp"
#include "sod/dispatch.hpp"
#include "sod/network.hpp"
#include "sod/params.hpp"
#include "sod/ppo/ppo.hpp"
#include "sod/world.hpp"

namespace sod {

// Observation scaling. Zero fleet or flexible-time scales derive from the
// fleet size and flexible window.
struct NormalizationRanges {
  double fleet = 0.0;
  double requests = 20.0;
  double time = 1800.0;
  double flex_time = 0.0;
  double forecast = 15.0;
};

struct RlSpec {
  int period_steps = 1;         // simulation steps per decision
  double forecast_window = 900.0;
  NormalizationRanges normalization;
};

// Instance seeds: train_base + i for i < train_count, eval_base + i for
// i < eval_count. The two ranges must not overlap.
struct SeedSets {
  std::uint64_t train_base = 100000;
  int train_count = 2000;
  std::uint64_t eval_base = 1;
  int eval_count = 100;

  void validate() const;
  std::vector<std::uint64_t> train() const;
  std::vector<std::uint64_t> eval() const;
};

struct Scenario {
  CorridorSpec corridor;
  DemandProfile demand;
  FeasibilityLimits limits;
  CostCoefficients costs;
  OperationsSpec ops;
  DispatchSpec dispatch;
  RlSpec rl;
  ppo::PPOConfig ppo;
  SeedSets seeds;

  void validate() const;
};

nlohmann::json to_json(const Scenario& s);
// Unset fields keep their defaults; unknown keys are an error.
Scenario scenario_from_json(const nlohmann::json& j);
Scenario load_scenario(const std::string& path);

// Immutable objects shared by every world built from one scenario.
struct Runtime {
  Scenario scenario;
  std::shared_ptr<const Network> network;
  std::shared_ptr<const DemandModel> demand;
  std::shared_ptr<const SimContext> context;

  static std::shared_ptr<const Runtime> build(const Scenario& s);
  World make_world(PolicyKind policy, std::vector<Request> requests) const;
};

}  // namespace sod
