#include "sod/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace sod {

using nlohmann::json;

namespace {

// Reads `key` into `field` when present and rejects keys missing from `known`.
class Reader {
 public:
  Reader(const json& j, std::string section) : j_(j), section_(std::move(section)) {
    if (!j_.is_object()) throw std::invalid_argument("config: section '" + section_ + "' must be an object");
  }

  template <typename T>
  Reader& get(const char* key, T& field) {
    seen_.push_back(key);
    if (j_.contains(key)) {
      try {
        field = j_.at(key).get<T>();
      } catch (const json::exception& e) {
        throw std::invalid_argument("config: " + section_ + "." + key + ": " + e.what());
      }
    }
    return *this;
  }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (std::find(seen_.begin(), seen_.end(), k) == seen_.end()) {
        throw std::invalid_argument("config: unknown key '" + section_ + "." + k + "'");
      }
    }
  }

 private:
  const json& j_;
  std::string section_;
  std::vector<std::string> seen_;
};

const json& section(const json& j, const char* name) {
  static const json empty = json::object();
  return j.contains(name) ? j.at(name) : empty;
}

}  // namespace

void SeedSets::validate() const {
  if (train_count < 0 || eval_count < 0) throw std::invalid_argument("seeds: counts must be >= 0");
  const std::uint64_t t_end = train_base + static_cast<std::uint64_t>(train_count);
  const std::uint64_t e_end = eval_base + static_cast<std::uint64_t>(eval_count);
  if (train_count > 0 && eval_count > 0 && train_base < e_end && eval_base < t_end) {
    throw std::invalid_argument("seeds: training and evaluation seed ranges overlap");
  }
}

std::vector<std::uint64_t> SeedSets::train() const {
  std::vector<std::uint64_t> out;
  for (int i = 0; i < train_count; ++i) out.push_back(train_base + i);
  return out;
}

std::vector<std::uint64_t> SeedSets::eval() const {
  std::vector<std::uint64_t> out;
  for (int i = 0; i < eval_count; ++i) out.push_back(eval_base + i);
  return out;
}

void Scenario::validate() const {
  corridor.validate();
  demand.validate();
  limits.validate();
  costs.validate();
  ops.validate();
  dispatch.validate();
  ppo.validate();
  seeds.validate();
  if (rl.period_steps <= 0 || ops.total_steps() % rl.period_steps != 0) {
    throw std::invalid_argument("rl: period_steps must be > 0 and divide the step count");
  }
  if (!(rl.forecast_window > 0.0)) throw std::invalid_argument("rl: forecast_window must be > 0");
  const auto& n = rl.normalization;
  if (n.fleet < 0.0 || n.flex_time < 0.0 || !(n.requests > 0.0) || !(n.time > 0.0) || !(n.forecast > 0.0)) {
    throw std::invalid_argument("rl: normalization scales must be > 0 (fleet and flex_time may be 0 = derived)");
  }
}

json to_json(const Scenario& s) {
  const auto& c = s.corridor;
  const auto& d = s.demand;
  const auto& l = s.limits;
  const auto& k = s.costs;
  const auto& o = s.ops;
  const auto& p = s.dispatch;
  const auto& n = s.rl.normalization;
  return {
      {"corridor",
       {{"mainline_length", c.mainline_length},
        {"segment_lengths", c.segment_lengths},
        {"side_spacing", c.side_spacing},
        {"side_depth", c.side_depth},
        {"side_node_spacing", c.side_node_spacing},
        {"mainline_speed", c.mainline_speed},
        {"side_speed", c.side_speed}}},
      {"demand",
       {{"base_rate", d.base_rate},
        {"end_rate", d.end_rate},
        {"direction_split", d.direction_split},
        {"walk_cap", d.walk_cap},
        {"walk_speed", d.walk_speed}}},
      {"limits",
       {{"max_wait", l.max_wait},
        {"detour_factor", l.detour_factor},
        {"detour_constant", l.detour_constant},
        {"capacity", l.capacity},
        {"flex_window", l.flex_window}}},
      {"costs",
       {{"operating_per_km", k.operating_per_km},
        {"ride_per_hour", k.ride_per_hour},
        {"satisfied_reward", k.satisfied_reward},
        {"fixed_stop_reward", k.fixed_stop_reward},
        {"access_per_hour", k.access_per_hour},
        {"wait_per_hour", k.wait_per_hour},
        {"vehicle_per_hour", k.vehicle_per_hour}}},
      {"operations",
       {{"step", o.step},
        {"horizon", o.horizon},
        {"warmup", o.warmup},
        {"boarding_time", o.boarding_time},
        {"dwell_base", o.dwell_base},
        {"dwell_per_passenger", o.dwell_per_passenger},
        {"fixed_stop_spacing", o.fixed_stop_spacing}}},
      {"dispatch",
       {{"full_headway", p.full_headway},
        {"reserved_headway", p.reserved_headway},
        {"reserved", p.reserved},
        {"controllable", p.controllable},
        {"nominal_period", p.nominal_period},
        {"nominal_offset", p.nominal_offset}}},
      {"rl",
       {{"period_steps", s.rl.period_steps},
        {"forecast_window", s.rl.forecast_window},
        {"normalization",
         {{"fleet", n.fleet},
          {"requests", n.requests},
          {"time", n.time},
          {"flex_time", n.flex_time},
          {"forecast", n.forecast}}}}},
      {"ppo", ppo::to_json(s.ppo)},
      {"seeds",
       {{"train_base", s.seeds.train_base},
        {"train_count", s.seeds.train_count},
        {"eval_base", s.seeds.eval_base},
        {"eval_count", s.seeds.eval_count}}},
  };
}

Scenario scenario_from_json(const json& j) {
  Scenario s;
  if (!j.is_object()) throw std::invalid_argument("config: top level must be an object");
  for (const auto& [k, v] : j.items()) {
    static const std::vector<std::string> top = {"corridor", "demand",   "limits", "costs", "operations",
                                                 "dispatch", "rl",       "ppo",    "seeds"};
    if (std::find(top.begin(), top.end(), k) == top.end()) {
      throw std::invalid_argument("config: unknown section '" + k + "'");
    }
  }
  {
    auto& c = s.corridor;
    Reader r(section(j, "corridor"), "corridor");
    r.get("mainline_length", c.mainline_length)
        .get("segment_lengths", c.segment_lengths)
        .get("side_spacing", c.side_spacing)
        .get("side_depth", c.side_depth)
        .get("side_node_spacing", c.side_node_spacing)
        .get("mainline_speed", c.mainline_speed)
        .get("side_speed", c.side_speed)
        .finish();
  }
  {
    auto& d = s.demand;
    Reader r(section(j, "demand"), "demand");
    r.get("base_rate", d.base_rate)
        .get("end_rate", d.end_rate)
        .get("direction_split", d.direction_split)
        .get("walk_cap", d.walk_cap)
        .get("walk_speed", d.walk_speed)
        .finish();
  }
  {
    auto& l = s.limits;
    Reader r(section(j, "limits"), "limits");
    r.get("max_wait", l.max_wait)
        .get("detour_factor", l.detour_factor)
        .get("detour_constant", l.detour_constant)
        .get("capacity", l.capacity)
        .get("flex_window", l.flex_window)
        .finish();
  }
  {
    auto& k = s.costs;
    Reader r(section(j, "costs"), "costs");
    r.get("operating_per_km", k.operating_per_km)
        .get("ride_per_hour", k.ride_per_hour)
        .get("satisfied_reward", k.satisfied_reward)
        .get("fixed_stop_reward", k.fixed_stop_reward)
        .get("access_per_hour", k.access_per_hour)
        .get("wait_per_hour", k.wait_per_hour)
        .get("vehicle_per_hour", k.vehicle_per_hour)
        .finish();
  }
  {
    auto& o = s.ops;
    Reader r(section(j, "operations"), "operations");
    r.get("step", o.step)
        .get("horizon", o.horizon)
        .get("warmup", o.warmup)
        .get("boarding_time", o.boarding_time)
        .get("dwell_base", o.dwell_base)
        .get("dwell_per_passenger", o.dwell_per_passenger)
        .get("fixed_stop_spacing", o.fixed_stop_spacing)
        .finish();
  }
  {
    auto& p = s.dispatch;
    Reader r(section(j, "dispatch"), "dispatch");
    r.get("full_headway", p.full_headway)
        .get("reserved_headway", p.reserved_headway)
        .get("reserved", p.reserved)
        .get("controllable", p.controllable)
        .get("nominal_period", p.nominal_period)
        .get("nominal_offset", p.nominal_offset)
        .finish();
  }
  {
    const json& rl = section(j, "rl");
    Reader r(rl, "rl");
    json norm = json::object();
    r.get("period_steps", s.rl.period_steps).get("forecast_window", s.rl.forecast_window).get("normalization", norm);
    r.finish();
    auto& n = s.rl.normalization;
    Reader rn(norm, "rl.normalization");
    rn.get("fleet", n.fleet)
        .get("requests", n.requests)
        .get("time", n.time)
        .get("flex_time", n.flex_time)
        .get("forecast", n.forecast)
        .finish();
  }
  if (j.contains("ppo")) s.ppo = ppo::ppo_config_from_json(j.at("ppo"));
  {
    auto& e = s.seeds;
    Reader r(section(j, "seeds"), "seeds");
    r.get("train_base", e.train_base)
        .get("train_count", e.train_count)
        .get("eval_base", e.eval_base)
        .get("eval_count", e.eval_count)
        .finish();
  }
  s.validate();
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::invalid_argument("config: " + path + " is not valid JSON: " + e.what());
  }
  return scenario_from_json(j);
}

std::shared_ptr<const Runtime> Runtime::build(const Scenario& s) {
  s.validate();
  auto rt = std::make_shared<Runtime>();
  rt->scenario = s;
  rt->network = std::make_shared<const Network>(build_corridor(s.corridor));
  rt->demand = std::make_shared<const DemandModel>(rt->network, s.demand, s.ops.horizon);
  rt->context = SimContext::create(rt->network, s.ops, s.limits, s.costs, s.demand);
  return rt;
}

World Runtime::make_world(PolicyKind policy, std::vector<Request> requests) const {
  return World(context, std::move(requests), service_pattern(policy), fleet_classes(policy, scenario.dispatch));
}

}  // namespace sod
