#include "sod/env.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "sod/matching.hpp"

namespace sod {

namespace {

int area_index(Segment s) { return static_cast<int>(s); }

// Seconds of flexible window a schedule has not used yet.
double unused_window(const VehicleSchedule& s, double now, double window) {
  if (!s.has_window) return 0.0;
  const int lo = s.last_outbound_fixed();
  const int hi = s.first_inbound_fixed();
  if (lo < 0 || hi < 0) return 0.0;
  if (s.next <= lo) return window;
  if (s.next > hi || (s.next == hi && s.arrived_next)) return 0.0;
  return std::clamp(window - (now - s.stops[lo].departure), 0.0, window);
}

}  // namespace

StateRanges state_ranges(const Scenario& s) {
  const auto& n = s.rl.normalization;
  const double fleet = n.fleet > 0.0 ? n.fleet : s.dispatch.fleet_size();
  const double flex = n.flex_time > 0.0 ? n.flex_time : s.dispatch.fleet_size() * s.limits.flex_window;
  StateRanges r;
  r[0] = {0.0, fleet};
  r[1] = {0.0, fleet};
  r[2] = {0.0, n.forecast};
  for (int k = 0; k < 3; ++k) {
    r[3 + 3 * k] = {0.0, n.requests};
    r[4 + 3 * k] = {0.0, flex};
    r[5 + 3 * k] = {0.0, n.requests};
    r[12 + k] = {0.0, n.time};
    r[15 + k] = {0.0, n.forecast};
  }
  return r;
}

RawState normalize(const RawState& raw, const StateRanges& ranges) {
  RawState out;
  for (int i = 0; i < kStateSize; ++i) {
    const Range& r = ranges[i];
    if (!(r.max > r.min)) throw std::invalid_argument("normalize: range min must be < max");
    out[i] = std::clamp((raw[i] - r.min) / (r.max - r.min), 0.0, 1.0);
  }
  return out;
}

RawState denormalize(const RawState& state, const StateRanges& ranges) {
  RawState out;
  for (int i = 0; i < kStateSize; ++i) out[i] = ranges[i].min + state[i] * (ranges[i].max - ranges[i].min);
  return out;
}

RawState raw_state(const World& world, const DemandModel& demand, const RlSpec& rl) {
  RawState x{};
  const double now = world.now();
  const double window = world.context().limits.flex_window;
  for (const Vehicle& v : world.vehicles()) {
    if (v.status == VehicleStatus::kAtTerminus) {
      if (v.fleet_class == FleetClass::kControllable) x[1] += 1.0;
      continue;
    }
    x[0] += 1.0;
    const VehicleSchedule& s = v.schedule;
    x[4 + 3 * s.zone] += unused_window(s, now, window);
    for (int i = s.next; i < static_cast<int>(s.stops.size()); ++i) {
      // Arrival executes the stop's operations, except terminus boarding,
      // which happens at departure.
      if (i == s.next && s.arrived_next && i > 0) continue;
      for (int rid : s.stops[i].alight) x[5 + 3 * area_index(world.request(rid).service_area)] += 1.0;
      for (int rid : s.stops[i].board) x[5 + 3 * area_index(world.request(rid).service_area)] += 1.0;
    }
  }
  for (int rid : world.pending()) x[3 + 3 * area_index(world.request(rid).service_area)] += 1.0;
  x[2] = demand.forecast(now, rl.forecast_window);
  for (int k = 0; k < 3; ++k) {
    const double last = world.last_dispatch(k);
    x[12 + k] = std::isfinite(last) ? now - last : std::numeric_limits<double>::max();
    x[15 + k] = demand.forecast(now, rl.forecast_window, static_cast<Segment>(k));
  }
  return x;
}

SodEnv::SodEnv(std::shared_ptr<const Runtime> runtime) : rt_(std::move(runtime)) {
  ranges_ = state_ranges(rt_->scenario);
  episode_length_ = rt_->scenario.ops.total_steps() / rt_->scenario.rl.period_steps;
}

Eigen::VectorXd SodEnv::reset(std::uint64_t seed) { return reset_with(rt_->demand->generate(seed)); }

Eigen::VectorXd SodEnv::reset_with(std::vector<Request> requests) {
  world_.emplace(rt_->make_world(PolicyKind::kRLZonal, std::move(requests)));
  dispatcher_.emplace(PolicyKind::kRLZonal, rt_->scenario.dispatch);
  k_ = 0;
  return observe();
}

ppo::StepResult SodEnv::step(int action) {
  if (!world_) throw std::logic_error("SodEnv: step before reset");
  if (done()) throw std::logic_error("SodEnv: step after the episode ended");
  if (action < 0 || action >= kActionCount) throw std::invalid_argument("SodEnv: action out of range");
  const int before = world_->rejected_count();
  for (int j = 0; j < rt_->scenario.rl.period_steps; ++j) {
    dispatcher_->baseline_dispatch(*world_);
    if (j == 0) dispatcher_->apply_action(*world_, action);
    match_step(*world_);
    world_->advance_step();
  }
  ++k_;
  ppo::StepResult out;
  out.reward = -static_cast<double>(world_->rejected_count() - before);
  out.done = done();
  out.observation = observe();
  return out;
}

RawState SodEnv::raw() const { return raw_state(*world_, *rt_->demand, rt_->scenario.rl); }

Eigen::VectorXd SodEnv::observe() const {
  const RawState s = normalize(raw(), ranges_);
  return Eigen::Map<const Eigen::VectorXd>(s.data(), kStateSize);
}

}  // namespace sod
