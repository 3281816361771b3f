#include "sod/dispatch.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace sod {

const char* to_string(PolicyKind p) {
  switch (p) {
    case PolicyKind::kFixedRoute:
      return "fixed_route";
    case PolicyKind::kSemiOnDemand:
      return "sod";
    case PolicyKind::kNominalZonal:
      return "nominal_zonal";
    case PolicyKind::kRLZonal:
      return "rl_zonal";
  }
  return "?";
}

PolicyKind parse_policy(const std::string& name) {
  if (name == "fixed" || name == "fixed_route") return PolicyKind::kFixedRoute;
  if (name == "sod") return PolicyKind::kSemiOnDemand;
  if (name == "nominal" || name == "nominal_zonal") return PolicyKind::kNominalZonal;
  if (name == "rl" || name == "rl_zonal") return PolicyKind::kRLZonal;
  throw std::invalid_argument("unknown policy '" + name + "' (expected fixed, sod, nominal, rl)");
}

bool is_zonal(PolicyKind p) { return p == PolicyKind::kNominalZonal || p == PolicyKind::kRLZonal; }

ServicePattern service_pattern(PolicyKind p) {
  return p == PolicyKind::kFixedRoute ? ServicePattern::kFixedRoute : ServicePattern::kSemiOnDemand;
}

const char* to_string(DispatchSource s) {
  switch (s) {
    case DispatchSource::kBaseline:
      return "baseline";
    case DispatchSource::kOverride:
      return "override";
    case DispatchSource::kRl:
      return "rl";
  }
  return "?";
}

void DispatchSpec::validate() const {
  if (!(full_headway > 0.0) || !(reserved_headway > 0.0) || !(nominal_period > 0.0)) {
    throw std::invalid_argument("dispatch: headways must be > 0");
  }
  if (nominal_offset < 0.0) throw std::invalid_argument("dispatch: nominal_offset must be >= 0");
  if (reserved < 0 || controllable < 0 || fleet_size() <= 0) {
    throw std::invalid_argument("dispatch: fleet sizes must be >= 0 with a positive total");
  }
}

std::vector<FleetClass> fleet_classes(PolicyKind p, const DispatchSpec& spec) {
  std::vector<FleetClass> out;
  if (!is_zonal(p)) {
    out.assign(spec.fleet_size(), FleetClass::kReserved);
    return out;
  }
  out.assign(spec.reserved, FleetClass::kReserved);
  out.insert(out.end(), spec.controllable, FleetClass::kControllable);
  return out;
}

void HeadwayStream::advance(double now) {
  const double k = std::floor((now - offset) / headway + 1e-9) + 1.0;
  next_due = offset + std::max(k, 0.0) * headway;
}

Dispatcher::Dispatcher(PolicyKind policy, const DispatchSpec& spec) : policy_(policy), spec_(spec) {
  spec_.validate();
  main_.headway = is_zonal(policy) ? spec_.reserved_headway : spec_.full_headway;
  main_.next_due = 0.0;
  rotation_.headway = spec_.nominal_period;
  rotation_.offset = spec_.nominal_offset;
  rotation_.next_due = spec_.nominal_offset;
}

std::optional<DispatchCommand> Dispatcher::fire(World& world, HeadwayStream& stream, FleetClass cls, int zone,
                                                DispatchSource source) {
  const double now = world.now();
  if (!stream.due(now)) return std::nullopt;
  const int v = world.first_available(cls);
  if (v < 0) {
    ++lateness_;
    return std::nullopt;
  }
  world.dispatch_vehicle(v, zone);
  stream.advance(now);
  DispatchCommand cmd{world.step_index(), v, source, zone};
  log_.push_back(cmd);
  return cmd;
}

std::vector<DispatchCommand> Dispatcher::baseline_dispatch(World& world) {
  std::vector<DispatchCommand> out;
  const DispatchSource src = is_zonal(policy_) ? DispatchSource::kOverride : DispatchSource::kBaseline;
  if (auto c = fire(world, main_, FleetClass::kReserved, kAllZones, src)) out.push_back(*c);
  if (policy_ == PolicyKind::kNominalZonal) {
    const int zone = 1 + rotation_count_ % 2;
    if (auto c = fire(world, rotation_, FleetClass::kControllable, zone, DispatchSource::kBaseline)) {
      ++rotation_count_;
      out.push_back(*c);
    }
  }
  return out;
}

std::optional<DispatchCommand> Dispatcher::apply_action(World& world, int action) {
  if (action < 0 || action > 3) throw std::invalid_argument("apply_action: action must be in 0..3");
  if (action == 3) return std::nullopt;
  const int v = world.first_available(FleetClass::kControllable);
  if (v < 0) return std::nullopt;
  world.dispatch_vehicle(v, action);
  DispatchCommand cmd{world.step_index(), v, DispatchSource::kRl, action};
  log_.push_back(cmd);
  return cmd;
}

void Dispatcher::write_log_csv(std::ostream& out) const {
  out << "step,vehicle,source,zone\n";
  for (const auto& c : log_) out << c.step << ',' << c.vehicle << ',' << to_string(c.source) << ',' << c.zone << '\n';
}

}  // namespace sod
