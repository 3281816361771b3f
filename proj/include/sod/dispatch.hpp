#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sod/world.hpp"

namespace sod {

enum class PolicyKind : std::uint8_t { kFixedRoute, kSemiOnDemand, kNominalZonal, kRLZonal };

const char* to_string(PolicyKind p);
// Accepts fixed, sod, nominal, rl (and the long names printed by to_string).
PolicyKind parse_policy(const std::string& name);
bool is_zonal(PolicyKind p);
ServicePattern service_pattern(PolicyKind p);

struct DispatchSpec {
  double full_headway = 300.0;      // FixedRoute and SoD
  double reserved_headway = 600.0;  // minimum-service override in zonal modes
  int reserved = 4;
  int controllable = 4;
  double nominal_period = 600.0;  // zone rotation of the nominal zonal policy
  double nominal_offset = 300.0;

  void validate() const;
  int fleet_size() const { return reserved + controllable; }
};

// Fleet classes in vehicle-id order. Zonal kinds put the reserved vehicles
// first; FixedRoute and SoD treat the whole fleet as one reserved pool.
std::vector<FleetClass> fleet_classes(PolicyKind p, const DispatchSpec& spec);

enum class DispatchSource : std::uint8_t { kBaseline, kOverride, kRl };
const char* to_string(DispatchSource s);

struct DispatchCommand {
  int step = 0;
  int vehicle = -1;
  DispatchSource source = DispatchSource::kBaseline;
  int zone = kAllZones;
};

// A periodic departure stream with slots at offset + k * headway. A slot that
// finds no vehicle stays due until one returns; the next slot is the first one
// after the actual departure.
struct HeadwayStream {
  double headway = 300.0;
  double offset = 0.0;
  double next_due = 0.0;

  bool due(double now) const { return now + 1e-9 >= next_due; }
  void advance(double now);
};

class Dispatcher {
 public:
  Dispatcher(PolicyKind policy, const DispatchSpec& spec);

  PolicyKind policy() const { return policy_; }
  const DispatchSpec& spec() const { return spec_; }

  // Scheduled departures for the current step: the full-fleet headway for
  // FixedRoute/SoD, the reserved override for zonal kinds, plus the zone
  // rotation for NominalZonal.
  std::vector<DispatchCommand> baseline_dispatch(World& world);

  // RL action: 0..2 dispatches a controllable vehicle with that zone, 3 holds.
  // Degrades to a no-op when no controllable vehicle is at the terminus.
  std::optional<DispatchCommand> apply_action(World& world, int action);

  // Steps on which a scheduled departure was due but no vehicle was free.
  int lateness() const { return lateness_; }
  const std::vector<DispatchCommand>& log() const { return log_; }
  void write_log_csv(std::ostream& out) const;

 private:
  std::optional<DispatchCommand> fire(World& world, HeadwayStream& stream, FleetClass cls, int zone,
                                      DispatchSource source);

  PolicyKind policy_;
  DispatchSpec spec_;
  HeadwayStream main_;
  HeadwayStream rotation_;
  int rotation_count_ = 0;
  int lateness_ = 0;
  std::vector<DispatchCommand> log_;
};

}  // namespace sod
