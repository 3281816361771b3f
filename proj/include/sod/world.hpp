#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "sod/demand.hpp"
#include "sod/network.hpp"
#include "sod/params.hpp"

namespace sod {

enum class ServicePattern : std::uint8_t { kSemiOnDemand, kFixedRoute };
enum class FleetClass : std::uint8_t { kReserved, kControllable };
enum class VehicleStatus : std::uint8_t { kAtTerminus, kBoarding, kEnRoute };
enum class StopKind : std::uint8_t {
  kTerminus,
  kFixedStop,
  kFlexiblePickup,
  kFlexibleDropoff,
  kTurnaround
};

const char* to_string(StopKind k);
const char* to_string(VehicleStatus s);

// Zone assignment z_v: 0 serves every flexible zone, k serves only zone k.
inline constexpr int kAllZones = 0;
inline constexpr int kZoneCount = 3;

bool zone_serves(int zone, Segment segment);

class SimError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Shared, immutable simulation setup derived from the network and parameters.
struct SimContext {
  std::shared_ptr<const Network> network;
  OperationsSpec ops;
  FeasibilityLimits limits;
  CostCoefficients costs;
  double walk_speed = 1.25;
  double walk_cap = 600.0;
  std::vector<int> fixed_stops;        // outbound order, terminus excluded
  std::array<int, kZoneCount> turnaround{};  // per zone assignment

  static std::shared_ptr<const SimContext> create(std::shared_ptr<const Network> network,
                                                  const OperationsSpec& ops,
                                                  const FeasibilityLimits& limits,
                                                  const CostCoefficients& costs,
                                                  const DemandProfile& demand);

  double travel(int a, int b) const { return network->travel_time(a, b); }
  double distance(int a, int b) const { return network->travel_distance(a, b); }
  double dwell(StopKind kind, int passenger_ops) const;
};

// Maximum cycle duration from dispatch to terminus return. Every applied
// insertion keeps the planned return within this bound.
double cycle_time_bound(const SimContext& ctx, int zone, ServicePattern pattern);

struct Stop {
  int node = 0;
  StopKind kind = StopKind::kFixedStop;
  std::vector<int> board;
  std::vector<int> alight;
  double arrival = 0.0;
  double departure = 0.0;

  int passenger_ops() const { return static_cast<int>(board.size() + alight.size()); }
};

// One cycle of a vehicle: terminus, outbound fixed stops, flexible section
// around a turnaround, inbound fixed stops, terminus.
struct VehicleSchedule {
  std::vector<Stop> stops;
  int zone = kAllZones;
  double dispatch_time = 0.0;
  double deadline = 0.0;  // latest allowed terminus return
  bool has_window = true;
  // Stop the vehicle is heading to or dwelling at. Stops before it are done.
  int next = 0;
  bool arrived_next = false;

  bool active() const { return !stops.empty(); }
  int last() const { return static_cast<int>(stops.size()) - 1; }
  // Index of the last fixed stop before the turnaround, or -1.
  int last_outbound_fixed() const;
  // Index of the first fixed stop after the turnaround, or -1.
  int first_inbound_fixed() const;
  double pickup_time_at(int i) const { return i == 0 ? stops[0].departure : stops[i].arrival; }
  double planned_distance(const SimContext& ctx) const;
};

struct Vehicle {
  int id = 0;
  FleetClass fleet_class = FleetClass::kReserved;
  VehicleStatus status = VehicleStatus::kAtTerminus;
  int zone = kAllZones;
  VehicleSchedule schedule;
  std::vector<int> onboard;
  double distance = 0.0;         // meters, whole run
  double distance_window = 0.0;  // meters after warm-up
  double deployed = 0.0;         // seconds, whole run
  double deployed_window = 0.0;  // seconds after warm-up
  int cycles = 0;
};

// Position of an insertion relative to the current stop list: attach to stop
// `position`, or insert a new stop before it.
struct Slot {
  int position = 0;
  bool attach = false;

  int order_key() const { return 2 * position + (attach ? 1 : 0); }
  friend bool operator==(const Slot&, const Slot&) = default;
};

struct CycleRecord {
  int vehicle = 0;
  int zone = 0;
  double dispatch_time = 0.0;
  double return_time = 0.0;
  double distance = 0.0;
  int flexible_stops = 0;
};

enum class EventKind : std::uint8_t { kDispatch, kDepart, kArrive, kBoard, kAlight, kReturn };
const char* to_string(EventKind k);

struct Event {
  int step = 0;
  double time = 0.0;
  int vehicle = -1;
  EventKind kind = EventKind::kArrive;
  int node = -1;
  int request = -1;
};

struct StepReport {
  int step = 0;
  int boardings = 0;
  int alightings = 0;
  int arrivals = 0;
  int completed_cycles = 0;
  std::vector<std::string> violations;

  bool empty() const {
    return boardings == 0 && alightings == 0 && arrivals == 0 && completed_cycles == 0 &&
           violations.empty();
  }
};

// The simulated system: fleet, requests, and the clock. A value type: copying
// a world snapshots it completely.
class World {
 public:
  World(std::shared_ptr<const SimContext> ctx, std::vector<Request> demand,
        ServicePattern pattern, std::vector<FleetClass> fleet);

  const SimContext& context() const { return *ctx_; }
  const std::shared_ptr<const SimContext>& context_ptr() const { return ctx_; }
  ServicePattern pattern() const { return pattern_; }

  double now() const { return step_ * ctx_->ops.step; }
  int step_index() const { return step_; }
  int total_steps() const { return total_steps_; }
  bool finished() const { return step_ >= total_steps_; }

  const std::vector<Vehicle>& vehicles() const { return vehicles_; }
  const Vehicle& vehicle(int id) const { return vehicles_.at(id); }
  const std::vector<Request>& requests() const { return requests_; }
  const Request& request(int id) const { return requests_.at(id); }
  // Revealed, unassigned requests ordered by (request_time, id).
  const std::vector<int>& pending() const { return pending_; }
  int rejected_count() const { return rejected_count_; }

  // Lowest-id vehicle of the class that is idle at the terminus, or -1.
  int first_available(FleetClass cls) const;
  int available_count(FleetClass cls) const;

  const VehicleSchedule& dispatch_vehicle(int vehicle_id, int zone);

  // Time of the most recent dispatch with the given zone assignment, or
  // -infinity.
  double last_dispatch(int zone) const { return last_dispatch_[zone]; }

  // Applies an insertion chosen by the matcher. Positions refer to the stop
  // list before insertion.
  void apply_insertion(int vehicle_id, int request_id, Slot pickup, Slot dropoff);
  void reject(int request_id);

  StepReport advance_step();

  const std::vector<CycleRecord>& cycles() const { return cycles_; }
  void enable_event_log(bool on) { log_events_ = on; }
  const std::vector<Event>& events() const { return events_; }
  void write_events_csv(std::ostream& out) const;

 private:
  void reveal_requests();
  void resolve_service_points(Request& r);
  void execute_arrival(Vehicle& v, int index, double t, StepReport& report);
  void execute_terminus_boarding(Vehicle& v, StepReport& report);
  void complete_cycle(Vehicle& v, StepReport& report);
  void account(Vehicle& v, double from, double to);
  void log(EventKind kind, double t, int vehicle, int node, int request = -1);

  std::shared_ptr<const SimContext> ctx_;
  ServicePattern pattern_;
  int step_ = 0;
  int total_steps_ = 0;
  std::vector<Vehicle> vehicles_;
  std::vector<Request> requests_;
  std::size_t next_reveal_ = 0;
  std::vector<int> pending_;
  int rejected_count_ = 0;
  std::array<double, kZoneCount> last_dispatch_{};
  std::vector<CycleRecord> cycles_;
  bool log_events_ = false;
  std::vector<Event> events_;
};

// Recomputes planned arrival/departure times after the anchor stop.
void retime(VehicleSchedule& s, const SimContext& ctx);

// Odometer reading of a cycle at time t, meters from dispatch.
double cycle_odometer(const VehicleSchedule& s, const SimContext& ctx, double t);

// Checks every schedule invariant and feasibility limit for the vehicle's
// current cycle. Returns human-readable violations; empty means valid.
std::vector<std::string> audit_schedule(const World& world, int vehicle_id);

// Checks served/rejected requests against the limits after a run, plus
// request conservation.
std::vector<std::string> audit_requests(const World& world);

}  // namespace sod
