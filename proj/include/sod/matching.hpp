#pragma once

#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "sod/world.hpp"

namespace sod {

// Candidates whose objective delta lies within this of the incumbent are
// treated as ties and resolved by enumeration order (vehicle id, pickup
// position, dropoff position).
inline constexpr double kInsertionTieTolerance = 1e-7;
// Slack allowed on every time constraint during insertion.
inline constexpr double kFeasibilityTolerance = 1e-9;

struct InsertionCandidate {
  int vehicle = -1;
  Slot pickup;
  Slot dropoff;
  double delta_rho = std::numeric_limits<double>::infinity();
};

struct MatchReport {
  std::vector<int> assigned;
  std::vector<int> rejected;
  int still_pending = 0;

  bool empty() const { return assigned.empty() && rejected.empty() && still_pending == 0; }
};

// One scheduled request as seen by the insertion objective.
struct RhoTerm {
  double dropoff_time = 0.0;
  double request_time = 0.0;
  bool fixed_stop = false;
};

// Insertion objective over a set of schedules: operating distance plus ride
// time, minus the rewards for satisfied and fixed-stop-served requests.
double rho(std::span<const double> vehicle_distance_km, std::span<const RhoTerm> requests,
           const CostCoefficients& costs);
double rho(const World& world);

bool zone_compatible(const Request& request, const Vehicle& vehicle);

// Cheapest feasible insertion of a pending request across the fleet.
std::optional<InsertionCandidate> best_insertion(const World& world, int request_id);

// Every feasible insertion of the request into one vehicle, in enumeration
// order.
std::vector<InsertionCandidate> feasible_insertions(const World& world, int request_id, int vehicle_id);

// Rejects requests whose wait deadline has lapsed, then inserts the remaining
// pending requests in request-time order.
MatchReport match_step(World& world);

}  // namespace sod
