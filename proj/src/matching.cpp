#include "sod/matching.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sod {

namespace {

// Enumerates and prices insertions into one vehicle without copying its
// schedule: the modified stop sequence is walked virtually from the anchor.
class InsertionEvaluator {
 public:
  InsertionEvaluator(const World& world, const Vehicle& vehicle)
      : world_(world), ctx_(world.context()), s_(vehicle.schedule) {
    const int n = static_cast<int>(s_.stops.size());
    h_ = s_.next;
    lo_ = s_.last_outbound_fixed();
    hi_ = s_.first_inbound_fixed();
    for (int i = h_ + 1; i < n; ++i) {
      old_distance_ += ctx_.distance(s_.stops[i - 1].node, s_.stops[i].node);
      old_dropoff_sum_ += s_.stops[i].arrival * static_cast<double>(s_.stops[i].alight.size());
    }
    base_load_ = 0;
    for (int i = 0; i <= h_; ++i) {
      base_load_ += static_cast<int>(s_.stops[i].board.size()) - static_cast<int>(s_.stops[i].alight.size());
    }
    pickup_.assign(world.requests().size(), 0.0);
  }

  std::vector<Slot> slots(int node, bool boarding, const Request& r) const {
    std::vector<Slot> out;
    const int n = static_cast<int>(s_.stops.size());
    const int terminus = ctx_.network->terminus();
    if (node == terminus) {
      if (boarding) {
        if (h_ == 0) out.push_back({0, true});
      } else if (n - 1 > h_) {
        out.push_back({n - 1, true});
      }
      return out;
    }
    if (r.fixed_stop_served) {
      for (int i = h_ + 1; i < n; ++i) {
        if (s_.stops[i].kind == StopKind::kFixedStop && s_.stops[i].node == node) out.push_back({i, true});
      }
      return out;
    }
    if (!s_.has_window || lo_ < 0 || hi_ < 0) return out;
    if (!zone_serves(s_.zone, ctx_.network->node(node).segment)) return out;
    const int first = std::max(h_ + 1, lo_ + 1);
    for (int i = first; i <= hi_; ++i) {
      out.push_back({i, false});
      if (i < hi_ && s_.stops[i].node == node) out.push_back({i, true});
    }
    return out;
  }

  // Returns the objective delta, or nullopt when any constraint breaks.
  std::optional<double> evaluate(const Request& r, Slot pickup, Slot dropoff) {
    const auto& limits = ctx_.limits;
    const int n = static_cast<int>(s_.stops.size());
    const std::vector<Request>& reqs = world_.requests();

    double t = s_.stops[h_].departure;
    int prev = s_.stops[h_].node;
    int load = base_load_;
    double dep_lo = (lo_ >= 0 && lo_ <= h_) ? s_.stops[lo_].departure : 0.0;
    double new_distance = 0.0;
    double dropoff_sum = 0.0;
    double new_pickup = 0.0;
    double new_dropoff = 0.0;

    for (int rid : s_.stops[h_].board) {
      if (reqs[rid].state != RequestState::kRiding) pickup_[rid] = s_.pickup_time_at(h_);
    }
    if (pickup.attach && pickup.position == 0) {
      new_pickup = s_.stops[0].departure;
      if (!pickup_ok(r, new_pickup)) return std::nullopt;
      if (++load > limits.capacity) return std::nullopt;
    }

    auto visit = [&](int node, StopKind kind, int old_index, bool add_board, bool add_alight) -> bool {
      const Stop* old = old_index >= 0 ? &s_.stops[old_index] : nullptr;
      const int ops = (old ? old->passenger_ops() : 0) + (add_board ? 1 : 0) + (add_alight ? 1 : 0);
      const double arr = t + ctx_.travel(prev, node);
      const double dep = arr + ctx_.dwell(kind, ops);
      new_distance += ctx_.distance(prev, node);
      if (old) {
        for (int rid : old->alight) {
          const Request& q = reqs[rid];
          const double pk = q.state == RequestState::kRiding ? q.pickup_time : pickup_[rid];
          if (arr - pk > max_ride(q) + kFeasibilityTolerance) return false;
          dropoff_sum += arr;
        }
        load -= static_cast<int>(old->alight.size());
      }
      if (add_alight) {
        if (arr - new_pickup > max_ride(r) + kFeasibilityTolerance) return false;
        new_dropoff = arr;
        --load;
      }
      if (old) {
        for (int rid : old->board) {
          if (!pickup_ok(reqs[rid], arr)) return false;
          pickup_[rid] = arr;
        }
        load += static_cast<int>(old->board.size());
      }
      if (add_board) {
        if (!pickup_ok(r, arr)) return false;
        new_pickup = arr;
        ++load;
      }
      if (load > limits.capacity) return false;
      if (old_index >= 0 && old_index == hi_ && arr - dep_lo > limits.flex_window + kFeasibilityTolerance) {
        return false;
      }
      if (old_index >= 0 && old_index == lo_) dep_lo = dep;
      t = dep;
      prev = node;
      return true;
    };

    for (int i = h_ + 1; i < n; ++i) {
      if (!pickup.attach && pickup.position == i) {
        if (!visit(r.board_node, StopKind::kFlexiblePickup, -1, true, false)) return std::nullopt;
      }
      if (!dropoff.attach && dropoff.position == i) {
        if (!visit(r.alight_node, StopKind::kFlexibleDropoff, -1, false, true)) return std::nullopt;
      }
      const bool board_here = pickup.attach && pickup.position == i;
      const bool alight_here = dropoff.attach && dropoff.position == i;
      if (!visit(s_.stops[i].node, s_.stops[i].kind, i, board_here, alight_here)) return std::nullopt;
    }
    if (t > s_.deadline + kFeasibilityTolerance) return std::nullopt;

    const auto& c = ctx_.costs;
    double delta = c.operating_per_km * (new_distance - old_distance_) / 1000.0;
    delta += c.ride_per_hour * ((dropoff_sum - old_dropoff_sum_) + (new_dropoff - r.request_time)) / 3600.0;
    delta -= c.satisfied_reward;
    if (r.fixed_stop_served) delta -= c.fixed_stop_reward;
    return delta;
  }

 private:
  double max_ride(const Request& q) const {
    return ctx_.limits.max_ride(ctx_.travel(q.board_node, q.alight_node));
  }
  bool pickup_ok(const Request& q, double pickup) const {
    return pickup - q.request_time <= ctx_.limits.max_wait + kFeasibilityTolerance &&
           pickup >= q.request_time + q.access_before_board - kFeasibilityTolerance;
  }

  const World& world_;
  const SimContext& ctx_;
  const VehicleSchedule& s_;
  int h_ = 0;
  int lo_ = -1;
  int hi_ = -1;
  int base_load_ = 0;
  double old_distance_ = 0.0;
  double old_dropoff_sum_ = 0.0;
  std::vector<double> pickup_;
};

bool precedes(Slot pickup, Slot dropoff) {
  return pickup.order_key() < dropoff.order_key() ||
         (pickup.order_key() == dropoff.order_key() && !pickup.attach && !dropoff.attach);
}

template <typename Fn>
void enumerate(const World& world, const Request& r, const Vehicle& v, Fn&& fn) {
  if (!v.schedule.active() || !zone_compatible(r, v)) return;
  InsertionEvaluator eval(world, v);
  const auto pickups = eval.slots(r.board_node, true, r);
  if (pickups.empty()) return;
  const auto dropoffs = eval.slots(r.alight_node, false, r);
  for (Slot p : pickups) {
    for (Slot d : dropoffs) {
      if (!precedes(p, d)) continue;
      if (auto delta = eval.evaluate(r, p, d)) fn(InsertionCandidate{v.id, p, d, *delta});
    }
  }
}

}  // namespace

double rho(std::span<const double> vehicle_distance_km, std::span<const RhoTerm> requests,
           const CostCoefficients& costs) {
  double total = 0.0;
  for (double d : vehicle_distance_km) total += costs.operating_per_km * d;
  for (const RhoTerm& r : requests) {
    total += costs.ride_per_hour * (r.dropoff_time - r.request_time) / 3600.0;
    total -= costs.satisfied_reward;
    if (r.fixed_stop) total -= costs.fixed_stop_reward;
  }
  return total;
}

double rho(const World& world) {
  std::vector<double> distances;
  std::vector<RhoTerm> terms;
  for (const Vehicle& v : world.vehicles()) {
    if (!v.schedule.active()) continue;
    distances.push_back(v.schedule.planned_distance(world.context()) / 1000.0);
    for (const Stop& st : v.schedule.stops) {
      for (int rid : st.alight) {
        const Request& r = world.request(rid);
        terms.push_back({st.arrival, r.request_time, r.fixed_stop_served});
      }
    }
  }
  return rho(distances, terms, world.context().costs);
}

bool zone_compatible(const Request& request, const Vehicle& vehicle) {
  const Segment area = request.revealed ? request.service_area
                                        : (request.origin_segment == Segment::kFixedRoute
                                               ? request.destination_segment
                                               : request.origin_segment);
  if (area == Segment::kFixedRoute) return true;
  return zone_serves(vehicle.zone, area);
}

std::optional<InsertionCandidate> best_insertion(const World& world, int request_id) {
  const Request& r = world.request(request_id);
  std::vector<InsertionCandidate> all;
  double lowest = std::numeric_limits<double>::infinity();
  for (const Vehicle& v : world.vehicles()) {
    enumerate(world, r, v, [&](const InsertionCandidate& c) {
      all.push_back(c);
      lowest = std::min(lowest, c.delta_rho);
    });
  }
  for (const InsertionCandidate& c : all) {
    if (c.delta_rho <= lowest + kInsertionTieTolerance) return c;
  }
  return std::nullopt;
}

std::vector<InsertionCandidate> feasible_insertions(const World& world, int request_id, int vehicle_id) {
  std::vector<InsertionCandidate> out;
  enumerate(world, world.request(request_id), world.vehicle(vehicle_id),
            [&](const InsertionCandidate& c) { out.push_back(c); });
  return out;
}

MatchReport match_step(World& world) {
  MatchReport report;
  const double now = world.now();
  const double max_wait = world.context().limits.max_wait;
  const std::vector<int> pending = world.pending();
  for (int rid : pending) {
    if (now - world.request(rid).request_time > max_wait) {
      world.reject(rid);
      report.rejected.push_back(rid);
    }
  }
  const std::vector<int> remaining = world.pending();
  for (int rid : remaining) {
    auto best = best_insertion(world, rid);
    if (!best) continue;
    if (!zone_compatible(world.request(rid), world.vehicle(best->vehicle))) {
      throw SimError("match_step: zone filter violated");
    }
    world.apply_insertion(best->vehicle, rid, best->pickup, best->dropoff);
    report.assigned.push_back(rid);
  }
  report.still_pending = static_cast<int>(world.pending().size());
  return report;
}

}  // namespace sod
