#include "sod/world.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

namespace sod {

namespace {

constexpr double kTimeTol = 1e-6;

std::string describe(const char* what, int vehicle, int request, double value, double limit) {
  std::ostringstream out;
  out << what << ": vehicle " << vehicle << " request " << request << " value " << value
      << " limit " << limit;
  return out.str();
}

bool is_window_boundary(StopKind k) { return k == StopKind::kFixedStop || k == StopKind::kTerminus; }

bool is_flexible(StopKind k) {
  return k == StopKind::kFlexiblePickup || k == StopKind::kFlexibleDropoff;
}

}  // namespace

const char* to_string(StopKind k) {
  switch (k) {
    case StopKind::kTerminus:
      return "terminus";
    case StopKind::kFixedStop:
      return "fixed";
    case StopKind::kFlexiblePickup:
      return "flex_pickup";
    case StopKind::kFlexibleDropoff:
      return "flex_dropoff";
    case StopKind::kTurnaround:
      return "turnaround";
  }
  return "?";
}

const char* to_string(VehicleStatus s) {
  switch (s) {
    case VehicleStatus::kAtTerminus:
      return "at_terminus";
    case VehicleStatus::kBoarding:
      return "boarding";
    case VehicleStatus::kEnRoute:
      return "en_route";
  }
  return "?";
}

const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::kDispatch:
      return "dispatch";
    case EventKind::kDepart:
      return "depart";
    case EventKind::kArrive:
      return "arrive";
    case EventKind::kBoard:
      return "board";
    case EventKind::kAlight:
      return "alight";
    case EventKind::kReturn:
      return "return";
  }
  return "?";
}

bool zone_serves(int zone, Segment segment) {
  if (segment == Segment::kFixedRoute) return false;
  return zone == kAllZones || zone == static_cast<int>(segment);
}

// ---------------------------------------------------------------------------
// SimContext

std::shared_ptr<const SimContext> SimContext::create(std::shared_ptr<const Network> network,
                                                     const OperationsSpec& ops,
                                                     const FeasibilityLimits& limits,
                                                     const CostCoefficients& costs,
                                                     const DemandProfile& demand) {
  ops.validate();
  limits.validate();
  costs.validate();
  demand.validate();
  auto ctx = std::make_shared<SimContext>();
  ctx->network = std::move(network);
  ctx->ops = ops;
  ctx->limits = limits;
  ctx->costs = costs;
  ctx->walk_speed = demand.walk_speed;
  ctx->walk_cap = demand.walk_cap;

  const Network& net = *ctx->network;
  double fixed_end = 0.0;
  std::array<int, kZoneCount> far{};
  far.fill(net.mainline().back());
  std::array<double, kZoneCount> far_x{};
  far_x.fill(-1.0);
  for (int id : net.mainline()) {
    const Node& nd = net.node(id);
    if (nd.segment == Segment::kFixedRoute) fixed_end = std::max(fixed_end, nd.x);
    const int z = static_cast<int>(nd.segment);
    if (z > 0 && nd.x > far_x[z]) {
      far_x[z] = nd.x;
      far[z] = id;
    }
  }
  for (int k = 1; k * ops.fixed_stop_spacing <= fixed_end + 1e-9; ++k) {
    const int id = net.mainline_node_near(k * ops.fixed_stop_spacing);
    if (id == net.terminus()) continue;
    if (std::find(ctx->fixed_stops.begin(), ctx->fixed_stops.end(), id) != ctx->fixed_stops.end()) {
      continue;
    }
    ctx->fixed_stops.push_back(id);
  }
  ctx->turnaround[kAllZones] = net.mainline().back();
  ctx->turnaround[1] = far[1];
  ctx->turnaround[2] = far[2];
  return ctx;
}

double SimContext::dwell(StopKind kind, int passenger_ops) const {
  switch (kind) {
    case StopKind::kTerminus:
      return 0.0;
    case StopKind::kFixedStop:
      return ops.dwell_base + ops.dwell_per_passenger * passenger_ops;
    default:
      return passenger_ops > 0 ? ops.dwell_base + ops.dwell_per_passenger * passenger_ops : 0.0;
  }
}

double cycle_time_bound(const SimContext& ctx, int zone, ServicePattern pattern) {
  if (zone < 0 || zone >= kZoneCount) throw SimError("cycle_time_bound: invalid zone");
  const int terminus = ctx.network->terminus();
  const auto& fixed = ctx.fixed_stops;
  double t = ctx.ops.boarding_time;
  int prev = terminus;
  for (int s : fixed) {
    t += ctx.travel(prev, s) + ctx.ops.dwell_base;
    prev = s;
  }
  int inbound_stops = static_cast<int>(fixed.size());
  if (pattern == ServicePattern::kSemiOnDemand) {
    t += ctx.limits.flex_window;
  } else {
    inbound_stops = std::max(0, inbound_stops - 1);
  }
  for (int i = inbound_stops - 1; i >= 0; --i) {
    t += ctx.travel(prev, fixed[i]) + ctx.ops.dwell_base;
    prev = fixed[i];
  }
  t += ctx.travel(prev, terminus);
  // Passenger dwell allowance: a full load boarding or alighting on each leg.
  t += 2.0 * ctx.ops.dwell_per_passenger * ctx.limits.capacity;
  return t;
}

// ---------------------------------------------------------------------------
// Schedules

int VehicleSchedule::last_outbound_fixed() const {
  if (!has_window) return -1;
  int idx = -1;
  for (int i = 0; i < static_cast<int>(stops.size()); ++i) {
    if (stops[i].kind == StopKind::kTurnaround) return idx;
    if (is_window_boundary(stops[i].kind)) idx = i;
  }
  return -1;
}

int VehicleSchedule::first_inbound_fixed() const {
  if (!has_window) return -1;
  bool past = false;
  for (int i = 0; i < static_cast<int>(stops.size()); ++i) {
    if (stops[i].kind == StopKind::kTurnaround) past = true;
    else if (past && is_window_boundary(stops[i].kind)) return i;
  }
  return -1;
}

double VehicleSchedule::planned_distance(const SimContext& ctx) const {
  double d = 0.0;
  for (std::size_t i = 1; i < stops.size(); ++i) d += ctx.distance(stops[i - 1].node, stops[i].node);
  return d;
}

void retime(VehicleSchedule& s, const SimContext& ctx) {
  const int h = s.next;
  if (h > 0) s.stops[h].departure = s.stops[h].arrival + ctx.dwell(s.stops[h].kind, s.stops[h].passenger_ops());
  for (std::size_t i = h + 1; i < s.stops.size(); ++i) {
    Stop& st = s.stops[i];
    st.arrival = s.stops[i - 1].departure + ctx.travel(s.stops[i - 1].node, st.node);
    st.departure = st.arrival + ctx.dwell(st.kind, st.passenger_ops());
  }
}

double cycle_odometer(const VehicleSchedule& s, const SimContext& ctx, double t) {
  double d = 0.0;
  for (std::size_t i = 0; i + 1 < s.stops.size(); ++i) {
    const Stop& a = s.stops[i];
    const Stop& b = s.stops[i + 1];
    if (t <= a.departure) return d;
    if (t >= b.arrival) {
      d += ctx.distance(a.node, b.node);
      continue;
    }
    return d + ctx.network->distance_after(a.node, b.node, t - a.departure);
  }
  return d;
}

// ---------------------------------------------------------------------------
// World

World::World(std::shared_ptr<const SimContext> ctx, std::vector<Request> demand,
             ServicePattern pattern, std::vector<FleetClass> fleet)
    : ctx_(std::move(ctx)), pattern_(pattern), requests_(std::move(demand)) {
  total_steps_ = ctx_->ops.total_steps();
  last_dispatch_.fill(-std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < requests_.size(); ++i) {
    if (requests_[i].id != static_cast<int>(i)) throw SimError("world: request ids must equal their index");
    if (i > 0 && requests_[i].request_time < requests_[i - 1].request_time) {
      throw SimError("world: requests must be sorted by request time");
    }
  }
  for (std::size_t i = 0; i < fleet.size(); ++i) {
    Vehicle v;
    v.id = static_cast<int>(i);
    v.fleet_class = fleet[i];
    vehicles_.push_back(std::move(v));
  }
  reveal_requests();
}

int World::first_available(FleetClass cls) const {
  for (const Vehicle& v : vehicles_) {
    if (v.fleet_class == cls && v.status == VehicleStatus::kAtTerminus) return v.id;
  }
  return -1;
}

int World::available_count(FleetClass cls) const {
  return static_cast<int>(std::count_if(vehicles_.begin(), vehicles_.end(), [cls](const Vehicle& v) {
    return v.fleet_class == cls && v.status == VehicleStatus::kAtTerminus;
  }));
}

const VehicleSchedule& World::dispatch_vehicle(int vehicle_id, int zone) {
  Vehicle& v = vehicles_.at(vehicle_id);
  if (v.status != VehicleStatus::kAtTerminus) {
    throw SimError("dispatch: vehicle " + std::to_string(vehicle_id) + " is not at the terminus");
  }
  if (zone < 0 || zone >= kZoneCount) throw SimError("dispatch: invalid zone assignment");
  if (pattern_ == ServicePattern::kFixedRoute && zone != kAllZones) {
    throw SimError("dispatch: fixed-route service has no zones");
  }

  const int terminus = ctx_->network->terminus();
  VehicleSchedule s;
  s.zone = zone;
  s.dispatch_time = now();
  s.deadline = now() + cycle_time_bound(*ctx_, zone, pattern_);
  s.has_window = pattern_ == ServicePattern::kSemiOnDemand;
  s.stops.push_back({terminus, StopKind::kTerminus, {}, {}, now(), now() + ctx_->ops.boarding_time});
  for (int f : ctx_->fixed_stops) s.stops.push_back({f, StopKind::kFixedStop, {}, {}, 0.0, 0.0});
  std::vector<int> inbound(ctx_->fixed_stops.rbegin(), ctx_->fixed_stops.rend());
  if (s.has_window) {
    s.stops.push_back({ctx_->turnaround[zone], StopKind::kTurnaround, {}, {}, 0.0, 0.0});
  } else if (!inbound.empty()) {
    inbound.erase(inbound.begin());
  }
  for (int f : inbound) s.stops.push_back({f, StopKind::kFixedStop, {}, {}, 0.0, 0.0});
  s.stops.push_back({terminus, StopKind::kTerminus, {}, {}, 0.0, 0.0});
  s.next = 0;
  s.arrived_next = true;
  retime(s, *ctx_);

  v.schedule = std::move(s);
  v.zone = zone;
  v.status = VehicleStatus::kBoarding;
  last_dispatch_[zone] = now();
  log(EventKind::kDispatch, now(), v.id, terminus);
  return v.schedule;
}

void World::apply_insertion(int vehicle_id, int request_id, Slot pickup, Slot dropoff) {
  Vehicle& v = vehicles_.at(vehicle_id);
  Request& r = requests_.at(request_id);
  if (!v.schedule.active()) throw SimError("insertion: vehicle has no active schedule");
  if (r.state != RequestState::kPending || !r.revealed) throw SimError("insertion: request is not pending");
  VehicleSchedule& s = v.schedule;
  const int n = static_cast<int>(s.stops.size());
  auto valid = [&](Slot slot) {
    return slot.position >= 0 && slot.position < n &&
           (slot.attach ? (slot.position > s.next || (slot.position == 0 && s.next == 0))
                        : slot.position > s.next);
  };
  if (!valid(pickup) || !valid(dropoff)) throw SimError("insertion: slot outside the modifiable range");
  if (!(pickup.order_key() < dropoff.order_key() ||
        (pickup.order_key() == dropoff.order_key() && !pickup.attach))) {
    throw SimError("insertion: pickup must precede dropoff");
  }

  std::vector<Stop> out;
  out.reserve(s.stops.size() + 2);
  int new_next = s.next;
  for (int i = 0; i < n; ++i) {
    if (!pickup.attach && pickup.position == i) {
      out.push_back({r.board_node, StopKind::kFlexiblePickup, {request_id}, {}, 0.0, 0.0});
    }
    if (!dropoff.attach && dropoff.position == i) {
      out.push_back({r.alight_node, StopKind::kFlexibleDropoff, {}, {request_id}, 0.0, 0.0});
    }
    if (i == s.next) new_next = static_cast<int>(out.size());
    out.push_back(std::move(s.stops[i]));
    if (pickup.attach && pickup.position == i) out.back().board.push_back(request_id);
    if (dropoff.attach && dropoff.position == i) out.back().alight.push_back(request_id);
  }
  s.stops = std::move(out);
  s.next = new_next;
  retime(s, *ctx_);

  r.state = RequestState::kAssigned;
  r.vehicle = vehicle_id;
  r.assign_time = now();
  pending_.erase(std::remove(pending_.begin(), pending_.end(), request_id), pending_.end());
}

void World::reject(int request_id) {
  Request& r = requests_.at(request_id);
  if (r.state != RequestState::kPending) throw SimError("reject: request is not pending");
  r.state = RequestState::kRejected;
  r.reject_time = now();
  ++rejected_count_;
  pending_.erase(std::remove(pending_.begin(), pending_.end(), request_id), pending_.end());
}

void World::resolve_service_points(Request& r) {
  const Network& net = *ctx_->network;
  const int terminus = net.terminus();
  const int far = r.far_endpoint(terminus);
  const Segment seg = r.far_segment(terminus);
  int service = far;
  double access = 0.0;
  bool snapped = seg == Segment::kFixedRoute || pattern_ == ServicePattern::kFixedRoute;
  if (snapped) {
    double best = std::numeric_limits<double>::infinity();
    int best_stop = -1;
    for (int stop : ctx_->fixed_stops) {
      const double w = net.walk_time(far, stop, ctx_->walk_speed);
      if (w < best || (w == best && stop < best_stop)) {
        best = w;
        best_stop = stop;
      }
    }
    if (best_stop < 0) throw SimError("world: no fixed stop to snap to");
    service = best_stop;
    access = best;
  }
  r.revealed = true;
  r.fixed_stop_served = snapped;
  r.service_area = snapped ? Segment::kFixedRoute : seg;
  r.access_time = access;
  const bool outbound = r.departs_terminus(terminus);
  r.board_node = outbound ? terminus : service;
  r.alight_node = outbound ? service : terminus;
  r.access_before_board = outbound ? 0.0 : access;
}

void World::reveal_requests() {
  const double t = now();
  while (next_reveal_ < requests_.size() && requests_[next_reveal_].request_time <= t) {
    Request& r = requests_[next_reveal_++];
    resolve_service_points(r);
    if (pattern_ == ServicePattern::kFixedRoute && r.access_time > ctx_->walk_cap) {
      // Out of walking range of every fixed stop: cannot use the service.
      r.state = RequestState::kRejected;
      r.reject_time = t;
      ++rejected_count_;
      continue;
    }
    pending_.push_back(r.id);
  }
}

void World::log(EventKind kind, double t, int vehicle, int node, int request) {
  if (log_events_) events_.push_back({step_, t, vehicle, kind, node, request});
}

void World::account(Vehicle& v, double from, double to) {
  const VehicleSchedule& s = v.schedule;
  const double start = std::max(from, s.dispatch_time);
  const double end = std::min(to, s.stops.back().arrival);
  if (end <= start) return;
  v.distance += cycle_odometer(s, *ctx_, end) - cycle_odometer(s, *ctx_, start);
  v.deployed += end - start;
  const double wstart = std::max(start, ctx_->ops.warmup);
  if (end > wstart) {
    v.distance_window += cycle_odometer(s, *ctx_, end) - cycle_odometer(s, *ctx_, wstart);
    v.deployed_window += end - wstart;
  }
}

void World::execute_arrival(Vehicle& v, int index, double t, StepReport& report) {
  VehicleSchedule& s = v.schedule;
  Stop& st = s.stops[index];
  ++report.arrivals;
  log(EventKind::kArrive, t, v.id, st.node);
  for (int rid : st.alight) {
    Request& r = requests_[rid];
    r.state = RequestState::kServed;
    r.dropoff_time = t;
    v.onboard.erase(std::remove(v.onboard.begin(), v.onboard.end(), rid), v.onboard.end());
    ++report.alightings;
    log(EventKind::kAlight, t, v.id, st.node, rid);
    const double limit = ctx_->limits.max_ride(ctx_->travel(r.board_node, r.alight_node));
    if (r.ride_time() > limit + kTimeTol) {
      report.violations.push_back(describe("ride time", v.id, rid, r.ride_time(), limit));
    }
  }
  if (index > 0) {
    for (int rid : st.board) {
      Request& r = requests_[rid];
      r.state = RequestState::kRiding;
      r.pickup_time = t;
      v.onboard.push_back(rid);
      ++report.boardings;
      log(EventKind::kBoard, t, v.id, st.node, rid);
      if (t - r.request_time > ctx_->limits.max_wait + kTimeTol) {
        report.violations.push_back(
            describe("wait time", v.id, rid, t - r.request_time, ctx_->limits.max_wait));
      }
    }
    if (static_cast<int>(v.onboard.size()) > ctx_->limits.capacity) {
      report.violations.push_back(describe("capacity", v.id, -1, static_cast<double>(v.onboard.size()),
                                           ctx_->limits.capacity));
    }
  }
  if (s.has_window && index == s.first_inbound_fixed()) {
    const double used = t - s.stops[s.last_outbound_fixed()].departure;
    if (used > ctx_->limits.flex_window + kTimeTol) {
      report.violations.push_back(describe("flexible window", v.id, -1, used, ctx_->limits.flex_window));
    }
  }
  if (is_flexible(st.kind) && !zone_serves(s.zone, ctx_->network->node(st.node).segment)) {
    report.violations.push_back(describe("zone", v.id, -1, st.node, s.zone));
  }
}

void World::execute_terminus_boarding(Vehicle& v, StepReport& report) {
  Stop& st = v.schedule.stops[0];
  const double t = st.departure;
  for (int rid : st.board) {
    Request& r = requests_[rid];
    r.state = RequestState::kRiding;
    r.pickup_time = t;
    v.onboard.push_back(rid);
    ++report.boardings;
    log(EventKind::kBoard, t, v.id, st.node, rid);
    if (t - r.request_time > ctx_->limits.max_wait + kTimeTol) {
      report.violations.push_back(describe("wait time", v.id, rid, t - r.request_time, ctx_->limits.max_wait));
    }
  }
  if (static_cast<int>(v.onboard.size()) > ctx_->limits.capacity) {
    report.violations.push_back(
        describe("capacity", v.id, -1, static_cast<double>(v.onboard.size()), ctx_->limits.capacity));
  }
  v.status = VehicleStatus::kEnRoute;
  log(EventKind::kDepart, t, v.id, st.node);
}

void World::complete_cycle(Vehicle& v, StepReport& report) {
  const VehicleSchedule& s = v.schedule;
  const double t = s.stops.back().arrival;
  if (t > s.deadline + kTimeTol) {
    report.violations.push_back(describe("cycle bound", v.id, -1, t - s.dispatch_time, s.deadline - s.dispatch_time));
  }
  if (!v.onboard.empty()) {
    report.violations.push_back(describe("passengers left onboard", v.id, v.onboard.front(), 0, 0));
  }
  CycleRecord rec;
  rec.vehicle = v.id;
  rec.zone = s.zone;
  rec.dispatch_time = s.dispatch_time;
  rec.return_time = t;
  rec.distance = s.planned_distance(*ctx_);
  rec.flexible_stops = static_cast<int>(
      std::count_if(s.stops.begin(), s.stops.end(), [](const Stop& st) { return is_flexible(st.kind); }));
  cycles_.push_back(rec);
  log(EventKind::kReturn, t, v.id, s.stops.back().node);
  ++report.completed_cycles;
  ++v.cycles;
  v.schedule = VehicleSchedule{};
  v.status = VehicleStatus::kAtTerminus;
  v.zone = kAllZones;
}

StepReport World::advance_step() {
  if (finished()) throw SimError("advance_step: clock is past the horizon");
  StepReport report;
  report.step = step_;
  const double t0 = now();
  const double t1 = t0 + ctx_->ops.step;
  for (Vehicle& v : vehicles_) {
    if (!v.schedule.active()) continue;
    account(v, t0, t1);
    VehicleSchedule& s = v.schedule;
    while (s.active()) {
      Stop& st = s.stops[s.next];
      if (!s.arrived_next) {
        if (st.arrival > t1) break;
        execute_arrival(v, s.next, st.arrival, report);
        s.arrived_next = true;
        if (s.next == s.last()) {
          complete_cycle(v, report);
          break;
        }
      }
      if (st.departure > t1) break;
      if (s.next == 0) {
        execute_terminus_boarding(v, report);
      } else {
        log(EventKind::kDepart, st.departure, v.id, st.node);
      }
      ++s.next;
      s.arrived_next = false;
    }
  }
  ++step_;
  reveal_requests();
  return report;
}

void World::write_events_csv(std::ostream& out) const {
  out << "step,time,vehicle,event,node,request\n";
  for (const Event& e : events_) {
    out << e.step << ',' << e.time << ',' << e.vehicle << ',' << to_string(e.kind) << ',' << e.node << ','
        << e.request << '\n';
  }
}

// ---------------------------------------------------------------------------
// Audits

std::vector<std::string> audit_schedule(const World& world, int vehicle_id) {
  std::vector<std::string> out;
  const SimContext& ctx = world.context();
  const Vehicle& v = world.vehicle(vehicle_id);
  const VehicleSchedule& s = v.schedule;
  if (!s.active()) return out;
  auto fail = [&](const std::string& msg) {
    out.push_back("vehicle " + std::to_string(vehicle_id) + ": " + msg);
  };
  const int n = static_cast<int>(s.stops.size());
  if (s.stops.front().kind != StopKind::kTerminus || s.stops.back().kind != StopKind::kTerminus) {
    fail("cycle must start and end at the terminus");
  }

  // Structure: fixed stops outside the flexible section, flexible stops inside.
  const int lo = s.last_outbound_fixed();
  const int hi = s.first_inbound_fixed();
  for (int i = 0; i < n; ++i) {
    const Stop& st = s.stops[i];
    if (is_flexible(st.kind)) {
      if (!s.has_window || i <= lo || i >= hi) fail("flexible stop outside the flexible section");
      if (!zone_serves(s.zone, ctx.network->node(st.node).segment)) fail("flexible stop in unserved zone");
    }
    if (st.kind == StopKind::kFixedStop && s.has_window && i > lo && i < hi) {
      fail("fixed stop inside the flexible section");
    }
    if (i > 0) {
      const double expect = s.stops[i - 1].departure + ctx.travel(s.stops[i - 1].node, st.node);
      if (std::abs(st.arrival - expect) > kTimeTol) fail("arrival inconsistent with travel time");
      if (st.arrival < s.stops[i - 1].arrival - kTimeTol) fail("arrival times decrease");
    }
    if (st.departure < st.arrival - kTimeTol) fail("departure before arrival");
  }

  // Per-request ordering and limits.
  std::vector<int> board_at(world.requests().size(), -1);
  std::vector<int> alight_at(world.requests().size(), -1);
  int load = 0;
  for (int i = 0; i < n; ++i) {
    for (int rid : s.stops[i].alight) {
      if (alight_at[rid] >= 0) fail("request alights twice");
      alight_at[rid] = i;
      --load;
    }
    for (int rid : s.stops[i].board) {
      if (board_at[rid] >= 0) fail("request boards twice");
      board_at[rid] = i;
      ++load;
    }
    if (load > ctx.limits.capacity) fail("capacity exceeded at stop " + std::to_string(i));
  }
  for (std::size_t rid = 0; rid < board_at.size(); ++rid) {
    if (board_at[rid] < 0 && alight_at[rid] < 0) continue;
    const Request& r = world.request(static_cast<int>(rid));
    if (board_at[rid] < 0 || alight_at[rid] < 0 || board_at[rid] >= alight_at[rid]) {
      fail("request " + std::to_string(rid) + " must board before alighting");
      continue;
    }
    if (r.state == RequestState::kServed) continue;
    const double pickup = s.pickup_time_at(board_at[rid]);
    const double dropoff = s.stops[alight_at[rid]].arrival;
    if (pickup - r.request_time > ctx.limits.max_wait + kTimeTol) fail("wait limit for request " + std::to_string(rid));
    if (pickup < r.request_time + r.access_before_board - kTimeTol) fail("pickup before passenger can arrive");
    if (dropoff - pickup > ctx.limits.max_ride(ctx.travel(r.board_node, r.alight_node)) + kTimeTol) {
      fail("ride limit for request " + std::to_string(rid));
    }
    if (s.stops[board_at[rid]].node != r.board_node || s.stops[alight_at[rid]].node != r.alight_node) {
      fail("request " + std::to_string(rid) + " served at the wrong node");
    }
  }
  if (s.has_window && lo >= 0 && hi >= 0) {
    if (s.stops[hi].arrival - s.stops[lo].departure > ctx.limits.flex_window + kTimeTol) fail("flexible window exceeded");
  }
  if (s.stops.back().arrival > s.deadline + kTimeTol) fail("cycle bound exceeded");
  return out;
}

std::vector<std::string> audit_requests(const World& world) {
  std::vector<std::string> out;
  const SimContext& ctx = world.context();
  int served = 0, rejected = 0, open = 0;
  for (const Request& r : world.requests()) {
    switch (r.state) {
      case RequestState::kServed: {
        ++served;
        const double limit = ctx.limits.max_ride(ctx.travel(r.board_node, r.alight_node));
        if (r.pickup_time < r.request_time - kTimeTol) out.push_back("pickup before request " + std::to_string(r.id));
        if (r.dropoff_time < r.pickup_time) out.push_back("dropoff before pickup " + std::to_string(r.id));
        if (r.pickup_time - r.request_time > ctx.limits.max_wait + kTimeTol) {
          out.push_back("wait limit " + std::to_string(r.id));
        }
        if (r.ride_time() > limit + kTimeTol) out.push_back("ride limit " + std::to_string(r.id));
        break;
      }
      case RequestState::kRejected:
        ++rejected;
        break;
      default:
        ++open;
    }
  }
  if (served + rejected + open != static_cast<int>(world.requests().size())) {
    out.push_back("request conservation broken");
  }
  if (rejected != world.rejected_count()) out.push_back("rejection counter mismatch");
  return out;
}

}  // namespace sod
