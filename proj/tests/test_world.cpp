#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "sod/dispatch.hpp"
#include "sod/experiment.hpp"
#include "sod/matching.hpp"
#include "sod/scenario.hpp"
#include "sod/world.hpp"

using namespace sod;

namespace {

// Terminus, one node in each flexible zone, 3 km apart at 10 m/s.
std::shared_ptr<const SimContext> three_node_context() {
  std::vector<Node> nodes{{0.0, 0.0, Segment::kFixedRoute, true},
                          {3000.0, 0.0, Segment::kZone1, true},
                          {6000.0, 0.0, Segment::kZone2, true}};
  std::vector<Edge> edges{{0, 1, 3000.0, 300.0}, {1, 0, 3000.0, 300.0}, {1, 2, 3000.0, 300.0}, {2, 1, 3000.0, 300.0}};
  auto net = std::make_shared<const Network>(std::move(nodes), std::move(edges), 0);
  return SimContext::create(net, OperationsSpec{}, FeasibilityLimits{}, CostCoefficients{}, DemandProfile{});
}

std::shared_ptr<const Runtime> default_runtime() {
  static const auto rt = Runtime::build(Scenario{});
  return rt;
}

void run_to_end(World& w, Dispatcher& d) {
  while (!w.finished()) {
    d.baseline_dispatch(w);
    match_step(w);
    const StepReport rep = w.advance_step();
    REQUIRE(rep.violations.empty());
  }
}

}  // namespace

TEST_CASE("idle world only advances the clock") {
  World w(three_node_context(), {}, ServicePattern::kSemiOnDemand, {FleetClass::kReserved});
  const StepReport rep = w.advance_step();
  CHECK(rep.empty());
  CHECK(w.now() == 60.0);
  CHECK(w.vehicle(0).distance == 0.0);
}

TEST_CASE("hand-computed cycle on three nodes") {
  const auto ctx = three_node_context();
  CHECK(ctx->fixed_stops.empty());
  World w(ctx, {}, ServicePattern::kSemiOnDemand, {FleetClass::kReserved});
  w.enable_event_log(true);
  const VehicleSchedule& s = w.dispatch_vehicle(0, kAllZones);
  CHECK(s.stops.size() == 3);
  CHECK(s.stops[1].node == 2);
  // 300 s boarding, 600 s out, 600 s back.
  CHECK(s.stops[1].arrival == doctest::Approx(900.0));
  CHECK(s.stops[2].arrival == doctest::Approx(1500.0));
  CHECK(cycle_time_bound(*ctx, kAllZones, ServicePattern::kSemiOnDemand) == doctest::Approx(300.0 + 1200.0 + 80.0));
  while (w.cycles().empty()) w.advance_step();
  const CycleRecord& c = w.cycles().front();
  CHECK(c.dispatch_time == 0.0);
  CHECK(c.return_time == doctest::Approx(1500.0));
  CHECK(c.distance == doctest::Approx(12000.0));
  CHECK(w.vehicle(0).distance == doctest::Approx(12000.0));
  CHECK(w.vehicle(0).status == VehicleStatus::kAtTerminus);
  double depart = -1.0;
  double arrive = -1.0;
  for (const Event& e : w.events()) {
    if (e.kind == EventKind::kDepart && depart < 0.0) depart = e.time;
    if (e.kind == EventKind::kArrive && arrive < 0.0) arrive = e.time;
  }
  CHECK(depart == doctest::Approx(300.0));
  CHECK(arrive - depart == doctest::Approx(600.0));
}

TEST_CASE("dispatch errors") {
  World w(three_node_context(), {}, ServicePattern::kSemiOnDemand, {FleetClass::kReserved});
  CHECK_THROWS_AS(w.dispatch_vehicle(0, 3), SimError);
  w.dispatch_vehicle(0, 1);
  CHECK_THROWS_AS(w.dispatch_vehicle(0, 1), SimError);
  World f(three_node_context(), {}, ServicePattern::kFixedRoute, {FleetClass::kReserved});
  CHECK_THROWS_AS(f.dispatch_vehicle(0, 2), SimError);
}

TEST_CASE("zone turnarounds") {
  const auto rt = default_runtime();
  const SimContext& ctx = *rt->context;
  const Network& net = *rt->network;
  CHECK(ctx.fixed_stops.size() == 3);
  CHECK(net.node(ctx.turnaround[kAllZones]).x == doctest::Approx(5600.0));
  CHECK(net.node(ctx.turnaround[2]).x == doctest::Approx(5600.0));
  CHECK(net.node(ctx.turnaround[1]).x == doctest::Approx(3400.0));
  CHECK(net.node(ctx.turnaround[1]).segment == Segment::kZone1);
  CHECK(zone_serves(kAllZones, Segment::kZone1));
  CHECK(zone_serves(kAllZones, Segment::kZone2));
  CHECK_FALSE(zone_serves(2, Segment::kZone1));
  CHECK_FALSE(zone_serves(1, Segment::kZone2));
}

TEST_CASE("empty cycle visits only fixed stops") {
  const auto rt = default_runtime();
  const SimContext& ctx = *rt->context;
  World w = rt->make_world(PolicyKind::kSemiOnDemand, {});
  w.dispatch_vehicle(0, kAllZones);
  for (const Stop& st : w.vehicle(0).schedule.stops) {
    CHECK((st.kind == StopKind::kFixedStop || st.kind == StopKind::kTerminus || st.kind == StopKind::kTurnaround));
  }
  while (w.cycles().empty()) w.advance_step();
  // Boarding, the full mainline both ways, and a flat dwell at each of the
  // three fixed stops per direction.
  const double expected = ctx.ops.boarding_time + 2.0 * 5600.0 / rt->scenario.corridor.mainline_speed +
                          6.0 * ctx.ops.dwell_base;
  const CycleRecord& c = w.cycles().front();
  CHECK(c.return_time - c.dispatch_time == doctest::Approx(expected).epsilon(1e-9));
  CHECK(c.distance == doctest::Approx(11200.0));
  CHECK(c.flexible_stops == 0);
}

TEST_CASE("cycle bound near the calibrated round trip") {
  const auto rt = default_runtime();
  const double b0 = cycle_time_bound(*rt->context, kAllZones, ServicePattern::kSemiOnDemand);
  CHECK(std::abs(b0 - 33.0 * 60.0) <= 0.1 * 33.0 * 60.0);
  CHECK(cycle_time_bound(*rt->context, 1, ServicePattern::kSemiOnDemand) <= b0);
  CHECK(cycle_time_bound(*rt->context, 2, ServicePattern::kSemiOnDemand) <= b0);
}

TEST_CASE("simulated runs respect bounds and conservation") {
  const auto rt = default_runtime();
  for (PolicyKind p : {PolicyKind::kFixedRoute, PolicyKind::kSemiOnDemand, PolicyKind::kNominalZonal}) {
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
      World w = rt->make_world(p, rt->demand->generate(seed));
      w.enable_event_log(true);
      Dispatcher d(p, rt->scenario.dispatch);
      std::vector<double> odometer(w.vehicles().size(), 0.0);
      std::vector<double> deployed(w.vehicles().size(), 0.0);
      std::vector<RequestState> state(w.requests().size(), RequestState::kPending);
      std::map<int, int> zone_at_dispatch;
      while (!w.finished()) {
        d.baseline_dispatch(w);
        match_step(w);
        const StepReport rep = w.advance_step();
        REQUIRE(rep.violations.empty());
        for (const Vehicle& v : w.vehicles()) {
          CHECK(v.distance >= odometer[v.id]);
          CHECK(v.deployed >= deployed[v.id]);
          CHECK(static_cast<int>(v.onboard.size()) <= rt->scenario.limits.capacity);
          odometer[v.id] = v.distance;
          deployed[v.id] = v.deployed;
          if (v.schedule.active()) {
            auto [it, fresh] = zone_at_dispatch.emplace(v.id, v.zone);
            if (!fresh) CHECK(it->second == v.zone);
            CHECK(audit_schedule(w, v.id).empty());
          } else {
            zone_at_dispatch.erase(v.id);
          }
        }
        for (const Request& r : w.requests()) {
          const RequestState before = state[r.id];
          const RequestState now = r.state;
          const bool ok = now == before || (before == RequestState::kPending && now == RequestState::kAssigned) ||
                          (before == RequestState::kPending && now == RequestState::kRejected) ||
                          (before == RequestState::kAssigned && now == RequestState::kRiding) ||
                          (before == RequestState::kRiding && now == RequestState::kServed) ||
                          (before == RequestState::kAssigned && now == RequestState::kServed) ||
                          (before == RequestState::kPending && now == RequestState::kRiding);
          CHECK(ok);
          state[r.id] = now;
        }
      }
      CHECK(audit_requests(w).empty());
      int served = 0, rejected = 0, open = 0;
      for (const Request& r : w.requests()) {
        if (r.state == RequestState::kServed) {
          ++served;
          CHECK(r.pickup_time >= r.request_time);
          CHECK(r.dropoff_time >= r.pickup_time);
          CHECK(r.pickup_time - r.request_time <= rt->scenario.limits.max_wait + 1e-9);
          const double direct = rt->network->travel_time(r.board_node, r.alight_node);
          CHECK(r.ride_time() <= rt->scenario.limits.max_ride(direct) + 1e-9);
        } else if (r.state == RequestState::kRejected) {
          ++rejected;
        } else {
          ++open;
        }
      }
      CHECK(served + rejected + open == static_cast<int>(w.requests().size()));
      for (const CycleRecord& c : w.cycles()) {
        CHECK(c.return_time - c.dispatch_time <= cycle_time_bound(*rt->context, c.zone, w.pattern()) + 1e-9);
      }
      // Realized legs never beat shortest-path time.
      std::map<int, std::pair<int, double>> last_depart;
      for (const Event& e : w.events()) {
        if (e.kind == EventKind::kDepart) last_depart[e.vehicle] = {e.node, e.time};
        if (e.kind == EventKind::kArrive && last_depart.count(e.vehicle)) {
          const auto [from, t0] = last_depart[e.vehicle];
          CHECK(e.time - t0 >= rt->network->travel_time(from, e.node) - 1e-9);
        }
      }
    }
  }
}

TEST_CASE("zonal vehicles stop only in their zone") {
  const auto rt = default_runtime();
  const Network& net = *rt->network;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    World w = rt->make_world(PolicyKind::kNominalZonal, rt->demand->generate(seed));
    Dispatcher d(PolicyKind::kNominalZonal, rt->scenario.dispatch);
    while (!w.finished()) {
      d.baseline_dispatch(w);
      match_step(w);
      w.advance_step();
      for (const Vehicle& v : w.vehicles()) {
        for (const Stop& st : v.schedule.stops) {
          if (st.kind == StopKind::kFlexiblePickup || st.kind == StopKind::kFlexibleDropoff) {
            CHECK(zone_serves(v.zone, net.node(st.node).segment));
          }
        }
      }
    }
  }
}
