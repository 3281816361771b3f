#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <vector>

#include "sod/network.hpp"

namespace sod {

enum class RequestState : std::uint8_t { kPending, kAssigned, kRiding, kServed, kRejected };

const char* to_string(RequestState s);

inline constexpr double kUnset = std::numeric_limits<double>::quiet_NaN();

// A feeder trip. Exactly one endpoint is the terminus. The trip fields are set
// by the generator; the service fields are filled in when the simulation
// reveals the request and the lifecycle fields as it is served.
struct Request {
  int id = 0;
  double request_time = 0.0;
  int origin = 0;
  int destination = 0;
  Segment origin_segment = Segment::kFixedRoute;
  Segment destination_segment = Segment::kFixedRoute;

  // Service points: the stop nodes where the vehicle picks up and drops off.
  // Door-to-door endpoints use the true node; fixed-portion endpoints are
  // snapped to a fixed stop.
  int board_node = -1;
  int alight_node = -1;
  double access_time = 0.0;         // walk from/to the service point, seconds
  double access_before_board = 0.0;  // part of access_time spent before boarding
  Segment service_area = Segment::kFixedRoute;
  bool fixed_stop_served = false;
  bool revealed = false;

  RequestState state = RequestState::kPending;
  int vehicle = -1;
  double assign_time = kUnset;
  double pickup_time = kUnset;
  double dropoff_time = kUnset;
  double reject_time = kUnset;

  bool departs_terminus(int terminus) const { return origin == terminus; }
  // The endpoint that is not the terminus.
  int far_endpoint(int terminus) const { return origin == terminus ? destination : origin; }
  Segment far_segment(int terminus) const {
    return origin == terminus ? destination_segment : origin_segment;
  }
  double wait_time() const { return pickup_time - request_time - access_before_board; }
  double ride_time() const { return dropoff_time - pickup_time; }
};

struct DemandProfile {
  double base_rate = 100.0;  // requests/hour at horizon start
  double end_rate = 40.0;    // requests/hour at horizon end
  double direction_split = 0.5;  // fraction departing the terminus
  double walk_cap = 600.0;       // seconds
  double walk_speed = 1.25;      // m/s

  void validate() const;
};

// Demand generator and forecaster bound to one network and horizon.
class DemandModel {
 public:
  DemandModel(std::shared_ptr<const Network> net, DemandProfile profile, double horizon);

  const DemandProfile& profile() const { return profile_; }
  double horizon() const { return horizon_; }

  // Requests/second at time t (0 outside [0, horizon]).
  double rate_at(double t) const;
  // Integral of the rate over [from, to] clipped to the horizon.
  double expected_count(double from, double to) const;

  // Endpoint sampling weight max(0, 1 - walk_to_mainline / cap); 0 for the
  // terminus.
  double endpoint_weight(int node) const { return weights_[node]; }
  const std::vector<double>& endpoint_weights() const { return weights_; }
  // Share of total endpoint weight that falls into a segment.
  double segment_share(Segment s) const { return segment_share_[static_cast<int>(s)]; }
  int sample_endpoint(std::mt19937_64& rng) const;

  std::vector<Request> generate(std::uint64_t seed) const;

  // Expected request count in [now, now + window]; `segment` = nullopt means
  // all segments.
  double forecast(double now, double window, std::optional<Segment> segment = std::nullopt) const;

 private:
  std::shared_ptr<const Network> net_;
  DemandProfile profile_;
  double horizon_;
  std::vector<double> weights_;
  double segment_share_[kSegmentCount] = {0.0, 0.0, 0.0};
  std::discrete_distribution<int> endpoint_dist_;
};

// CSV columns: id,request_time,origin,destination
void write_demand_csv(std::ostream& out, const std::vector<Request>& requests);
std::vector<Request> read_demand_csv(std::istream& in, const Network& net);

}  // namespace sod
