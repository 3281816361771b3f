#include "sod/demand.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace sod {

const char* to_string(RequestState s) {
  switch (s) {
    case RequestState::kPending:
      return "pending";
    case RequestState::kAssigned:
      return "assigned";
    case RequestState::kRiding:
      return "riding";
    case RequestState::kServed:
      return "served";
    case RequestState::kRejected:
      return "rejected";
  }
  return "?";
}

void DemandProfile::validate() const {
  if (!(base_rate >= 0.0) || !(end_rate >= 0.0)) {
    throw std::invalid_argument("demand: rates must be >= 0");
  }
  if (!(direction_split >= 0.0 && direction_split <= 1.0)) {
    throw std::invalid_argument("demand: direction_split must be in [0, 1]");
  }
  if (!(walk_cap > 0.0)) throw std::invalid_argument("demand: walk_cap must be > 0");
  if (!(walk_speed > 0.0)) throw std::invalid_argument("demand: walk_speed must be > 0");
}

DemandModel::DemandModel(std::shared_ptr<const Network> net, DemandProfile profile, double horizon)
    : net_(std::move(net)), profile_(profile), horizon_(horizon) {
  profile_.validate();
  if (!(horizon_ > 0.0)) throw std::invalid_argument("demand: horizon must be > 0");

  const int n = net_->node_count();
  weights_.assign(n, 0.0);
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    if (i == net_->terminus()) continue;
    const double walk = net_->offset_from_mainline(i) / profile_.walk_speed;
    weights_[i] = std::max(0.0, 1.0 - walk / profile_.walk_cap);
    segment_share_[static_cast<int>(net_->node(i).segment)] += weights_[i];
    total += weights_[i];
  }
  if (!(total > 0.0)) throw std::invalid_argument("demand: no node has positive endpoint weight");
  for (double& s : segment_share_) s /= total;
  endpoint_dist_ = std::discrete_distribution<int>(weights_.begin(), weights_.end());
}

double DemandModel::rate_at(double t) const {
  if (t < 0.0 || t > horizon_) return 0.0;
  const double per_hour = profile_.base_rate + (profile_.end_rate - profile_.base_rate) * t / horizon_;
  return per_hour / 3600.0;
}

double DemandModel::expected_count(double from, double to) const {
  from = std::clamp(from, 0.0, horizon_);
  to = std::clamp(to, 0.0, horizon_);
  if (to <= from) return 0.0;
  // Linear rate: exact integral is the trapezoid.
  return 0.5 * (rate_at(from) + rate_at(to)) * (to - from);
}

int DemandModel::sample_endpoint(std::mt19937_64& rng) const {
  auto dist = endpoint_dist_;
  return dist(rng);
}

std::vector<Request> DemandModel::generate(std::uint64_t seed) const {
  std::vector<Request> out;
  const double peak = std::max(profile_.base_rate, profile_.end_rate) / 3600.0;
  if (!(peak > 0.0)) return out;

  std::mt19937_64 rng(seed);
  std::exponential_distribution<double> gap(peak);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto endpoints = endpoint_dist_;
  const int terminus = net_->terminus();

  // Thinning of a homogeneous process at the peak rate.
  double t = 0.0;
  while (true) {
    t += gap(rng);
    if (t > horizon_) break;
    const double accept = unit(rng);
    if (accept * peak > rate_at(t)) continue;
    const bool outbound = unit(rng) < profile_.direction_split;
    const int far = endpoints(rng);
    Request r;
    r.id = static_cast<int>(out.size());
    r.request_time = t;
    r.origin = outbound ? terminus : far;
    r.destination = outbound ? far : terminus;
    r.origin_segment = net_->node(r.origin).segment;
    r.destination_segment = net_->node(r.destination).segment;
    out.push_back(r);
  }
  return out;
}

double DemandModel::forecast(double now, double window, std::optional<Segment> segment) const {
  if (!(window > 0.0)) throw std::invalid_argument("forecast: window must be > 0");
  if (now > horizon_) return 0.0;
  const double all = expected_count(now, now + window);
  return segment ? all * segment_share(*segment) : all;
}

void write_demand_csv(std::ostream& out, const std::vector<Request>& requests) {
  out << "id,request_time,origin,destination\n";
  out.precision(17);
  for (const Request& r : requests) {
    out << r.id << ',' << r.request_time << ',' << r.origin << ',' << r.destination << '\n';
  }
}

std::vector<Request> read_demand_csv(std::istream& in, const Network& net) {
  std::vector<Request> out;
  std::string line;
  if (!std::getline(in, line)) return out;  // header
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream fields(line);
    Request r;
    if (!(fields >> r.id >> r.request_time >> r.origin >> r.destination)) {
      throw std::runtime_error("demand csv: malformed line " + std::to_string(line_no));
    }
    if ((r.origin == net.terminus()) == (r.destination == net.terminus())) {
      throw std::runtime_error("demand csv: line " + std::to_string(line_no) +
                               " must have exactly one terminus endpoint");
    }
    r.origin_segment = net.node(r.origin).segment;
    r.destination_segment = net.node(r.destination).segment;
    out.push_back(r);
  }
  std::stable_sort(out.begin(), out.end(), [](const Request& a, const Request& b) {
    return a.request_time < b.request_time;
  });
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i].id != static_cast<int>(i)) {
      throw std::runtime_error("demand csv: ids must be 0..n-1 in request-time order");
    }
  }
  return out;
}

}  // namespace sod
