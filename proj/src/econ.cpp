#include "sod/econ.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include <nlohmann/json.hpp>

namespace sod {

RunMetrics generalized_cost(std::span<const Request> requests, std::span<const Vehicle> vehicles,
                            const CostCoefficients& costs, double cutoff, int terminus) {
  RunMetrics m;
  double flexible_access = 0.0;
  for (const Request& r : requests) {
    if (r.state == RequestState::kRejected) ++m.rejected_all;
    if (r.request_time < cutoff) continue;
    ++m.generated;
    switch (r.state) {
      case RequestState::kServed:
        break;
      case RequestState::kRejected:
        ++m.rejected;
        continue;
      default:
        ++m.pending;
        continue;
    }
    ++m.served;
    m.total_access += r.access_time;
    m.total_wait += r.wait_time();
    m.total_ride += r.ride_time();
    if (!r.fixed_stop_served) ++m.door_to_door;
    if (r.far_segment(terminus) != Segment::kFixedRoute) {
      ++m.served_flexible;
      flexible_access += r.access_time;
    }
  }
  for (const Vehicle& v : vehicles) {
    m.vehicle_km += v.distance_window / 1000.0;
    m.vehicle_hours += v.deployed_window / 3600.0;
  }
  m.cost.access = costs.access_per_hour * m.total_access / 3600.0;
  m.cost.wait = costs.wait_per_hour * m.total_wait / 3600.0;
  m.cost.ride = costs.ride_per_hour * m.total_ride / 3600.0;
  m.cost.distance = costs.operating_per_km * m.vehicle_km;
  m.cost.vehicle_time = costs.vehicle_per_hour * m.vehicle_hours;
  m.generalized_cost = m.cost.total();

  const double nan = std::numeric_limits<double>::quiet_NaN();
  m.per_passenger_defined = m.served > 0;
  if (m.served > 0) {
    m.mean_access = m.total_access / m.served;
    m.mean_wait = m.total_wait / m.served;
    m.mean_ride = m.total_ride / m.served;
    m.cost_per_passenger = m.generalized_cost / m.served;
  } else {
    m.mean_access = m.mean_wait = m.mean_ride = m.cost_per_passenger = nan;
  }
  m.mean_access_flexible = m.served_flexible > 0 ? flexible_access / m.served_flexible : nan;
  return m;
}

RunMetrics generalized_cost(const World& world) {
  const SimContext& ctx = world.context();
  return generalized_cost(world.requests(), world.vehicles(), ctx.costs, ctx.ops.warmup,
                          ctx.network->terminus());
}

std::vector<std::pair<std::string, double>> metric_fields(const RunMetrics& m) {
  return {
      {"generated", m.generated},
      {"served", m.served},
      {"rejected", m.rejected},
      {"pending", m.pending},
      {"rejected_all", m.rejected_all},
      {"served_flexible", m.served_flexible},
      {"door_to_door", m.door_to_door},
      {"total_access_s", m.total_access},
      {"total_wait_s", m.total_wait},
      {"total_ride_s", m.total_ride},
      {"mean_access_s", m.mean_access},
      {"mean_wait_s", m.mean_wait},
      {"mean_ride_s", m.mean_ride},
      {"mean_access_flexible_s", m.mean_access_flexible},
      {"vehicle_km", m.vehicle_km},
      {"vehicle_hours", m.vehicle_hours},
      {"cost_access", m.cost.access},
      {"cost_wait", m.cost.wait},
      {"cost_ride", m.cost.ride},
      {"cost_distance", m.cost.distance},
      {"cost_vehicle_time", m.cost.vehicle_time},
      {"generalized_cost", m.generalized_cost},
      {"cost_per_passenger", m.cost_per_passenger},
  };
}

nlohmann::json to_json(const RunMetrics& m) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : metric_fields(m)) {
    if (std::isnan(v)) j[k] = nullptr;
    else j[k] = v;
  }
  j["per_passenger_defined"] = m.per_passenger_defined;
  return j;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

FieldSummary summarize(const std::vector<double>& values) {
  FieldSummary s;
  if (values.empty()) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    return {nan, nan, nan, nan, nan, nan};
  }
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  s.min = *std::min_element(values.begin(), values.end());
  s.max = *std::max_element(values.begin(), values.end());
  s.q1 = quantile(values, 0.25);
  s.median = quantile(values, 0.5);
  s.q3 = quantile(values, 0.75);
  return s;
}

void write_aggregate_csv(std::ostream& out, const std::string& label, const std::vector<RunMetrics>& runs,
                         bool header) {
  if (header) out << "label,field,mean,min,q1,median,q3,max\n";
  if (runs.empty()) return;
  const auto names = metric_fields(runs.front());
  for (std::size_t f = 0; f < names.size(); ++f) {
    std::vector<double> values;
    for (const RunMetrics& m : runs) {
      const double v = metric_fields(m)[f].second;
      if (!std::isnan(v)) values.push_back(v);
    }
    const FieldSummary s = summarize(values);
    out << label << ',' << names[f].first << ',' << s.mean << ',' << s.min << ',' << s.q1 << ',' << s.median
        << ',' << s.q3 << ',' << s.max << '\n';
  }
}

}  // namespace sod
