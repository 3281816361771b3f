#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "sod/world.hpp"

namespace sod {

struct CostBreakdown {
  double access = 0.0;
  double wait = 0.0;
  double ride = 0.0;
  double distance = 0.0;
  double vehicle_time = 0.0;

  double total() const { return access + wait + ride + distance + vehicle_time; }
};

// Evaluation metrics of one run. Request figures cover requests with
// request_time >= cutoff; vehicle figures cover the accumulation after the
// world's warm-up.
struct RunMetrics {
  int generated = 0;
  int served = 0;
  int rejected = 0;
  int pending = 0;  // neither served nor rejected at the horizon
  int rejected_all = 0;  // whole horizon, warm-up included
  int served_flexible = 0;  // served with the far endpoint in a flexible zone
  int door_to_door = 0;     // served without snapping to a fixed stop

  double total_access = 0.0;  // seconds
  double total_wait = 0.0;
  double total_ride = 0.0;
  double mean_access = 0.0;
  double mean_wait = 0.0;
  double mean_ride = 0.0;
  double mean_access_flexible = 0.0;

  double vehicle_km = 0.0;
  double vehicle_hours = 0.0;

  CostBreakdown cost;
  double generalized_cost = 0.0;
  // Undefined (NaN) when nothing was served.
  double cost_per_passenger = 0.0;
  bool per_passenger_defined = false;
};

RunMetrics generalized_cost(std::span<const Request> requests, std::span<const Vehicle> vehicles,
                            const CostCoefficients& costs, double cutoff, int terminus);
RunMetrics generalized_cost(const World& world);

// Field names and values in a fixed order, shared by the CSV and JSON writers.
std::vector<std::pair<std::string, double>> metric_fields(const RunMetrics& m);
nlohmann::json to_json(const RunMetrics& m);

struct FieldSummary {
  double mean = 0.0;
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
};

// Linear-interpolated quantile of unsorted values, q in [0, 1].
double quantile(std::vector<double> values, double q);
FieldSummary summarize(const std::vector<double>& values);

// CSV header: label,field,mean,min,q1,median,q3,max; NaN entries are skipped.
void write_aggregate_csv(std::ostream& out, const std::string& label, const std::vector<RunMetrics>& runs,
                         bool header);

}  // namespace sod
