#pragma once

namespace sod {

// Weights of the insertion objective and the generalized cost. Monetary
// values in dollars; the two reward weights are dimensionless.
struct CostCoefficients {
  double operating_per_km = 0.694;    // gamma^O
  double ride_per_hour = 16.5;        // gamma^T
  double satisfied_reward = 1e6;      // gamma^R
  double fixed_stop_reward = 1e6;     // gamma^S
  double access_per_hour = 33.0;      // gamma^A
  double wait_per_hour = 24.75;       // gamma^W
  double vehicle_per_hour = 7.59;     // gamma^V

  void validate() const;
  CostCoefficients scaled(double factor) const;
};

struct FeasibilityLimits {
  double max_wait = 900.0;        // t^{W,max}
  double detour_factor = 2.5;     // phi^P
  double detour_constant = 300.0; // t^{D,f}
  int capacity = 20;              // c^V
  double flex_window = 1200.0;    // t^R

  void validate() const;
  double max_ride(double direct_time) const { return detour_factor * direct_time + detour_constant; }
};

// Timing of the simulation loop and of stop operations.
struct OperationsSpec {
  double step = 60.0;          // t^S
  double horizon = 10800.0;
  double warmup = 3600.0;
  double boarding_time = 300.0;  // terminus boarding before each departure
  double dwell_base = 20.0;
  double dwell_per_passenger = 2.0;
  double fixed_stop_spacing = 400.0;

  void validate() const;
  int total_steps() const;
};

}  // namespace sod
