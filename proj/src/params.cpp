#include "sod/params.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace sod {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

}  // namespace

void CostCoefficients::validate() const {
  for (double c : {operating_per_km, ride_per_hour, satisfied_reward, fixed_stop_reward,
                   access_per_hour, wait_per_hour, vehicle_per_hour}) {
    require(c >= 0.0 && std::isfinite(c), "costs: coefficients must be finite and >= 0");
  }
}

CostCoefficients CostCoefficients::scaled(double factor) const {
  CostCoefficients c = *this;
  for (double* p : {&c.operating_per_km, &c.ride_per_hour, &c.satisfied_reward,
                    &c.fixed_stop_reward, &c.access_per_hour, &c.wait_per_hour,
                    &c.vehicle_per_hour}) {
    *p *= factor;
  }
  return c;
}

void FeasibilityLimits::validate() const {
  require(max_wait > 0.0, "limits: max_wait must be > 0");
  require(detour_factor > 0.0, "limits: detour_factor must be > 0");
  require(detour_constant > 0.0, "limits: detour_constant must be > 0");
  require(capacity > 0, "limits: capacity must be > 0");
  require(flex_window > 0.0, "limits: flex_window must be > 0");
}

void OperationsSpec::validate() const {
  require(step > 0.0, "operations: step must be > 0");
  require(horizon > 0.0, "operations: horizon must be > 0");
  require(warmup >= 0.0 && warmup < horizon, "operations: warmup must be in [0, horizon)");
  require(boarding_time >= 0.0, "operations: boarding_time must be >= 0");
  require(dwell_base >= 0.0 && dwell_per_passenger >= 0.0, "operations: dwell must be >= 0");
  require(fixed_stop_spacing > 0.0, "operations: fixed_stop_spacing must be > 0");
  const double steps = horizon / step;
  require(std::abs(steps - std::round(steps)) < 1e-9, "operations: horizon must be a multiple of step");
}

int OperationsSpec::total_steps() const { return static_cast<int>(std::lround(horizon / step)); }

}  // namespace sod
