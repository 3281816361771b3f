#pragma once

#include <cstdint>

#include <Eigen/Dense>

namespace sod::ppo {

struct StepResult {
  Eigen::VectorXd observation;
  double reward = 0.0;
  bool done = false;
};

// Episodic environment with a discrete action space. Instances are used by
// one thread at a time; parallel rollouts use one instance per thread.
class Environment {
 public:
  virtual ~Environment() = default;
  virtual int observation_size() const = 0;
  virtual int action_count() const = 0;
  // Starts a new episode; the seed selects the episode instance.
  virtual Eigen::VectorXd reset(std::uint64_t seed) = 0;
  // Advances one decision period. Calling step after `done` is an error.
  virtual StepResult step(int action) = 0;
};

}  // namespace sod::ppo
