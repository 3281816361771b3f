#include <doctest.h>

#include <random>

#include "sod/econ.hpp"
#include "sod/env.hpp"
#include "sod/scenario.hpp"

using namespace sod;

namespace {

std::shared_ptr<const Runtime> default_runtime() {
  static const auto rt = Runtime::build(Scenario{});
  return rt;
}

int rejected_now(const World& w) {
  int n = 0;
  for (const Request& r : w.requests()) n += r.state == RequestState::kRejected ? 1 : 0;
  return n;
}

}  // namespace

TEST_CASE("initial state") {
  SodEnv env(default_runtime());
  const Eigen::VectorXd s = env.reset(1);
  REQUIRE(s.size() == kStateSize);
  CHECK(s[0] == 0.0);
  CHECK(s[1] == doctest::Approx(4.0 / 8.0));
  // Nothing dispatched yet: time since dispatch saturates.
  for (int k = 0; k < 3; ++k) CHECK(s[12 + k] == 1.0);
  CHECK(env.episode_length() == 180);
  CHECK(env.decision_index() == 0);
  SodEnv again(default_runtime());
  CHECK(again.reset(1) == s);
}

TEST_CASE("normalization") {
  StateRanges r;
  for (auto& x : r) x = {0.0, 10.0};
  RawState raw{};
  raw[0] = 0.0;
  raw[1] = 10.0;
  raw[2] = 25.0;
  raw[3] = -3.0;
  raw[4] = 4.0;
  const RawState n = normalize(raw, r);
  CHECK(n[0] == 0.0);
  CHECK(n[1] == 1.0);
  CHECK(n[2] == 1.0);
  CHECK(n[3] == 0.0);
  CHECK(n[4] == doctest::Approx(0.4));
  CHECK(denormalize(n, r)[4] == doctest::Approx(4.0));
  r[5] = {2.0, 2.0};
  CHECK_THROWS(normalize(raw, r));

  const StateRanges def = state_ranges(Scenario{});
  CHECK(def[0].max == 8.0);
  CHECK(def[3].max == 20.0);
  CHECK(def[4].max == 8.0 * 1200.0);
  CHECK(def[12].max == 1800.0);
  CHECK(def[15].max == 15.0);
}

TEST_CASE("episode bookkeeping") {
  const auto rt = default_runtime();
  SodEnv env(rt);
  CHECK_THROWS(env.step(0));
  env.reset(7);
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> pick(0, 3);
  double total = 0.0;
  int steps = 0;
  while (!env.done()) {
    const int before = rejected_now(env.world());
    const auto out = env.step(pick(rng));
    ++steps;
    CHECK(out.reward == -static_cast<double>(rejected_now(env.world()) - before));
    CHECK(out.done == (steps == env.episode_length()));
    CHECK(out.observation.size() == kStateSize);
    CHECK(out.observation.minCoeff() >= 0.0);
    CHECK(out.observation.maxCoeff() <= 1.0);
    const RawState raw = env.raw();
    CHECK(raw[1] == env.world().available_count(FleetClass::kControllable));
    CHECK(raw[2] == doctest::Approx(raw[15] + raw[16] + raw[17]));
    total += out.reward;
  }
  CHECK(steps == 180);
  CHECK(total == -static_cast<double>(generalized_cost(env.world()).rejected_all));
  CHECK_THROWS(env.step(kHoldAction));
  CHECK_THROWS(SodEnv(rt).step(0));
}

TEST_CASE("hold changes nothing but the clock") {
  const auto rt = default_runtime();
  SodEnv env(rt);
  env.reset_with({});
  env.step(kHoldAction);
  env.step(kHoldAction);
  const RawState before = env.raw();
  const double now = env.world().now();
  env.step(kHoldAction);
  const RawState after = env.raw();
  CHECK(env.world().now() == now + 60.0);
  CHECK(after[1] == before[1]);
  CHECK(after[3] == before[3]);
  CHECK(after[13] == before[13]);
}

TEST_CASE("dispatch action updates the state") {
  const auto rt = default_runtime();
  SodEnv env(rt);
  env.reset_with({});
  env.step(1);
  const RawState raw = env.raw();
  CHECK(raw[1] == 3.0);
  CHECK(raw[13] == 60.0);
  // Reserved override at time zero.
  CHECK(raw[12] == 60.0);
  CHECK(raw[0] == 2.0);
  CHECK(raw[4 + 3] == doctest::Approx(1200.0));
}

TEST_CASE("snapshot and restore reproduce the trajectory") {
  const auto rt = default_runtime();
  SodEnv env(rt);
  env.reset(11);
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> pick(0, 3);
  for (int i = 0; i < 60; ++i) env.step(pick(rng));
  SodEnv copy = env;
  std::vector<int> actions;
  for (int i = 0; i < 60; ++i) actions.push_back(pick(rng));
  for (int a : actions) {
    const auto x = env.step(a);
    const auto y = copy.step(a);
    CHECK(x.observation == y.observation);
    CHECK(x.reward == y.reward);
  }
}
