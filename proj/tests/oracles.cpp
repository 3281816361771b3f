#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace oracle {

using namespace sod;

std::vector<double> bellman_ford(const Network& net, int source) {
  const int n = net.node_count();
  std::vector<double> d(n, std::numeric_limits<double>::infinity());
  d[source] = 0.0;
  for (int round = 0; round < n - 1; ++round) {
    bool changed = false;
    for (const Edge& e : net.edges()) {
      if (d[e.from] + e.time < d[e.to]) {
        d[e.to] = d[e.from] + e.time;
        changed = true;
      }
    }
    if (!changed) break;
  }
  return d;
}

std::vector<double> gae_direct(const std::vector<double>& deltas, const std::vector<std::uint8_t>& dones,
                               double gamma, double lambda) {
  const std::size_t n = deltas.size();
  std::vector<double> out(n, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    double w = 1.0;
    for (std::size_t k = t; k < n; ++k) {
      out[t] += w * deltas[k];
      if (dones[k]) break;
      w *= gamma * lambda;
    }
  }
  return out;
}

namespace {

// Continuous part of the insertion objective over every active schedule.
double continuous_objective(const World& w) {
  const SimContext& ctx = w.context();
  double total = 0.0;
  for (const Vehicle& v : w.vehicles()) {
    const auto& stops = v.schedule.stops;
    for (std::size_t i = 1; i < stops.size(); ++i) {
      total += ctx.costs.operating_per_km * ctx.network->travel_distance(stops[i - 1].node, stops[i].node) / 1000.0;
    }
    for (const Stop& st : stops) {
      for (int rid : st.alight) total += ctx.costs.ride_per_hour * (st.arrival - w.request(rid).request_time) / 3600.0;
    }
  }
  return total;
}

}  // namespace

std::optional<Choice> brute_force_best(const World& world, int request_id) {
  const Request& r = world.request(request_id);
  const CostCoefficients& c = world.context().costs;
  const double base = continuous_objective(world);
  std::vector<Choice> found;
  for (const Vehicle& v : world.vehicles()) {
    if (!zone_compatible(r, v)) continue;
    const int n = static_cast<int>(v.schedule.stops.size());
    std::vector<Slot> slots;
    for (int pos = 0; pos < n; ++pos) {
      slots.push_back({pos, false});
      slots.push_back({pos, true});
    }
    for (Slot p : slots) {
      for (Slot d : slots) {
        const bool ordered = p.order_key() < d.order_key() || (p.order_key() == d.order_key() && !p.attach && !d.attach);
        if (!ordered) continue;
        World copy = world;
        try {
          copy.apply_insertion(v.id, request_id, p, d);
        } catch (const SimError&) {
          continue;
        }
        if (!audit_schedule(copy, v.id).empty()) continue;
        const double delta = continuous_objective(copy) - base - c.satisfied_reward -
                             (r.fixed_stop_served ? c.fixed_stop_reward : 0.0);
        found.push_back({v.id, p, d, delta});
      }
    }
  }
  if (found.empty()) return std::nullopt;
  double lowest = std::numeric_limits<double>::infinity();
  for (const Choice& ch : found) lowest = std::min(lowest, ch.delta);
  for (const Choice& ch : found) {
    if (ch.delta <= lowest + kInsertionTieTolerance) return ch;
  }
  return std::nullopt;
}

void brute_force_match(World& world) {
  const double now = world.now();
  const std::vector<int> pending = world.pending();
  for (int rid : pending) {
    if (now - world.request(rid).request_time > world.context().limits.max_wait) world.reject(rid);
  }
  const std::vector<int> remaining = world.pending();
  for (int rid : remaining) {
    if (auto best = brute_force_best(world, rid)) world.apply_insertion(best->vehicle, rid, best->pickup, best->dropoff);
  }
}

std::string diff_worlds(const World& a, const World& b) {
  std::ostringstream out;
  for (std::size_t i = 0; i < a.requests().size(); ++i) {
    const Request& x = a.requests()[i];
    const Request& y = b.requests()[i];
    if (x.state != y.state || x.vehicle != y.vehicle) {
      out << "request " << i << " state " << to_string(x.state) << "/v" << x.vehicle << " vs " << to_string(y.state)
          << "/v" << y.vehicle;
      return out.str();
    }
  }
  for (std::size_t v = 0; v < a.vehicles().size(); ++v) {
    const auto& s = a.vehicles()[v].schedule.stops;
    const auto& t = b.vehicles()[v].schedule.stops;
    if (s.size() != t.size()) {
      out << "vehicle " << v << " has " << s.size() << " vs " << t.size() << " stops";
      return out.str();
    }
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i].node != t[i].node || s[i].kind != t[i].kind || s[i].board != t[i].board || s[i].alight != t[i].alight ||
          std::abs(s[i].arrival - t[i].arrival) > 1e-9) {
        out << "vehicle " << v << " stop " << i << " differs";
        return out.str();
      }
    }
  }
  return {};
}

std::string check_matching_instance(const std::shared_ptr<const Runtime>& rt, std::uint64_t seed,
                                    int* steps_checked, int* decisions) {
  std::mt19937_64 rng(seed);
  const Network& net = *rt->network;
  const int terminus = net.terminus();
  const int count = std::uniform_int_distribution<int>(1, 5)(rng);
  const bool fixed_route = std::bernoulli_distribution(0.15)(rng);
  std::vector<double> times;
  for (int i = 0; i < count; ++i) times.push_back(std::uniform_real_distribution<double>(0.0, 1500.0)(rng));
  std::sort(times.begin(), times.end());
  std::vector<Request> reqs;
  for (int i = 0; i < count; ++i) {
    Request r;
    r.id = i;
    r.request_time = times[i];
    const int far = rt->demand->sample_endpoint(rng);
    const bool outbound = std::bernoulli_distribution(0.5)(rng);
    r.origin = outbound ? terminus : far;
    r.destination = outbound ? far : terminus;
    r.origin_segment = net.node(r.origin).segment;
    r.destination_segment = net.node(r.destination).segment;
    reqs.push_back(r);
  }
  World w(rt->context, reqs, fixed_route ? ServicePattern::kFixedRoute : ServicePattern::kSemiOnDemand,
          {FleetClass::kReserved, FleetClass::kReserved});
  std::uniform_int_distribution<int> zone_pick(0, 2);
  const int start0 = std::uniform_int_distribution<int>(0, 6)(rng);
  const int start1 = std::bernoulli_distribution(0.8)(rng) ? std::uniform_int_distribution<int>(0, 20)(rng) : -1;
  const int zone0 = fixed_route ? 0 : zone_pick(rng);
  const int zone1 = fixed_route ? 0 : zone_pick(rng);
  for (int step = 0; step < 50 && !w.finished(); ++step) {
    if (step == start0) w.dispatch_vehicle(0, zone0);
    if (step == start1) w.dispatch_vehicle(1, zone1);
    World a = w;
    World b = w;
    const std::size_t before = a.pending().size();
    match_step(a);
    brute_force_match(b);
    if (steps_checked) ++*steps_checked;
    if (decisions) *decisions += static_cast<int>(before);
    const std::string d = diff_worlds(a, b);
    if (!d.empty()) return "seed " + std::to_string(seed) + " step " + std::to_string(step) + ": " + d;
    w = std::move(a);
    const StepReport rep = w.advance_step();
    if (!rep.violations.empty()) return "seed " + std::to_string(seed) + ": " + rep.violations.front();
  }
  return {};
}

Eigen::VectorXd finite_difference(const std::function<double(const Eigen::VectorXd&)>& f, Eigen::VectorXd p,
                                  double h) {
  Eigen::VectorXd g(p.size());
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const double keep = p[i];
    p[i] = keep + h;
    const double up = f(p);
    p[i] = keep - h;
    const double down = f(p);
    p[i] = keep;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

double max_relative_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double floor) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double scale = std::max({std::abs(a[i]), std::abs(b[i]), floor});
    worst = std::max(worst, std::abs(a[i] - b[i]) / scale);
  }
  return worst;
}

GradCheck gradient_trial(std::uint64_t seed) {
  using sod::ppo::DenseNet;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  DenseNet actor({4, 2, 2});
  DenseNet critic({4, 2, 1});
  for (auto* net : {&actor, &critic}) {
    Eigen::VectorXd p(net->parameter_count());
    for (Eigen::Index i = 0; i < p.size(); ++i) p[i] = normal(rng);
    net->set_parameters(p);
  }
  const int n = 6;
  const double clip = 0.2;
  sod::ppo::PolicyBatch batch;
  batch.states.resize(4, n);
  batch.old_log_prob.resize(n);
  batch.advantages.resize(n);
  Eigen::VectorXd targets(n);
  for (int b = 0; b < n; ++b) {
    for (int i = 0; i < 4; ++i) batch.states(i, b) = normal(rng);
    const int a = std::uniform_int_distribution<int>(0, 1)(rng);
    batch.actions.push_back(a);
    batch.advantages[b] = normal(rng);
    targets[b] = normal(rng);
    const double lp = sod::ppo::log_softmax(actor.forward(Eigen::VectorXd(batch.states.col(b))))[a];
    // Keep the ratio away from the clipping kinks so the objective is smooth.
    double old = lp;
    for (;;) {
      old = lp + 0.4 * normal(rng);
      const double ratio = std::exp(lp - old);
      if (std::abs(ratio - (1.0 + clip)) > 1e-3 && std::abs(ratio - (1.0 - clip)) > 1e-3) break;
    }
    batch.old_log_prob[b] = old;
  }

  const double h = 1e-6;
  const double floor = 1e-6;
  GradCheck out;
  {
    auto f = [&](const Eigen::VectorXd& p) {
      DenseNet net = actor;
      net.set_parameters(p);
      return sod::ppo::surrogate_loss(net, batch, clip, 0.0).surrogate;
    };
    const auto analytic = sod::ppo::surrogate_loss(actor, batch, clip, 0.0).grad;
    out.actor = max_relative_error(analytic, finite_difference(f, actor.parameters(), h), floor);
  }
  {
    const double coef = 0.5;
    auto f = [&](const Eigen::VectorXd& p) {
      DenseNet net = actor;
      net.set_parameters(p);
      const auto o = sod::ppo::surrogate_loss(net, batch, clip, coef);
      return o.surrogate + coef * o.entropy;
    };
    const auto analytic = sod::ppo::surrogate_loss(actor, batch, clip, coef).grad;
    out.entropy = max_relative_error(analytic, finite_difference(f, actor.parameters(), h), floor);
  }
  {
    auto f = [&](const Eigen::VectorXd& p) {
      DenseNet net = critic;
      net.set_parameters(p);
      return sod::ppo::critic_loss(net, batch.states, targets).loss;
    };
    const auto analytic = sod::ppo::critic_loss(critic, batch.states, targets).grad;
    out.critic = max_relative_error(analytic, finite_difference(f, critic.parameters(), h), floor);
  }
  return out;
}

BanditRun train_bandit(std::uint64_t seed, int updates) {
  sod::ppo::PPOConfig cfg;
  cfg.seed = seed;
  cfg.rollout_length = 16;
  sod::ppo::Agent agent(4, 4, cfg);
  std::vector<sod::ppo::EnvSlot> slots(static_cast<std::size_t>(cfg.num_envs));
  for (std::size_t i = 0; i < slots.size(); ++i) {
    slots[i].env = std::make_unique<Bandit>();
    slots[i].rng.seed(seed * 7919 + i);
    slots[i].instance_seed = [](std::uint64_t e) { return e; };
  }
  BanditRun run;
  const Eigen::VectorXd obs = Eigen::VectorXd::Ones(4);
  for (int u = 0; u < updates; ++u) {
    auto rollouts = sod::ppo::collect_rollouts(slots, agent.actor(), agent.critic(), cfg.rollout_length, false);
    const auto stats = agent.update(rollouts);
    run.p_optimal.push_back(sod::ppo::softmax(agent.actor().forward(obs))[0]);
    run.entropy.push_back(stats.entropy);
  }
  return run;
}

}  // namespace oracle
