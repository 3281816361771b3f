#include "sod/network.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <queue>
#include <tuple>

namespace sod {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kGeomTol = 1e-9;

}  // namespace

const char* to_string(Segment s) {
  switch (s) {
    case Segment::kFixedRoute:
      return "fixed";
    case Segment::kZone1:
      return "zone1";
    case Segment::kZone2:
      return "zone2";
  }
  return "?";
}

void CorridorSpec::validate() const {
  auto positive = [](double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw NetworkError(std::string("corridor: ") + what + " must be > 0");
    }
  };
  positive(mainline_length, "mainline_length");
  positive(side_spacing, "side_spacing");
  positive(side_node_spacing, "side_node_spacing");
  positive(mainline_speed, "mainline_speed");
  positive(side_speed, "side_speed");
  if (!(side_depth >= 0.0)) throw NetworkError("corridor: side_depth must be >= 0");
  if (segment_lengths.size() != kSegmentCount) {
    throw NetworkError("corridor: expected 3 segment lengths (fixed, zone1, zone2)");
  }
  double sum = 0.0;
  for (double len : segment_lengths) {
    positive(len, "segment length");
    sum += len;
  }
  if (std::abs(sum - mainline_length) > 1e-6) {
    throw NetworkError("corridor: segment lengths must sum to mainline_length");
  }
}

Segment segment_at(const CorridorSpec& spec, double x) {
  if (x <= spec.segment_lengths[0] + kGeomTol) return Segment::kFixedRoute;
  if (x <= spec.segment_lengths[0] + spec.segment_lengths[1] + kGeomTol) return Segment::kZone1;
  return Segment::kZone2;
}

Network build_corridor(const CorridorSpec& spec) {
  spec.validate();

  std::vector<double> xs;
  for (int k = 0;; ++k) {
    double x = k * spec.side_spacing;
    if (x >= spec.mainline_length - kGeomTol) break;
    xs.push_back(x);
  }
  xs.push_back(spec.mainline_length);

  std::vector<Node> nodes;
  std::vector<Edge> edges;
  auto link = [&edges](int a, int b, double length, double speed) {
    edges.push_back({a, b, length, length / speed});
    edges.push_back({b, a, length, length / speed});
  };

  for (double x : xs) nodes.push_back({x, 0.0, segment_at(spec, x), true});
  for (std::size_t i = 1; i < xs.size(); ++i) {
    link(static_cast<int>(i - 1), static_cast<int>(i), xs[i] - xs[i - 1], spec.mainline_speed);
  }

  std::vector<double> depths;
  for (int k = 1;; ++k) {
    double d = std::min(k * spec.side_node_spacing, spec.side_depth);
    if (spec.side_depth <= kGeomTol) break;
    depths.push_back(d);
    if (d >= spec.side_depth - kGeomTol) break;
  }

  if (!depths.empty()) {
    for (std::size_t i = 1; i < xs.size(); ++i) {
      for (double side : {1.0, -1.0}) {
        int prev = static_cast<int>(i);
        double prev_depth = 0.0;
        for (double d : depths) {
          int id = static_cast<int>(nodes.size());
          nodes.push_back({xs[i], side * d, segment_at(spec, xs[i]), false});
          link(prev, id, d - prev_depth, spec.side_speed);
          prev = id;
          prev_depth = d;
        }
      }
    }
  }

  return Network(std::move(nodes), std::move(edges), 0);
}

Network::Network(std::vector<Node> nodes, std::vector<Edge> edges, int terminus)
    : nodes_(std::move(nodes)), edges_(std::move(edges)), terminus_(terminus) {
  const int n = node_count();
  if (n == 0) throw NetworkError("network: no nodes");
  check_node(terminus_);
  if (nodes_[terminus_].segment != Segment::kFixedRoute) {
    throw NetworkError("network: terminus must lie in the fixed-route segment");
  }
  for (const Edge& e : edges_) {
    if (e.from < 0 || e.from >= n || e.to < 0 || e.to >= n) {
      throw NetworkError("network: edge references unknown node");
    }
    if (!(e.length > 0.0) || !(e.time > 0.0)) {
      throw NetworkError("network: edge length and time must be > 0");
    }
  }
  std::sort(edges_.begin(), edges_.end(), [](const Edge& a, const Edge& b) {
    return std::tie(a.from, a.to) < std::tie(b.from, b.to);
  });
  offset_.assign(n + 1, 0);
  for (const Edge& e : edges_) ++offset_[e.from + 1];
  for (int i = 0; i < n; ++i) offset_[i + 1] += offset_[i];

  for (int i = 0; i < n; ++i) {
    if (nodes_[i].on_mainline) mainline_.push_back(i);
  }
  std::stable_sort(mainline_.begin(), mainline_.end(),
                   [this](int a, int b) { return nodes_[a].x < nodes_[b].x; });

  compute_all_pairs();
}

void Network::check_node(int id) const {
  if (id < 0 || id >= node_count()) {
    throw NetworkError("network: unknown node id " + std::to_string(id));
  }
}

const Node& Network::node(int id) const {
  check_node(id);
  return nodes_[id];
}

std::span<const Edge> Network::out_edges(int id) const {
  check_node(id);
  return std::span<const Edge>(edges_).subspan(offset_[id], offset_[id + 1] - offset_[id]);
}

// Dijkstra from every node. Labels compare by (time, hops); among equal labels
// the predecessor with the lower node id wins, so paths are reproducible.
void Network::compute_all_pairs() {
  const int n = node_count();
  const std::size_t nn = static_cast<std::size_t>(n) * n;
  time_.assign(nn, kInf);
  dist_.assign(nn, kInf);
  pred_.assign(nn, -1);

  std::vector<int> hops(n);
  std::vector<char> done(n);
  using Label = std::tuple<double, int, int>;  // time, hops, node
  for (int src = 0; src < n; ++src) {
    double* t = &time_[static_cast<std::size_t>(src) * n];
    double* d = &dist_[static_cast<std::size_t>(src) * n];
    int* p = &pred_[static_cast<std::size_t>(src) * n];
    std::fill(hops.begin(), hops.end(), std::numeric_limits<int>::max());
    std::fill(done.begin(), done.end(), 0);
    std::priority_queue<Label, std::vector<Label>, std::greater<>> heap;
    t[src] = 0.0;
    d[src] = 0.0;
    hops[src] = 0;
    heap.emplace(0.0, 0, src);
    while (!heap.empty()) {
      auto [tu, hu, u] = heap.top();
      heap.pop();
      if (done[u]) continue;
      done[u] = 1;
      for (std::size_t k = offset_[u]; k < offset_[u + 1]; ++k) {
        const Edge& e = edges_[k];
        const int v = e.to;
        if (done[v]) continue;
        const double tv = tu + e.time;
        const int hv = hu + 1;
        bool better = tv < t[v] || (tv == t[v] && hv < hops[v]) ||
                      (tv == t[v] && hv == hops[v] && u < p[v]);
        if (better) {
          t[v] = tv;
          d[v] = d[u] + e.length;
          hops[v] = hv;
          p[v] = u;
          heap.emplace(tv, hv, v);
        }
      }
    }
    for (int v = 0; v < n; ++v) {
      if (!done[v]) throw NetworkError("network: graph is not strongly connected");
    }
  }
}

PathResult Network::shortest_path(int from, int to) const {
  check_node(from);
  check_node(to);
  PathResult out;
  out.time = travel_time(from, to);
  out.distance = travel_distance(from, to);
  const int* p = &pred_[static_cast<std::size_t>(from) * nodes_.size()];
  for (int v = to; v != -1; v = (v == from) ? -1 : p[v]) out.nodes.push_back(v);
  std::reverse(out.nodes.begin(), out.nodes.end());
  return out;
}

double Network::walk_time(int from, int to, double walk_speed) const {
  check_node(from);
  check_node(to);
  if (!(walk_speed > 0.0)) throw NetworkError("network: walk_speed must be > 0");
  const Node& a = nodes_[from];
  const Node& b = nodes_[to];
  return std::hypot(a.x - b.x, a.y - b.y) / walk_speed;
}

double Network::offset_from_mainline(int id) const { return std::abs(node(id).y); }

int Network::mainline_node_near(double x) const {
  int best = mainline_.front();
  for (int id : mainline_) {
    if (std::abs(nodes_[id].x - x) < std::abs(nodes_[best].x - x)) best = id;
  }
  return best;
}

double Network::distance_after(int from, int to, double elapsed) const {
  if (elapsed <= 0.0 || from == to) return 0.0;
  if (elapsed >= travel_time(from, to)) return travel_distance(from, to);
  // Walk the predecessor chain backwards from `to`, then accumulate forwards.
  const int* p = &pred_[static_cast<std::size_t>(from) * nodes_.size()];
  thread_local std::vector<int> chain;
  chain.clear();
  for (int v = to; v != from; v = p[v]) chain.push_back(v);
  double covered = 0.0;
  double clock = 0.0;
  int u = from;
  for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
    const int v = *it;
    const double et = travel_time(u, v);
    const double el = travel_distance(u, v);
    if (clock + et >= elapsed) return covered + el * (elapsed - clock) / et;
    clock += et;
    covered += el;
    u = v;
  }
  return covered;
}

void Network::write_csv(std::ostream& nodes_out, std::ostream& edges_out) const {
  nodes_out << "id,x,y,segment,mainline\n";
  for (int i = 0; i < node_count(); ++i) {
    const Node& nd = nodes_[i];
    nodes_out << i << ',' << nd.x << ',' << nd.y << ',' << to_string(nd.segment) << ','
              << (nd.on_mainline ? 1 : 0) << '\n';
  }
  edges_out << "from,to,length_m,time_s\n";
  for (const Edge& e : edges_) {
    edges_out << e.from << ',' << e.to << ',' << e.length << ',' << e.time << '\n';
  }
}

}  // namespace sod
