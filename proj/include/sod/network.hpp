#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sod {

// Corridor segment a node belongs to. Indices double as state-vector zone
// categories (0 = regular/fixed-route portion, 1 = Zone1, 2 = Zone2).
enum class Segment : std::uint8_t { kFixedRoute = 0, kZone1 = 1, kZone2 = 2 };

inline constexpr int kSegmentCount = 3;

const char* to_string(Segment s);

class NetworkError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Geometry of the synthetic comb-shaped corridor: a straight mainline along
// the x axis starting at the terminus, with perpendicular dead-end side streets
// on both sides at every mainline junction except the terminus.
struct CorridorSpec {
  double mainline_length = 5600.0;
  std::vector<double> segment_lengths = {1200.0, 2200.0, 2200.0};
  double side_spacing = 200.0;
  double side_depth = 300.0;
  double side_node_spacing = 100.0;
  double mainline_speed = 11.1;
  double side_speed = 5.0;

  void validate() const;
};

struct Node {
  double x = 0.0;
  double y = 0.0;
  Segment segment = Segment::kFixedRoute;
  bool on_mainline = true;
};

struct Edge {
  int from = 0;
  int to = 0;
  double length = 0.0;  // meters
  double time = 0.0;    // seconds
};

struct PathResult {
  std::vector<int> nodes;
  double time = 0.0;
  double distance = 0.0;
};

// Immutable street graph with all-pairs shortest paths precomputed at
// construction. Safe to share between simulation instances.
class Network {
 public:
  // General constructor; validates connectivity and the terminus invariant.
  Network(std::vector<Node> nodes, std::vector<Edge> edges, int terminus);

  int node_count() const { return static_cast<int>(nodes_.size()); }
  const Node& node(int id) const;
  std::span<const Node> nodes() const { return nodes_; }
  std::span<const Edge> edges() const { return edges_; }
  std::span<const Edge> out_edges(int id) const;
  int terminus() const { return terminus_; }

  PathResult shortest_path(int from, int to) const;

  // O(1) table lookups, unchecked.
  double travel_time(int from, int to) const {
    return time_[static_cast<std::size_t>(from) * nodes_.size() + to];
  }
  double travel_distance(int from, int to) const {
    return dist_[static_cast<std::size_t>(from) * nodes_.size() + to];
  }

  // Straight-line walking time in seconds.
  double walk_time(int from, int to, double walk_speed) const;

  // Distance from a node to the nearest point of the mainline (the x axis).
  double offset_from_mainline(int id) const;

  // Mainline node ids ordered by x.
  const std::vector<int>& mainline() const { return mainline_; }
  int mainline_node_near(double x) const;

  // Distance covered after `elapsed` seconds along the shortest path from
  // `from` to `to`, assuming constant speed on each edge.
  double distance_after(int from, int to, double elapsed) const;

  void write_csv(std::ostream& nodes_out, std::ostream& edges_out) const;

 private:
  void check_node(int id) const;
  void compute_all_pairs();

  std::vector<Node> nodes_;
  std::vector<Edge> edges_;          // sorted by from, then to
  std::vector<std::size_t> offset_;  // CSR offsets into edges_
  int terminus_ = 0;
  std::vector<int> mainline_;
  std::vector<double> time_;
  std::vector<double> dist_;
  std::vector<int> pred_;  // pred_[src * n + v]; -1 on the diagonal
};

Network build_corridor(const CorridorSpec& spec);

// Segment label for a mainline position x.
Segment segment_at(const CorridorSpec& spec, double x);

}  // namespace sod
