#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "cot/matrix.hpp"

namespace cot {

struct Edge {
  int tail = 0;
  int head = 0;
};

/// Directed multigraph with designated source and destination nodes.
/// Node and edge ids are dense and 0-based; edges keep insertion order.
class Network {
 public:
  Network() = default;

  /// Returns the id of `label`, creating the node on first use.
  int node(const std::string& label);
  int add_node(const std::string& label);
  /// Node id for `label`, or -1.
  int find(const std::string& label) const;

  /// No validation happens here; see validate_network.
  int add_edge(int tail, int head);
  void add_source(int node);
  void add_destination(int node);

  std::size_t node_count() const { return labels_.size(); }
  std::size_t edge_count() const { return edges_.size(); }
  const std::vector<Edge>& edges() const { return edges_; }
  const Edge& edge(int e) const { return edges_[static_cast<std::size_t>(e)]; }
  const std::vector<int>& sources() const { return sources_; }
  const std::vector<int>& destinations() const { return destinations_; }
  const std::string& label(int node) const { return labels_[static_cast<std::size_t>(node)]; }

  /// Outgoing edge ids of `node`, ascending. Valid only for validated networks.
  std::span<const int> out_edges(int node) const;
  std::span<const int> in_edges(int node) const;

 private:
  void index_edge(int e);

  std::vector<std::string> labels_;
  std::unordered_map<std::string, int> ids_;
  std::vector<Edge> edges_;
  std::vector<std::vector<int>> out_;
  std::vector<std::vector<int>> in_;
  std::vector<int> sources_;
  std::vector<int> destinations_;
};

/// Per-edge nonnegative cost xi(e).
using EdgeMetric = std::vector<double>;

struct Path {
  int source = 0;
  int destination = 0;
  std::vector<int> edges;
};

using PathSet = std::vector<Path>;

/// Throws DanglingEdge, SelfLoop, InvalidInput (empty S or D) or
/// Unreachable when some destination cannot be reached from any source.
void validate_network(const Network& net);

/// d_xi(s, d) for s in S (rows) and d in D (columns) with one witness path
/// per pair. Unreachable pairs hold +inf and an empty witness.
struct ShortestPathTable {
  Matrix distance;
  std::vector<std::vector<std::vector<int>>> witness;  // [s][d] -> edge ids

  bool reachable(std::size_t s, std::size_t d) const {
    return distance(s, d) < kInfinity;
  }
};

/// Shortest distances under `xi` with ties broken towards the lexicographically
/// smallest edge-id sequence. Destinations are processed in parallel.
ShortestPathTable shortest_distances(const Network& net, std::span<const double> xi);

/// Length of `edges` under xi.
double path_length(std::span<const int> edges, std::span<const double> xi);

/// All simple paths from every source to every destination, grouped by
/// (source, destination) in S x D order and sorted lexicographically by edge
/// ids within a group. `max_len` == 0 means no length limit. A source that is
/// also a destination contributes the empty path for that pair.
PathSet enumerate_paths(const Network& net, std::size_t max_len = 0,
                        std::size_t cap = 100000);

bool is_connected_path(const Network& net, const Path& path);

}  // namespace cot
