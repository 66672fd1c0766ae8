#include "cot/network.hpp"

#include <algorithm>
#include <functional>
#include <queue>
#include <utility>

#include "cot/error.hpp"
#include "cot/parallel.hpp"

namespace cot {

int Network::node(const std::string& label) {
  const int id = find(label);
  return id >= 0 ? id : add_node(label);
}

int Network::add_node(const std::string& label) {
  if (ids_.count(label) != 0) throw Error(ErrorCode::InvalidInput, "duplicate node label '" + label + "'");
  const int id = static_cast<int>(labels_.size());
  labels_.push_back(label);
  ids_.emplace(label, id);
  out_.emplace_back();
  in_.emplace_back();
  return id;
}

int Network::find(const std::string& label) const {
  const auto it = ids_.find(label);
  return it == ids_.end() ? -1 : it->second;
}

int Network::add_edge(int tail, int head) {
  const int e = static_cast<int>(edges_.size());
  edges_.push_back({tail, head});
  index_edge(e);
  return e;
}

void Network::index_edge(int e) {
  const Edge& ed = edges_[static_cast<std::size_t>(e)];
  const int n = static_cast<int>(labels_.size());
  // Dangling edges stay out of the adjacency; validate_network reports them.
  if (ed.tail < 0 || ed.tail >= n || ed.head < 0 || ed.head >= n) return;
  out_[static_cast<std::size_t>(ed.tail)].push_back(e);
  in_[static_cast<std::size_t>(ed.head)].push_back(e);
}

void Network::add_source(int node) {
  if (std::find(sources_.begin(), sources_.end(), node) == sources_.end()) sources_.push_back(node);
}

void Network::add_destination(int node) {
  if (std::find(destinations_.begin(), destinations_.end(), node) == destinations_.end())
    destinations_.push_back(node);
}

std::span<const int> Network::out_edges(int node) const {
  return out_[static_cast<std::size_t>(node)];
}

std::span<const int> Network::in_edges(int node) const {
  return in_[static_cast<std::size_t>(node)];
}

void validate_network(const Network& net) {
  const int n = static_cast<int>(net.node_count());
  std::size_t indexed = 0;
  for (std::size_t e = 0; e < net.edge_count(); ++e) {
    const Edge& ed = net.edges()[e];
    if (ed.tail < 0 || ed.tail >= n || ed.head < 0 || ed.head >= n)
      throw Error(ErrorCode::DanglingEdge, "edge " + std::to_string(e) + " references node " +
                                               std::to_string(ed.tail < 0 || ed.tail >= n ? ed.tail : ed.head) +
                                               " of a " + std::to_string(n) + "-node graph");
    if (ed.tail == ed.head)
      throw Error(ErrorCode::SelfLoop, "edge " + std::to_string(e) + " is a self-loop at '" + net.label(ed.tail) + "'");
  }
  for (int v = 0; v < n; ++v) indexed += net.out_edges(v).size();
  if (indexed != net.edge_count())
    throw Error(ErrorCode::DanglingEdge, "edge added before its endpoint nodes existed");
  if (net.sources().empty() || net.destinations().empty())
    throw Error(ErrorCode::InvalidInput, "network needs at least one source and one destination");
  for (int s : net.sources())
    if (s < 0 || s >= n) throw Error(ErrorCode::DanglingEdge, "source id out of range");
  for (int d : net.destinations())
    if (d < 0 || d >= n) throw Error(ErrorCode::DanglingEdge, "destination id out of range");

  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  std::vector<int> stack(net.sources().begin(), net.sources().end());
  for (int s : stack) seen[static_cast<std::size_t>(s)] = 1;
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    for (int e : net.out_edges(u)) {
      const int v = net.edge(e).head;
      if (!seen[static_cast<std::size_t>(v)]) {
        seen[static_cast<std::size_t>(v)] = 1;
        stack.push_back(v);
      }
    }
  }
  for (int d : net.destinations())
    if (!seen[static_cast<std::size_t>(d)])
      throw Error(ErrorCode::Unreachable, "destination '" + net.label(d) + "' is unreachable from source '" +
                                              net.label(net.sources().front()) + "'");
}

double path_length(std::span<const int> edges, std::span<const double> xi) {
  double len = 0.0;
  for (int e : edges) len += xi[static_cast<std::size_t>(e)];
  return len;
}

namespace {

// Distances from every node to `target` (reverse Dijkstra).
std::vector<double> distances_to(const Network& net, std::span<const double> xi, int target) {
  std::vector<double> dist(net.node_count(), kInfinity);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  dist[static_cast<std::size_t>(target)] = 0.0;
  heap.emplace(0.0, target);
  while (!heap.empty()) {
    const auto [du, u] = heap.top();
    heap.pop();
    if (du > dist[static_cast<std::size_t>(u)]) continue;
    for (int e : net.in_edges(u)) {
      const int v = net.edge(e).tail;
      const double nd = du + xi[static_cast<std::size_t>(e)];
      if (nd < dist[static_cast<std::size_t>(v)]) {
        dist[static_cast<std::size_t>(v)] = nd;
        heap.emplace(nd, v);
      }
    }
  }
  return dist;
}

bool tight(double xi_e, double dist_head, double dist_tail) {
  return xi_e + dist_head <= dist_tail + 1e-12 * std::max(1.0, dist_tail);
}

// Whether `target` is reachable from `from` along tight edges avoiding `blocked`.
bool tight_reachable(const Network& net, std::span<const double> xi, const std::vector<double>& dist,
                     int from, int target, const std::vector<char>& blocked, std::vector<char>& scratch) {
  if (from == target) return true;
  std::fill(scratch.begin(), scratch.end(), 0);
  std::vector<int> stack{from};
  scratch[static_cast<std::size_t>(from)] = 1;
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    for (int e : net.out_edges(u)) {
      const int v = net.edge(e).head;
      const auto vi = static_cast<std::size_t>(v);
      if (blocked[vi] || scratch[vi]) continue;
      if (!tight(xi[static_cast<std::size_t>(e)], dist[vi], dist[static_cast<std::size_t>(u)])) continue;
      if (v == target) return true;
      scratch[vi] = 1;
      stack.push_back(v);
    }
  }
  return false;
}

// Lexicographically smallest simple path from `s` to `target` among tight edges.
std::vector<int> lexicographic_witness(const Network& net, std::span<const double> xi,
                                       const std::vector<double>& dist, int s, int target) {
  std::vector<int> path;
  std::vector<char> visited(net.node_count(), 0);
  std::vector<char> scratch(net.node_count(), 0);
  int cur = s;
  visited[static_cast<std::size_t>(cur)] = 1;
  while (cur != target) {
    int chosen = -1;
    for (int e : net.out_edges(cur)) {
      const int v = net.edge(e).head;
      const auto vi = static_cast<std::size_t>(v);
      if (visited[vi] || dist[vi] == kInfinity) continue;
      if (!tight(xi[static_cast<std::size_t>(e)], dist[vi], dist[static_cast<std::size_t>(cur)])) continue;
      if (!tight_reachable(net, xi, dist, v, target, visited, scratch)) continue;
      chosen = e;
      break;
    }
    if (chosen < 0) return {};  // unreachable in floating point; caller checked distance
    path.push_back(chosen);
    cur = net.edge(chosen).head;
    visited[static_cast<std::size_t>(cur)] = 1;
  }
  return path;
}

}  // namespace

ShortestPathTable shortest_distances(const Network& net, std::span<const double> xi) {
  if (xi.size() != net.edge_count())
    throw Error(ErrorCode::InvalidInput, "edge metric length does not match edge count");
  for (double x : xi)
    if (!(x >= 0.0)) throw Error(ErrorCode::NegativeMetric, "edge metric must be nonnegative");

  const auto& S = net.sources();
  const auto& D = net.destinations();
  ShortestPathTable table;
  table.distance = Matrix(S.size(), D.size(), kInfinity);
  table.witness.assign(S.size(), std::vector<std::vector<int>>(D.size()));

  const int nd = static_cast<int>(D.size());
  // Each destination writes its own column, so the result does not depend on
  // the schedule.
#pragma omp parallel for schedule(dynamic)
  for (int j = 0; j < nd; ++j) {
    const int d = D[static_cast<std::size_t>(j)];
    const auto dist = distances_to(net, xi, d);
    for (std::size_t i = 0; i < S.size(); ++i) {
      const double len = dist[static_cast<std::size_t>(S[i])];
      table.distance(i, static_cast<std::size_t>(j)) = len;
      if (len < kInfinity && S[i] != d)
        table.witness[i][static_cast<std::size_t>(j)] = lexicographic_witness(net, xi, dist, S[i], d);
    }
  }
  return table;
}

PathSet enumerate_paths(const Network& net, std::size_t max_len, std::size_t cap) {
  const std::size_t limit = max_len == 0 ? net.node_count() : max_len;
  PathSet out;
  std::vector<char> on_path(net.node_count(), 0);
  std::vector<int> edges;

  for (int s : net.sources()) {
    for (int d : net.destinations()) {
      if (s == d) {
        out.push_back({s, d, {}});
        if (out.size() > cap) throw Error(ErrorCode::PathExplosion, "simple-path count exceeds cap");
        continue;
      }
      std::function<void(int)> dfs = [&](int u) {
        if (u == d) {
          out.push_back({s, d, edges});
          if (out.size() > cap) throw Error(ErrorCode::PathExplosion, "simple-path count exceeds cap");
          return;
        }
        if (edges.size() >= limit) return;
        for (int e : net.out_edges(u)) {
          const int v = net.edge(e).head;
          if (on_path[static_cast<std::size_t>(v)]) continue;
          on_path[static_cast<std::size_t>(v)] = 1;
          edges.push_back(e);
          dfs(v);
          edges.pop_back();
          on_path[static_cast<std::size_t>(v)] = 0;
        }
      };
      on_path[static_cast<std::size_t>(s)] = 1;
      dfs(s);
      on_path[static_cast<std::size_t>(s)] = 0;
    }
  }
  return out;
}

bool is_connected_path(const Network& net, const Path& path) {
  if (path.edges.empty()) return path.source == path.destination;
  if (net.edge(path.edges.front()).tail != path.source) return false;
  if (net.edge(path.edges.back()).head != path.destination) return false;
  std::vector<char> seen(net.node_count(), 0);
  seen[static_cast<std::size_t>(path.source)] = 1;
  for (std::size_t k = 0; k < path.edges.size(); ++k) {
    const Edge& ed = net.edge(path.edges[k]);
    if (k + 1 < path.edges.size() && ed.head != net.edge(path.edges[k + 1]).tail) return false;
    if (seen[static_cast<std::size_t>(ed.head)]) return false;
    seen[static_cast<std::size_t>(ed.head)] = 1;
  }
  return true;
}

}  // namespace cot
