#include "cot/wardrop.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <queue>
#include <string>

#include "cot/kantorovich.hpp"

namespace cot {

EdgeCosts uniform_costs(const Network& net, const CongestionSpec& spec) {
  return EdgeCosts(net.edge_count(), spec);
}

DemandSpec DemandSpec::fixed(Matrix gamma) {
  for (double g : gamma.data())
    if (!(g >= 0.0) || !std::isfinite(g)) throw Error(ErrorCode::InvalidInput, "demand entries must be finite and >= 0");
  DemandSpec d;
  d.kind = Kind::Fixed;
  d.gamma = std::move(gamma);
  return d;
}

DemandSpec DemandSpec::marginals(std::vector<double> mu, std::vector<double> nu) {
  for (double w : mu)
    if (!(w >= 0.0) || !std::isfinite(w)) throw Error(ErrorCode::InvalidInput, "mu weights must be finite and >= 0");
  for (double w : nu)
    if (!(w >= 0.0) || !std::isfinite(w)) throw Error(ErrorCode::InvalidInput, "nu weights must be finite and >= 0");
  const double a = std::accumulate(mu.begin(), mu.end(), 0.0);
  const double b = std::accumulate(nu.begin(), nu.end(), 0.0);
  if (std::abs(a - b) > 1e-12 * std::max({a, b, 1e-300}))
    throw Error(ErrorCode::MassMismatch, "sum mu = " + std::to_string(a) + " but sum nu = " + std::to_string(b));
  DemandSpec d;
  d.kind = Kind::Marginals;
  d.mu = std::move(mu);
  d.nu = std::move(nu);
  return d;
}

namespace {

void check_flows(std::span<const double> flows, std::size_t edges) {
  if (flows.size() != edges) throw Error(ErrorCode::ShapeMismatch, "flow vector length does not match edge count");
  for (double f : flows)
    if (!(f >= 0.0)) throw Error(ErrorCode::NegativeFlow, "link flows must be >= 0");
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

double coupling_cost(const Matrix& distance, const Matrix& gamma) {
  double s = 0.0;
  for (std::size_t k = 0; k < gamma.data().size(); ++k)
    if (gamma.data()[k] > 0.0) s += distance.data()[k] * gamma.data()[k];
  return s;
}

void check_demand_shape(const Network& net, const Matrix& gamma) {
  if (gamma.rows() != net.sources().size() || gamma.cols() != net.destinations().size())
    throw Error(ErrorCode::ShapeMismatch, "demand table must be |S| x |D|");
}

}  // namespace

double objective(std::span<const double> flows, const EdgeCosts& costs) {
  check_flows(flows, costs.size());
  double j = 0.0;
  for (std::size_t e = 0; e < flows.size(); ++e) j += costs[e].cost(flows[e]);
  return j;
}

double objective(std::span<const double> flows, const CongestionSpec& spec) {
  check_flows(flows, flows.size());
  double j = 0.0;
  for (double f : flows) j += spec.cost(f);
  return j;
}

EdgeMetric link_metric(std::span<const double> flows, const EdgeCosts& costs) {
  check_flows(flows, costs.size());
  EdgeMetric xi(flows.size());
  for (std::size_t e = 0; e < flows.size(); ++e) xi[e] = costs[e].marginal(flows[e]);
  return xi;
}

EdgeMetric link_metric(std::span<const double> flows, const CongestionSpec& spec) {
  check_flows(flows, flows.size());
  EdgeMetric xi(flows.size());
  for (std::size_t e = 0; e < flows.size(); ++e) xi[e] = spec.marginal(flows[e]);
  return xi;
}

std::vector<double> all_or_nothing(const Network& net, const ShortestPathTable& table, const Matrix& coupling) {
  check_demand_shape(net, coupling);
  std::vector<double> flows(net.edge_count(), 0.0);
  for (std::size_t i = 0; i < coupling.rows(); ++i) {
    for (std::size_t j = 0; j < coupling.cols(); ++j) {
      const double g = coupling(i, j);
      if (g <= 0.0) continue;
      if (!table.reachable(i, j))
        throw Error(ErrorCode::Unreachable, "no path from '" + net.label(net.sources()[i]) + "' to '" +
                                                net.label(net.destinations()[j]) + "'");
      for (int e : table.witness[i][j]) flows[static_cast<std::size_t>(e)] += g;
    }
  }
  return flows;
}

std::vector<double> all_or_nothing(const Network& net, std::span<const double> xi, const Matrix& coupling) {
  return all_or_nothing(net, shortest_distances(net, xi), coupling);
}

double relative_gap(const Network& net, const EdgeCosts& costs, std::span<const double> flows,
                    const Matrix& coupling) {
  const EdgeMetric xi = link_metric(flows, costs);
  const ShortestPathTable table = shortest_distances(net, xi);
  const double lb = coupling_cost(table.distance, coupling);
  return (dot(xi, flows) - lb) / std::max(lb, 1e-12);
}

namespace {

struct Vertex {
  std::vector<double> flows;
  Matrix coupling;
  double weight = 0.0;
};

// Linear minimization oracle: the extreme point minimizing <xi, .> and the
// corresponding lower bound sum d_xi gamma.
using Oracle = std::function<Vertex(const ShortestPathTable&)>;

EquilibriumResult frank_wolfe(const Network& net, const EdgeCosts& costs, const Oracle& oracle, double tol,
                              std::size_t max_iter) {
  if (!(tol > 0.0)) throw Error(ErrorCode::InvalidInput, "tol must be positive");
  if (costs.size() != net.edge_count()) throw Error(ErrorCode::ShapeMismatch, "one congestion cost per edge is required");
  const std::size_t E = net.edge_count();

  std::vector<double> zero(E, 0.0);
  std::vector<Vertex> active;
  active.push_back(oracle(shortest_distances(net, link_metric(zero, costs))));
  active.back().weight = 1.0;

  EquilibriumResult res;
  std::vector<double> x = active.front().flows;
  Matrix gamma = active.front().coupling;
  double J = objective(x, costs);
  std::vector<double> dir(E), trial(E);

  auto phi_prime = [&](double a) {
    double s = 0.0;
    for (std::size_t e = 0; e < E; ++e) s += costs[e].marginal(std::max(0.0, x[e] + a * dir[e])) * dir[e];
    return s;
  };

  for (std::size_t it = 0;; ++it) {
    const EdgeMetric xi = link_metric(x, costs);
    const ShortestPathTable table = shortest_distances(net, xi);
    Vertex s = oracle(table);
    const double primal = dot(xi, x);
    const double lb = dot(xi, s.flows);
    const double gap = (primal - lb) / std::max(lb, 1e-12);
    res.gap_history.push_back(gap);
    res.relative_gap = gap;
    res.iterations = it;
    if (gap <= tol) {
      res.status = SolveStatus::Converged;
      break;
    }
    if (it >= max_iter) {
      res.status = SolveStatus::MaxIterations;
      break;
    }

    // Away vertex: the active extreme point with the largest linear cost.
    std::size_t away = 0;
    double away_val = -kInfinity;
    for (std::size_t k = 0; k < active.size(); ++k) {
      const double v = dot(xi, active[k].flows);
      if (v > away_val) {
        away_val = v;
        away = k;
      }
    }
    const double fw_gap = primal - lb;
    const double away_gap = away_val - primal;
    const bool fw_step = fw_gap >= away_gap || active.size() == 1;
    double a_max;
    if (fw_step) {
      for (std::size_t e = 0; e < E; ++e) dir[e] = s.flows[e] - x[e];
      a_max = 1.0;
    } else {
      for (std::size_t e = 0; e < E; ++e) dir[e] = x[e] - active[away].flows[e];
      const double w = active[away].weight;
      a_max = w / (1.0 - w);
    }

    // Exact line search: bisection on the derivative of the convex 1-D restriction.
    double a;
    if (phi_prime(a_max) <= 0.0) {
      a = a_max;
    } else {
      double lo = 0.0, hi = a_max;
      for (int k = 0; k < 60; ++k) {
        const double mid = 0.5 * (lo + hi);
        if (phi_prime(mid) > 0.0) hi = mid; else lo = mid;
      }
      a = lo;
    }

    if (fw_step) {
      if (a >= 1.0) {
        active.clear();
        s.weight = 1.0;
        active.push_back(std::move(s));
      } else {
        for (auto& v : active) v.weight *= (1.0 - a);
        auto same = std::find_if(active.begin(), active.end(), [&](const Vertex& v) {
          return v.flows == s.flows && v.coupling == s.coupling;
        });
        if (same != active.end()) {
          same->weight += a;
        } else if (a > 0.0) {
          s.weight = a;
          active.push_back(std::move(s));
        }
      }
    } else {
      for (auto& v : active) v.weight *= (1.0 + a);
      active[away].weight -= a;
      if (a >= a_max || active[away].weight <= 0.0) active.erase(active.begin() + static_cast<std::ptrdiff_t>(away));
    }
    double wsum = 0.0;
    for (const auto& v : active) wsum += v.weight;

    std::fill(trial.begin(), trial.end(), 0.0);
    Matrix g(gamma.rows(), gamma.cols());
    for (const auto& v : active) {
      const double w = v.weight / wsum;
      for (std::size_t e = 0; e < E; ++e) trial[e] += w * v.flows[e];
      for (std::size_t k = 0; k < g.data().size(); ++k) g.data()[k] += w * v.coupling.data()[k];
    }
    x = trial;
    gamma = std::move(g);
    J = objective(x, costs);
    res.objective_history.push_back(J);
  }

  res.flows = x;
  res.coupling = gamma;
  res.xi = link_metric(x, costs);
  res.objective = J;
  return res;
}

bool zero_demand(const Matrix& gamma) {
  return std::all_of(gamma.data().begin(), gamma.data().end(), [](double g) { return g == 0.0; });
}

EquilibriumResult zero_result(const Network& net, const EdgeCosts& costs, const Matrix& gamma) {
  EquilibriumResult r;
  r.flows.assign(net.edge_count(), 0.0);
  r.coupling = gamma;
  r.xi = link_metric(r.flows, costs);
  return r;
}

}  // namespace

EquilibriumResult solve_fixed_demand(const Network& net, const EdgeCosts& costs, const Matrix& gamma, double tol,
                                     std::size_t max_iter) {
  validate_network(net);
  check_demand_shape(net, gamma);
  for (double g : gamma.data())
    if (!(g >= 0.0) || !std::isfinite(g)) throw Error(ErrorCode::InvalidInput, "demand entries must be finite and >= 0");
  if (zero_demand(gamma)) return zero_result(net, costs, gamma);
  Oracle oracle = [&](const ShortestPathTable& table) {
    return Vertex{all_or_nothing(net, table, gamma), gamma, 0.0};
  };
  return frank_wolfe(net, costs, oracle, tol, max_iter);
}

namespace {

// Shortest-distance matrix with unreachable pairs priced out of any optimal plan.
Matrix finite_distances(const Matrix& d, double total_mass) {
  double maxd = 0.0;
  for (double x : d.data())
    if (x < kInfinity) maxd = std::max(maxd, x);
  Matrix out = d;
  const double big = (maxd + 1.0) * (1.0 + total_mass) * 1e3;
  for (double& x : out.data())
    if (!(x < kInfinity)) x = big;
  return out;
}

}  // namespace

EquilibriumResult solve_variable_demand(const Network& net, const EdgeCosts& costs, std::span<const double> mu,
                                        std::span<const double> nu, double tol, std::size_t max_iter) {
  validate_network(net);
  const DemandSpec spec = DemandSpec::marginals({mu.begin(), mu.end()}, {nu.begin(), nu.end()});
  if (spec.mu.size() != net.sources().size() || spec.nu.size() != net.destinations().size())
    throw Error(ErrorCode::ShapeMismatch, "mu must match |S| and nu must match |D|");
  const double mass = std::accumulate(spec.mu.begin(), spec.mu.end(), 0.0);
  if (mass == 0.0) return zero_result(net, costs, Matrix(mu.size(), nu.size()));

  Oracle oracle = [&](const ShortestPathTable& table) {
    const TransportResult ot = solve_discrete_ot(spec.mu, spec.nu, finite_distances(table.distance, mass));
    return Vertex{all_or_nothing(net, table, ot.plan), ot.plan, 0.0};
  };
  return frank_wolfe(net, costs, oracle, tol, max_iter);
}

EquilibriumResult solve(const Network& net, const EdgeCosts& costs, const DemandSpec& demand, double tol,
                        std::size_t max_iter) {
  if (demand.kind == DemandSpec::Kind::Fixed) return solve_fixed_demand(net, costs, demand.gamma, tol, max_iter);
  return solve_variable_demand(net, costs, demand.mu, demand.nu, tol, max_iter);
}

namespace {

// Shortest path from s to d over edges with positive residual flow; ties go
// to the lower edge id. Empty when no residual path exists.
std::vector<int> residual_path(const Network& net, std::span<const double> residual, std::span<const double> xi,
                               int s, int d) {
  std::vector<double> dist(net.node_count(), kInfinity);
  std::vector<int> via(net.node_count(), -1);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  dist[static_cast<std::size_t>(s)] = 0.0;
  heap.emplace(0.0, s);
  while (!heap.empty()) {
    const auto [du, u] = heap.top();
    heap.pop();
    if (du > dist[static_cast<std::size_t>(u)]) continue;
    for (int e : net.out_edges(u)) {
      if (!(residual[static_cast<std::size_t>(e)] > 0.0)) continue;
      const int v = net.edge(e).head;
      const double nd = du + xi[static_cast<std::size_t>(e)];
      if (nd < dist[static_cast<std::size_t>(v)]) {
        dist[static_cast<std::size_t>(v)] = nd;
        via[static_cast<std::size_t>(v)] = e;
        heap.emplace(nd, v);
      }
    }
  }
  if (dist[static_cast<std::size_t>(d)] == kInfinity) return {};
  std::vector<int> path;
  for (int v = d; v != s;) {
    const int e = via[static_cast<std::size_t>(v)];
    path.push_back(e);
    v = net.edge(e).tail;
  }
  std::reverse(path.begin(), path.end());
  return path;
}

// One peeling pass in the given pair order; false when some pair gets stuck.
bool peel(const Network& net, std::span<const double> flows, const Matrix& coupling, std::span<const double> xi,
          const std::vector<std::pair<std::size_t, std::size_t>>& order, std::vector<PathFlow>& out) {
  std::vector<double> residual(flows.begin(), flows.end());
  Matrix demand = coupling;
  out.clear();
  const double scale = std::max(1.0, coupling.sum());
  for (auto [i, j] : order) {
    const int s = net.sources()[i];
    const int d = net.destinations()[j];
    double& left = demand(i, j);
    if (s == d) {
      if (left > 0.0) out.push_back({{s, d, {}}, left});
      left = 0.0;
      continue;
    }
    while (left > 1e-14 * scale) {
      std::vector<int> path = residual_path(net, residual, xi, s, d);
      if (path.empty()) break;
      double amount = left;
      for (int e : path) amount = std::min(amount, residual[static_cast<std::size_t>(e)]);
      for (int e : path) {
        double& r = residual[static_cast<std::size_t>(e)];
        r = r == amount ? 0.0 : r - amount;
      }
      left = left == amount ? 0.0 : left - amount;
      auto same = std::find_if(out.begin(), out.end(), [&](const PathFlow& pf) {
        return pf.path.source == s && pf.path.destination == d && pf.path.edges == path;
      });
      if (same != out.end()) same->flow += amount;
      else out.push_back({{s, d, std::move(path)}, amount});
    }
    if (left > 1e-6) return false;
  }
  for (double r : residual)
    if (r > 1e-6) return false;
  return true;
}

}  // namespace

std::vector<PathFlow> decompose_flows(const Network& net, std::span<const double> flows, const Matrix& coupling,
                                      std::span<const double> xi) {
  check_flows(flows, net.edge_count());
  check_demand_shape(net, coupling);
  std::vector<std::pair<std::size_t, std::size_t>> order;
  for (std::size_t i = 0; i < coupling.rows(); ++i)
    for (std::size_t j = 0; j < coupling.cols(); ++j)
      if (coupling(i, j) > 0.0) order.emplace_back(i, j);

  // Aggregate link flows do not say which pair uses which edge, so a greedy
  // pass can strand demand; other pair orders are tried before giving up.
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> orders{order};
  orders.emplace_back(order.rbegin(), order.rend());
  auto by_demand = order;
  std::stable_sort(by_demand.begin(), by_demand.end(),
                   [&](auto a, auto b) { return coupling(a.first, a.second) > coupling(b.first, b.second); });
  orders.push_back(by_demand);
  auto by_length = order;
  std::stable_sort(by_length.begin(), by_length.end(), [&](auto a, auto b) {
    return residual_path(net, flows, xi, net.sources()[a.first], net.destinations()[a.second]).size() <
           residual_path(net, flows, xi, net.sources()[b.first], net.destinations()[b.second]).size();
  });
  orders.push_back(by_length);
  if (order.size() <= 6) {
    auto perm = order;
    std::sort(perm.begin(), perm.end());
    do orders.push_back(perm);
    while (std::next_permutation(perm.begin(), perm.end()));
  }

  std::vector<PathFlow> out;
  for (const auto& o : orders)
    if (peel(net, flows, coupling, xi, o, out)) return out;
  throw Error(ErrorCode::DecompositionFailure, "link flows do not decompose into paths serving the coupling");
}

WardropReport verify_wardrop(const Network& net, const EquilibriumResult& result, std::size_t path_cap) {
  validate_network(net);
  enumerate_paths(net, 0, path_cap);
  WardropReport rep;
  rep.paths = decompose_flows(net, result.flows, result.coupling, result.xi);
  const ShortestPathTable table = shortest_distances(net, result.xi);
  auto index_of = [](const std::vector<int>& v, int x) {
    return static_cast<std::size_t>(std::find(v.begin(), v.end(), x) - v.begin());
  };
  for (const auto& pf : rep.paths) {
    if (pf.flow <= 1e-8) continue;
    const double d = table.distance(index_of(net.sources(), pf.path.source),
                                    index_of(net.destinations(), pf.path.destination));
    const double excess = (path_length(pf.path.edges, result.xi) - d) / std::max(d, 1e-12);
    if (excess > rep.max_excess || rep.worst_source < 0) {
      rep.max_excess = std::max(rep.max_excess, excess);
      rep.worst_source = pf.path.source;
      rep.worst_destination = pf.path.destination;
    }
  }
  return rep;
}

namespace {

// Path-flow formulation of the fixed-demand problem for the oracle.
struct PathProblem {
  const Network& net;
  const EdgeCosts& costs;
  std::vector<std::vector<std::size_t>> groups;  // path indices per served pair
  std::vector<double> demand;                    // per group
  PathSet paths;

  std::vector<double> link_flows(std::span<const double> q) const {
    std::vector<double> f(net.edge_count(), 0.0);
    for (std::size_t k = 0; k < paths.size(); ++k)
      for (int e : paths[k].edges) f[static_cast<std::size_t>(e)] += q[k];
    return f;
  }
  double value(std::span<const double> q) const {
    const auto f = link_flows(q);
    double j = 0.0;
    for (std::size_t e = 0; e < f.size(); ++e) j += costs[e].cost(f[e]);
    return j;
  }
};

PathProblem make_problem(const Network& net, const EdgeCosts& costs, const PathSet& all, const Matrix& gamma) {
  PathProblem pp{net, costs, {}, {}, {}};
  for (std::size_t i = 0; i < gamma.rows(); ++i) {
    for (std::size_t j = 0; j < gamma.cols(); ++j) {
      if (gamma(i, j) <= 0.0) continue;
      const int s = net.sources()[i];
      const int d = net.destinations()[j];
      std::vector<std::size_t> group;
      for (const auto& p : all) {
        if (p.source != s || p.destination != d) continue;
        group.push_back(pp.paths.size());
        pp.paths.push_back(p);
      }
      if (group.empty())
        throw Error(ErrorCode::Unreachable, "no path from '" + net.label(s) + "' to '" + net.label(d) + "'");
      pp.groups.push_back(std::move(group));
      pp.demand.push_back(gamma(i, j));
    }
  }
  return pp;
}

// Euclidean projection of v onto {x >= 0, sum x = total}.
void project_simplex(std::span<double> v, double total) {
  std::vector<double> u(v.begin(), v.end());
  std::sort(u.begin(), u.end(), std::greater<>());
  double cum = 0.0, theta = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    cum += u[k];
    const double t = (cum - total) / static_cast<double>(k + 1);
    if (k + 1 == u.size() || u[k + 1] <= t) {
      theta = t;
      break;
    }
  }
  for (double& x : v) x = std::max(0.0, x - theta);
}

template <class F>
double golden_min(F f, double lo, double hi, std::size_t steps, double* arg) {
  constexpr double r = 0.6180339887498949;
  if (hi <= lo) {
    *arg = lo;
    return f(lo);
  }
  double a = lo, b = hi;
  double c = b - r * (b - a), d = a + r * (b - a);
  double fc = f(c), fd = f(d);
  for (std::size_t k = 0; k < steps; ++k) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - r * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + r * (b - a);
      fd = f(d);
    }
  }
  // Endpoints matter for functions minimized on the boundary.
  double best = fc, x = c;
  if (fd < best) best = fd, x = d;
  const double fl = f(lo), fh = f(hi);
  if (fl <= best) best = fl, x = lo;
  if (fh < best) best = fh, x = hi;
  *arg = x;
  return best;
}

std::vector<double> nested_search(const PathProblem& pp, std::size_t steps) {
  // Free coordinates: all but the last path of every group.
  std::vector<std::pair<std::size_t, std::size_t>> free;  // (group, path index)
  for (std::size_t g = 0; g < pp.groups.size(); ++g)
    for (std::size_t k = 0; k + 1 < pp.groups[g].size(); ++k) free.emplace_back(g, pp.groups[g][k]);

  std::vector<double> q(pp.paths.size(), 0.0);
  auto complete = [&]() {
    for (std::size_t g = 0; g < pp.groups.size(); ++g) {
      double used = 0.0;
      for (std::size_t k = 0; k + 1 < pp.groups[g].size(); ++k) used += q[pp.groups[g][k]];
      q[pp.groups[g].back()] = std::max(0.0, pp.demand[g] - used);
    }
  };
  std::function<double(std::size_t)> level = [&](std::size_t depth) -> double {
    if (depth == free.size()) {
      complete();
      return pp.value(q);
    }
    const auto [g, idx] = free[depth];
    double room = pp.demand[g];
    for (std::size_t k = 0; pp.groups[g][k] != idx; ++k) room -= q[pp.groups[g][k]];
    double arg;
    golden_min(
        [&](double t) {
          q[idx] = t;
          return level(depth + 1);
        },
        0.0, std::max(0.0, room), steps, &arg);
    q[idx] = arg;
    return level(depth + 1);
  };
  level(0);
  complete();
  return q;
}

std::vector<double> projected_gradient(const PathProblem& pp) {
  const std::size_t n = pp.paths.size();
  std::vector<double> q(n, 0.0);
  for (std::size_t g = 0; g < pp.groups.size(); ++g)
    for (std::size_t k : pp.groups[g]) q[k] = pp.demand[g] / static_cast<double>(pp.groups[g].size());

  auto gradient = [&](std::span<const double> at, std::vector<double>& grad) {
    const auto f = pp.link_flows(at);
    grad.assign(n, 0.0);
    for (std::size_t k = 0; k < n; ++k)
      for (int e : pp.paths[k].edges) grad[k] += pp.costs[static_cast<std::size_t>(e)].marginal(f[static_cast<std::size_t>(e)]);
  };
  auto project = [&](std::vector<double>& v) {
    for (std::size_t g = 0; g < pp.groups.size(); ++g) {
      std::vector<double> part;
      for (std::size_t k : pp.groups[g]) part.push_back(v[k]);
      project_simplex(part, pp.demand[g]);
      for (std::size_t t = 0; t < part.size(); ++t) v[pp.groups[g][t]] = part[t];
    }
  };
  // Own certificate: sum q c - sum demand * min c over the group.
  auto gap = [&](std::span<const double> at, const std::vector<double>& grad) {
    double gsum = 0.0;
    for (std::size_t g = 0; g < pp.groups.size(); ++g) {
      double cmin = kInfinity;
      for (std::size_t k : pp.groups[g]) cmin = std::min(cmin, grad[k]);
      for (std::size_t k : pp.groups[g]) gsum += at[k] * (grad[k] - cmin);
    }
    return gsum;
  };

  // Accelerated projected gradient with backtracking and restarts.
  std::vector<double> y = q, grad, next(n), best = q;
  double L = 1.0, t = 1.0;
  double fbest = pp.value(q);
  for (int it = 0; it < 200000; ++it) {
    gradient(y, grad);
    const double fy = pp.value(y);
    double fn;
    while (true) {
      for (std::size_t k = 0; k < n; ++k) next[k] = y[k] - grad[k] / L;
      project(next);
      double lin = 0.0, quad = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        const double d = next[k] - y[k];
        lin += grad[k] * d;
        quad += d * d;
      }
      fn = pp.value(next);
      if (fn <= fy + lin + 0.5 * L * quad + 1e-15 * std::max(1.0, std::abs(fy))) break;
      L *= 2.0;
    }
    const double fq = pp.value(q);
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    if (fn > fq) {
      // Restart momentum when the objective goes up.
      y = q;
      t = 1.0;
      continue;
    }
    for (std::size_t k = 0; k < n; ++k) y[k] = next[k] + ((t - 1.0) / t_next) * (next[k] - q[k]);
    q = next;
    t = t_next;
    if (fn < fbest) {
      fbest = fn;
      best = q;
    }
    if (it % 50 == 0) {
      std::vector<double> gq;
      gradient(q, gq);
      if (gap(q, gq) <= 1e-13 * (1.0 + fn)) break;
    }
    L *= 0.9;
  }
  return best;
}

std::vector<double> solve_paths(const PathProblem& pp, std::size_t steps) {
  std::size_t free = 0;
  for (const auto& g : pp.groups) free += g.size() - 1;
  if (free <= 3) return nested_search(pp, steps);
  return projected_gradient(pp);
}

EquilibriumResult finish(const Network& net, const EdgeCosts& costs, std::vector<double> flows, Matrix gamma) {
  EquilibriumResult r;
  r.flows = std::move(flows);
  r.coupling = std::move(gamma);
  r.xi = link_metric(r.flows, costs);
  r.objective = objective(r.flows, costs);
  r.relative_gap = zero_demand(r.coupling) ? 0.0 : relative_gap(net, costs, r.flows, r.coupling);
  return r;
}

}  // namespace

EquilibriumResult brute_force_equilibrium(const Network& net, const EdgeCosts& costs, const DemandSpec& demand,
                                          std::size_t grid_steps) {
  validate_network(net);
  if (costs.size() != net.edge_count()) throw Error(ErrorCode::ShapeMismatch, "one congestion cost per edge is required");
  const PathSet all = enumerate_paths(net, 0, 50);

  auto fixed = [&](const Matrix& gamma) {
    const PathProblem pp = make_problem(net, costs, all, gamma);
    const std::vector<double> q = solve_paths(pp, grid_steps);
    return pp.link_flows(q);
  };

  if (demand.kind == DemandSpec::Kind::Fixed) {
    check_demand_shape(net, demand.gamma);
    return finish(net, costs, fixed(demand.gamma), demand.gamma);
  }

  const std::size_t m = demand.mu.size(), n = demand.nu.size();
  if (m != net.sources().size() || n != net.destinations().size())
    throw Error(ErrorCode::ShapeMismatch, "mu must match |S| and nu must match |D|");
  if ((m - 1) * (n - 1) > 2)
    throw Error(ErrorCode::Unsupported, "coupling search supports at most two free coupling entries");

  // Free entries gamma(i, k) for i < m-1, k < n-1 in row-major order; the last
  // row and column complete the marginals.
  std::vector<std::pair<std::size_t, std::size_t>> free;
  for (std::size_t i = 0; i + 1 < m; ++i)
    for (std::size_t k = 0; k + 1 < n; ++k) free.emplace_back(i, k);

  Matrix gamma(m, n);
  auto complete = [&]() {
    for (std::size_t i = 0; i + 1 < m; ++i) {
      double used = 0.0;
      for (std::size_t k = 0; k + 1 < n; ++k) used += gamma(i, k);
      gamma(i, n - 1) = std::max(0.0, demand.mu[i] - used);
    }
    for (std::size_t k = 0; k < n; ++k) {
      double used = 0.0;
      for (std::size_t i = 0; i + 1 < m; ++i) used += gamma(i, k);
      gamma(m - 1, k) = std::max(0.0, demand.nu[k] - used);
    }
  };
  auto inner = [&]() {
    complete();
    return objective(fixed(gamma), costs);
  };
  std::function<double(std::size_t)> level = [&](std::size_t depth) -> double {
    if (depth == free.size()) return inner();
    const auto [i, k] = free[depth];
    double row_left = demand.mu[i];
    for (std::size_t t = 0; t < k; ++t) row_left -= gamma(i, t);
    double col_left = demand.nu[k];
    for (std::size_t t = 0; t < i; ++t) col_left -= gamma(t, k);
    double later_cols = 0.0;
    for (std::size_t t = k + 1; t < n; ++t) {
      double c = demand.nu[t];
      for (std::size_t r = 0; r < i; ++r) c -= gamma(r, t);
      later_cols += c;
    }
    const double lo = std::max(0.0, row_left - later_cols);
    const double hi = std::max(lo, std::min(row_left, col_left));
    double arg;
    golden_min(
        [&](double v) {
          gamma(i, k) = v;
          return level(depth + 1);
        },
        lo, hi, grid_steps, &arg);
    gamma(i, k) = arg;
    return level(depth + 1);
  };
  level(0);
  complete();
  return finish(net, costs, fixed(gamma), gamma);
}

}  // namespace cot
