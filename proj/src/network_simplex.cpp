#include "network_simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cot::detail {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

TransportSimplex::TransportSimplex(std::span<const double> supply, std::span<const double> demand,
                                   const Matrix& cost)
    : m_(supply.size()),
      n_(demand.size()),
      root_(static_cast<int>(supply.size() + demand.size())),
      real_arcs_(supply.size() * demand.size()),
      arcs_(supply.size() * demand.size() + supply.size() + demand.size()),
      cost_(cost) {
  double max_cost = 0.0;
  for (double c : cost.data()) max_cost = std::max(max_cost, std::abs(c));
  art_cost_ = (max_cost + 1.0) * static_cast<double>(m_ + n_);
  eps_ = 1e-13 * (max_cost + 1.0);

  const std::size_t nodes = m_ + n_ + 1;
  art_up_.assign(m_ + n_, 1);
  flow_.assign(arcs_, 0.0);
  state_.assign(arcs_, kLower);
  pi_.assign(nodes, 0.0);
  parent_.assign(nodes, -1);
  pred_.assign(nodes, -1);
  pred_dir_.assign(nodes, 0);
  first_child_.assign(nodes, -1);
  next_sib_.assign(nodes, -1);
  prev_sib_.assign(nodes, -1);
  mark_.assign(nodes, 0);

  // Initial tree: every node hangs off the root through its artificial arc.
  // Nodes with nonnegative supply point up at cost 0, demand nodes point down
  // at cost art_cost_.
  for (std::size_t u = 0; u < m_ + n_; ++u) {
    const std::size_t arc = real_arcs_ + u;
    const double b = u < m_ ? supply[u] : -demand[u - m_];
    state_[arc] = kTree;
    art_up_[u] = b >= 0.0;
    pred_dir_[u] = art_up_[u] ? kUp : kDown;
    flow_[arc] = std::abs(b);
    pi_[u] = art_up_[u] ? 0.0 : art_cost_;
    pred_[u] = static_cast<int>(arc);
    attach(static_cast<int>(u), root_);
  }

  block_size_ = std::max<std::size_t>(static_cast<std::size_t>(std::sqrt(static_cast<double>(arcs_))), 10);
}

int TransportSimplex::tail(std::size_t arc) const {
  if (arc < real_arcs_) return static_cast<int>(arc / n_);
  const std::size_t u = arc - real_arcs_;
  return art_up_[u] ? static_cast<int>(u) : root_;
}

int TransportSimplex::head(std::size_t arc) const {
  if (arc < real_arcs_) return static_cast<int>(m_ + arc % n_);
  const std::size_t u = arc - real_arcs_;
  return art_up_[u] ? root_ : static_cast<int>(u);
}

double TransportSimplex::cost(std::size_t arc) const {
  if (arc < real_arcs_) return cost_.data()[arc];
  return art_up_[arc - real_arcs_] ? 0.0 : art_cost_;
}

double TransportSimplex::reduced_cost(std::size_t arc) const {
  return cost(arc) + pi_[static_cast<std::size_t>(tail(arc))] - pi_[static_cast<std::size_t>(head(arc))];
}

void TransportSimplex::detach(int child) {
  const auto c = static_cast<std::size_t>(child);
  const int p = parent_[c];
  if (p < 0) return;
  if (prev_sib_[c] >= 0) next_sib_[static_cast<std::size_t>(prev_sib_[c])] = next_sib_[c];
  else first_child_[static_cast<std::size_t>(p)] = next_sib_[c];
  if (next_sib_[c] >= 0) prev_sib_[static_cast<std::size_t>(next_sib_[c])] = prev_sib_[c];
  parent_[c] = -1;
  next_sib_[c] = prev_sib_[c] = -1;
}

void TransportSimplex::attach(int child, int parent) {
  const auto c = static_cast<std::size_t>(child);
  const auto p = static_cast<std::size_t>(parent);
  parent_[c] = parent;
  prev_sib_[c] = -1;
  next_sib_[c] = first_child_[p];
  if (first_child_[p] >= 0) prev_sib_[static_cast<std::size_t>(first_child_[p])] = child;
  first_child_[p] = child;
}

bool TransportSimplex::find_entering() {
  double best = 0.0;
  std::size_t best_arc = arcs_;
  std::size_t count = block_size_;

  auto scan = [&](std::size_t from, std::size_t to) -> bool {
    std::size_t k = from;
    if (k < real_arcs_) {
      std::size_t i = k / n_;
      std::size_t j = k % n_;
      const double* crow = cost_.data().data() + i * n_;
      double pi_i = pi_[i];
      const std::size_t end = std::min(to, real_arcs_);
      for (; k < end; ++k) {
        if (state_[k] == kLower) {
          const double rc = crow[j] + pi_i - pi_[m_ + j];
          if (rc < best) {
            best = rc;
            best_arc = k;
          }
        }
        if (--count == 0) {
          if (best < -eps_) {
            next_arc_ = k + 1;
            return true;
          }
          count = block_size_;
        }
        if (++j == n_) {
          j = 0;
          ++i;
          if (i < m_) {
            crow += n_;
            pi_i = pi_[i];
          }
        }
      }
    }
    for (; k < to; ++k) {
      if (state_[k] == kLower) {
        const double rc = reduced_cost(k);
        if (rc < best) {
          best = rc;
          best_arc = k;
        }
      }
      if (--count == 0) {
        if (best < -eps_) {
          next_arc_ = k + 1;
          return true;
        }
        count = block_size_;
      }
    }
    return false;
  };

  const std::size_t start = next_arc_ >= arcs_ ? 0 : next_arc_;
  if (!scan(start, arcs_) && !scan(0, start)) {
    if (!(best < -eps_)) return false;
    next_arc_ = best_arc + 1;
  }
  in_arc_ = best_arc;
  return true;
}

int TransportSimplex::find_join(int a, int b) {
  ++stamp_;
  for (int u = a; u >= 0; u = parent_[static_cast<std::size_t>(u)]) mark_[static_cast<std::size_t>(u)] = stamp_;
  int u = b;
  while (mark_[static_cast<std::size_t>(u)] != stamp_) u = parent_[static_cast<std::size_t>(u)];
  return u;
}

void TransportSimplex::shift_subtree(int top, double sigma) {
  pi_[static_cast<std::size_t>(top)] += sigma;
  int node = first_child_[static_cast<std::size_t>(top)];
  while (node >= 0) {
    const auto nu = static_cast<std::size_t>(node);
    pi_[nu] += sigma;
    if (first_child_[nu] >= 0) {
      node = first_child_[nu];
      continue;
    }
    while (node != top && next_sib_[static_cast<std::size_t>(node)] < 0)
      node = parent_[static_cast<std::size_t>(node)];
    if (node == top) break;
    node = next_sib_[static_cast<std::size_t>(node)];
  }
}

void TransportSimplex::recompute_potentials() {
  pi_[static_cast<std::size_t>(root_)] = 0.0;
  int node = first_child_[static_cast<std::size_t>(root_)];
  while (node >= 0) {
    const auto nu = static_cast<std::size_t>(node);
    const auto arc = static_cast<std::size_t>(pred_[nu]);
    const double pp = pi_[static_cast<std::size_t>(parent_[nu])];
    pi_[nu] = pred_dir_[nu] == kUp ? pp - cost(arc) : pp + cost(arc);
    if (first_child_[nu] >= 0) {
      node = first_child_[nu];
      continue;
    }
    while (node != root_ && next_sib_[static_cast<std::size_t>(node)] < 0)
      node = parent_[static_cast<std::size_t>(node)];
    if (node == root_) break;
    node = next_sib_[static_cast<std::size_t>(node)];
  }
}

void TransportSimplex::pivot(std::size_t in_arc, int join) {
  const int first = tail(in_arc);
  const int second = head(in_arc);

  // Leaving arc: the last blocking arc met when walking the cycle in its
  // orientation starting from the join node.
  double delta = kInf;
  int u_out = -1;
  int result = 0;
  for (int u = first; u != join; u = parent_[static_cast<std::size_t>(u)]) {
    const auto uu = static_cast<std::size_t>(u);
    const double d = pred_dir_[uu] == kUp ? flow_[static_cast<std::size_t>(pred_[uu])] : kInf;
    if (d < delta) {
      delta = d;
      u_out = u;
      result = 1;
    }
  }
  for (int u = second; u != join; u = parent_[static_cast<std::size_t>(u)]) {
    const auto uu = static_cast<std::size_t>(u);
    const double d = pred_dir_[uu] == kDown ? flow_[static_cast<std::size_t>(pred_[uu])] : kInf;
    if (d <= delta) {
      delta = d;
      u_out = u;
      result = 2;
    }
  }

  if (delta > 0.0) {
    flow_[in_arc] += delta;
    for (int u = first; u != join; u = parent_[static_cast<std::size_t>(u)]) {
      const auto uu = static_cast<std::size_t>(u);
      double& f = flow_[static_cast<std::size_t>(pred_[uu])];
      f = std::max(0.0, f - pred_dir_[uu] * delta);
    }
    for (int u = second; u != join; u = parent_[static_cast<std::size_t>(u)]) {
      const auto uu = static_cast<std::size_t>(u);
      double& f = flow_[static_cast<std::size_t>(pred_[uu])];
      f = std::max(0.0, f + pred_dir_[uu] * delta);
    }
  }
  const auto leaving = static_cast<std::size_t>(pred_[static_cast<std::size_t>(u_out)]);
  flow_[leaving] = 0.0;
  state_[leaving] = kLower;
  state_[in_arc] = kTree;

  const int u_in = result == 1 ? first : second;
  const int v_in = result == 1 ? second : first;
  const int dir_in = u_in == first ? kUp : kDown;

  // Re-hang the subtree of u_out below v_in, reversing the path u_in..u_out.
  int new_parent = v_in;
  int carry_arc = static_cast<int>(in_arc);
  int carry_dir = dir_in;
  int x = u_in;
  while (true) {
    const auto xu = static_cast<std::size_t>(x);
    const int next = parent_[xu];
    const int old_arc = pred_[xu];
    const int old_dir = pred_dir_[xu];
    detach(x);
    attach(x, new_parent);
    pred_[xu] = carry_arc;
    pred_dir_[xu] = carry_dir;
    if (x == u_out) break;
    new_parent = x;
    carry_arc = old_arc;
    carry_dir = -old_dir;
    x = next;
  }

  const double sigma = pi_[static_cast<std::size_t>(v_in)] - pi_[static_cast<std::size_t>(u_in)] -
                       dir_in * cost(in_arc);
  shift_subtree(u_in, sigma);
}

std::size_t TransportSimplex::run() {
  std::size_t pivots = 0;
  const std::size_t refresh = std::max<std::size_t>(m_ + n_, 64);
  while (true) {
    while (find_entering()) {
      pivot(in_arc_, find_join(tail(in_arc_), head(in_arc_)));
      if (++pivots % refresh == 0) recompute_potentials();
    }
    // Confirm optimality with drift-free potentials.
    recompute_potentials();
    next_arc_ = 0;
    if (!find_entering()) break;
    pivot(in_arc_, find_join(tail(in_arc_), head(in_arc_)));
    ++pivots;
  }
  return pivots;
}

Matrix TransportSimplex::plan() const {
  Matrix out(m_, n_);
  std::copy(flow_.begin(), flow_.begin() + static_cast<std::ptrdiff_t>(real_arcs_), out.data().begin());
  return out;
}

double TransportSimplex::artificial_flow() const {
  double total = 0.0;
  for (std::size_t a = real_arcs_; a < arcs_; ++a) total += flow_[a];
  return total;
}

}  // namespace cot::detail
