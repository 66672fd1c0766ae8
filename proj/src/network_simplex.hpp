#pragma once

// Primal network simplex for the balanced transportation problem on the
// complete bipartite graph. Internal to the kantorovich module.
//
// Pivot rules follow the LEMON implementation: block-search pricing and the
// strongly feasible leaving-arc rule (last blocking arc on the cycle), which
// prevents cycling under degeneracy. The spanning tree is stored with parent
// pointers plus doubly linked child lists.

#include <cstddef>
#include <span>
#include <vector>

#include "cot/matrix.hpp"

namespace cot::detail {

class TransportSimplex {
 public:
  TransportSimplex(std::span<const double> supply, std::span<const double> demand, const Matrix& cost);

  /// Runs to optimality; returns the number of pivots.
  std::size_t run();

  /// Flow on real arcs.
  Matrix plan() const;
  /// Node potentials pi with reduced cost c + pi_tail - pi_head; sources are
  /// nodes [0, m), sinks [m, m + n).
  const std::vector<double>& potentials() const { return pi_; }
  double artificial_flow() const;

 private:
  enum : signed char { kTree = 0, kLower = 1 };
  static constexpr int kUp = 1;
  static constexpr int kDown = -1;

  int tail(std::size_t arc) const;
  int head(std::size_t arc) const;
  double cost(std::size_t arc) const;
  double reduced_cost(std::size_t arc) const;

  bool find_entering();
  int find_join(int a, int b);
  void pivot(std::size_t in_arc, int join);
  void detach(int child);
  void attach(int child, int parent);
  void shift_subtree(int top, double sigma);
  void recompute_potentials();

  std::size_t m_, n_;
  int root_;
  std::size_t real_arcs_;
  std::size_t arcs_;
  const Matrix& cost_;
  double art_cost_;
  double eps_;

  std::vector<char> art_up_;  // artificial arc of node u points u -> root
  std::vector<double> flow_;
  std::vector<signed char> state_;
  std::vector<double> pi_;
  std::vector<int> parent_, pred_, pred_dir_;
  std::vector<int> first_child_, next_sib_, prev_sib_;
  std::vector<unsigned> mark_;
  unsigned stamp_ = 0;

  std::size_t block_size_;
  std::size_t next_arc_ = 0;
  std::size_t in_arc_ = 0;
};

}  // namespace cot::detail
