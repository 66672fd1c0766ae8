#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cot/congestion.hpp"
#include "cot/error.hpp"
#include "cot/matrix.hpp"
#include "cot/network.hpp"

namespace cot {

/// One congestion cost per edge, indexed by edge id.
using EdgeCosts = std::vector<CongestionSpec>;

EdgeCosts uniform_costs(const Network& net, const CongestionSpec& spec);

/// Trip demand: a fixed S x D table, or marginals over S and D with the
/// coupling left free.
struct DemandSpec {
  enum class Kind { Fixed, Marginals };

  static DemandSpec fixed(Matrix gamma);
  static DemandSpec marginals(std::vector<double> mu, std::vector<double> nu);

  Kind kind = Kind::Fixed;
  Matrix gamma;
  std::vector<double> mu;
  std::vector<double> nu;
};

struct EquilibriumResult {
  std::vector<double> flows;  // per edge
  Matrix coupling;            // realized S x D demand
  EdgeMetric xi;              // g(flows)
  double objective = 0.0;
  double relative_gap = 0.0;
  std::size_t iterations = 0;
  SolveStatus status = SolveStatus::Converged;
  std::vector<double> objective_history;  // J after each iteration
  std::vector<double> gap_history;        // relative gap seen at each iterate
};

/// sum_e H_e(i_e). Throws NegativeFlow.
double objective(std::span<const double> flows, const EdgeCosts& costs);
double objective(std::span<const double> flows, const CongestionSpec& spec);

/// xi_e = g_e(i_e). Throws NegativeFlow.
EdgeMetric link_metric(std::span<const double> flows, const EdgeCosts& costs);
EdgeMetric link_metric(std::span<const double> flows, const CongestionSpec& spec);

/// Routes every gamma(s, d) along the witness shortest path under xi.
/// Throws Unreachable for positive demand between disconnected pairs.
std::vector<double> all_or_nothing(const Network& net, std::span<const double> xi, const Matrix& coupling);
/// Same, reusing a precomputed table.
std::vector<double> all_or_nothing(const Network& net, const ShortestPathTable& table, const Matrix& coupling);

/// Frank-Wolfe with all-or-nothing directions, away steps and exact line
/// search. Stops once the relative gap at the current flows is <= tol; on
/// running out of iterations the best iterate is returned with status
/// MaxIterations.
EquilibriumResult solve_fixed_demand(const Network& net, const EdgeCosts& costs, const Matrix& gamma, double tol,
                                     std::size_t max_iter);

/// Same with the coupling free in Pi(mu, nu); the linear subproblem is a
/// discrete transport problem with cost d_xi. Throws MassMismatch.
EquilibriumResult solve_variable_demand(const Network& net, const EdgeCosts& costs, std::span<const double> mu,
                                        std::span<const double> nu, double tol, std::size_t max_iter);

EquilibriumResult solve(const Network& net, const EdgeCosts& costs, const DemandSpec& demand, double tol,
                        std::size_t max_iter);

/// Relative gap [sum xi i - sum d_xi gamma] / max(sum d_xi gamma, 1e-12).
double relative_gap(const Network& net, const EdgeCosts& costs, std::span<const double> flows,
                    const Matrix& coupling);

struct PathFlow {
  Path path;
  double flow = 0.0;
};

/// Greedy decomposition of link flows into path flows consistent with the
/// coupling: route min(residual demand, bottleneck) along the shortest
/// residual path until every pair is served. Throws DecompositionFailure when
/// more than 1e-6 of flow or demand cannot be placed.
std::vector<PathFlow> decompose_flows(const Network& net, std::span<const double> flows, const Matrix& coupling,
                                      std::span<const double> xi);

struct WardropReport {
  double max_excess = 0.0;  // relative excess cost of the worst used path
  int worst_source = -1;    // node ids; -1 when no path is used
  int worst_destination = -1;
  std::vector<PathFlow> paths;
};

/// Checks the equilibrium condition on a path decomposition of `result`.
/// Throws PathExplosion when the network has more than `path_cap` simple paths.
WardropReport verify_wardrop(const Network& net, const EquilibriumResult& result, std::size_t path_cap = 100000);

/// Independent oracle over path flows: projected gradient on the product of
/// simplices, or nested golden-section search when at most three coordinates
/// are free. Marginals demand adds an outer golden-section search over the
/// coupling (at most two free coupling entries). Throws PathExplosion past 50
/// simple paths.
EquilibriumResult brute_force_equilibrium(const Network& net, const EdgeCosts& costs, const DemandSpec& demand,
                                          std::size_t grid_steps = 80);

}  // namespace cot
