#pragma once

#include <cstddef>
#include <vector>

#include "cot/congestion.hpp"
#include "cot/error.hpp"
#include "cot/grid.hpp"
#include "cot/kantorovich.hpp"
#include "cot/kernels.hpp"
#include "cot/matrix.hpp"

namespace cot {

/// Discrete divergence on cells. Throws ShapeMismatch when `v` lives on another grid.
ScalarField divergence(const VectorField& v, const Grid& grid);

/// h^2 * sum_c k_c H(|v|_c) with |v|_c the cell-RMS magnitude. For H = t^2/2
/// this equals h^2 * sum over interior faces of v_f^2 / 2. `k` may be empty
/// (k = 1).
double beckmann_cost(const VectorField& v, const CongestionSpec& H, const ScalarField* k = nullptr);

struct BeckmannOptions {
  double tol = 1e-8;
  std::size_t max_iter = 50000;
  double rho = 0.0;          // initial penalty; 0 picks h^2 * typical curvature
  std::size_t check_every = 10;
  Exec exec = Exec::Parallel;
  /// Starting flow; the default start is the projection of zero, which is
  /// already optimal for quadratic H.
  const VectorField* initial = nullptr;
};

struct BeckmannResult {
  VectorField v;
  double cost = 0.0;
  double dual_value = -kInfinity;  // best certified lower bound
  double gap = kInfinity;          // (cost - dual_value) / (1 + |cost|)
  double residual = 0.0;           // max |div v - (mu - nu)|
  double change = 0.0;             // last max |v_new - v_old| / max(1, |v|_inf)
  std::size_t iterations = 0;
  SolveStatus status = SolveStatus::Converged;
};

/// min h^2 sum_c k_c H(|v|_c) subject to div v = mu - nu with zero boundary
/// flux, by ADMM on the splitting w_c = A_c v. The v-step is an exact
/// projection onto the divergence constraint; the w-step is the radial
/// proximal map of H per cell. The dual certificate comes from the ADMM
/// multiplier. Stops when the relative gap and the iterate change are both
/// <= tol. Throws MassMismatch when h^2 sum mu and h^2 sum nu differ by more
/// than 1e-10 relative.
BeckmannResult solve_beckmann(const ScalarField& mu, const ScalarField& nu, const CongestionSpec& H,
                              const BeckmannOptions& opt = {});
BeckmannResult solve_beckmann(const ScalarField& mu, const ScalarField& nu, const CongestionSpec& H,
                              const ScalarField& k, const BeckmannOptions& opt = {});

struct QuadraticDual {
  ScalarField u;  // zero mean
  VectorField v;  // discrete gradient of u
  double cost = 0.0;
  double residual = 0.0;  // max |div v - (mu - nu)|
};

/// Neumann problem div grad u = mu - nu for the 5-point operator; direct
/// sparse factorization up to 128^2 cells, conjugate gradients above.
QuadraticDual solve_dual_quadratic(const ScalarField& mu, const ScalarField& nu);

/// Cell-center distances on the 8-neighbour graph with edge length equal to
/// the mean of the two cell weights times the step length. Returns one row per
/// source cell.
Matrix grid_geodesics(const ScalarField& k, const std::vector<std::size_t>& from, const std::vector<std::size_t>& to);

/// 1 / cos(pi / 8) - 1: the largest relative excess of 8-neighbour path length
/// over Euclidean length.
inline constexpr double kOctagonalDistortion = 0.082392200292393968;

struct WeightedDualityReport {
  double flow_value = 0.0;
  double geodesic_ot_value = 0.0;
  double rel_err = 0.0;
  double tolerance = 0.0;  // distortion + 2h, the documented bound on rel_err
  BeckmannResult flow;
};

/// Compares min h^2 sum k |v| under div v = mu - nu with the transport cost
/// for the 8-neighbour geodesic distance. Masses sit at cell centers.
WeightedDualityReport weighted_beckmann_duality_check(const ScalarField& k, const DiscreteMeasure& mu,
                                                      const DiscreteMeasure& nu, const BeckmannOptions& opt = {});

/// Cell masses of a measure whose points lie in the grid domain, as a density.
ScalarField density_from_points(const Grid& grid, const DiscreteMeasure& m);

/// sigma_gamma: each pair deposits gamma(x, y) times the length of the segment
/// [x, y] inside each cell, divided by h^2.
ScalarField rasterize_transport_density(const Matrix& coupling, const DiscreteMeasure& src,
                                        const DiscreteMeasure& dst, const Grid& grid, Exec exec = Exec::Parallel);

/// Co-located v_gamma per cell: the vector deposits gamma(x, y) (y - x) / |y - x|
/// times the clipped length, divided by h^2. Satisfies |q_c| <= sigma_c.
std::pair<ScalarField, ScalarField> rasterize_v_gamma_cells(const Matrix& coupling, const DiscreteMeasure& src,
                                                            const DiscreteMeasure& dst, const Grid& grid,
                                                            Exec exec = Exec::Parallel);

/// Face version of v_gamma: each interior face takes the mean of the normal
/// components of its two cells; boundary faces stay zero.
VectorField rasterize_v_gamma(const Matrix& coupling, const DiscreteMeasure& src, const DiscreteMeasure& dst,
                              const Grid& grid, Exec exec = Exec::Parallel);

}  // namespace cot
