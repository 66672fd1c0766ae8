#pragma once

#include <cstddef>
#include <cstdint>

#include "cot/grid.hpp"
#include "cot/kantorovich.hpp"
#include "cot/kernels.hpp"

namespace cot {

struct TrajectoryOptions {
  std::size_t n_particles = 10000;
  std::size_t n_steps = 200;
  std::uint64_t seed = 1;
  double floor_factor = 1e-6;  // density floor relative to max(mu, nu)
  Exec exec = Exec::Parallel;
};

struct TrajectoryResult {
  DiscreteMeasure endpoints{2};  // positions at t = 1, equal weights summing to mass(mu)
  DiscreteMeasure midpoints{2};  // positions at t = 1/2
  ScalarField intensity;         // sum of weight * path length per cell, divided by h^2
  std::size_t floor_hits = 0;    // velocity evaluations where the density was clamped
  std::size_t reflections = 0;   // steps that left the domain and were reflected back
};

/// Particles seeded by stratified sampling of mu follow x' = v(x) / rho_t(x)
/// with rho_t = (1 - t) mu + t nu, by classical RK4 on [0, 1]. Face fluxes
/// are interpolated bilinearly on their own staggered lattices and rho_t
/// bilinearly between cell centers; rho_t is clamped below at
/// floor_factor * max(mu, nu). Each particle draws from its own generator
/// seeded by (seed, index), and partial intensities are merged in a fixed
/// order, so the result does not depend on the thread count.
/// Throws ShapeMismatch when v, mu and nu live on different grids and
/// MassMismatch when mu and nu have different masses.
TrajectoryResult reconstruct_trajectories(const VectorField& v, const ScalarField& mu, const ScalarField& nu,
                                          const TrajectoryOptions& opt = {});

/// Cell masses of `density` summed onto a coarse grid of coarse_nx x
/// coarse_ny cells of the same domain, as point masses at coarse centers.
/// The fine sizes must be multiples of the coarse ones.
DiscreteMeasure coarsen_density(const ScalarField& density, int coarse_nx, int coarse_ny);
/// Same binning for weighted points inside the domain of `grid`.
DiscreteMeasure coarsen_points(const DiscreteMeasure& points, const Grid& grid, int coarse_nx, int coarse_ny);

}  // namespace cot
