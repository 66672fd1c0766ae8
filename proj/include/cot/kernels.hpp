#pragma once

// Grid kernels shared by the beckmann and trajectory code. Each kernel has a
// plain serial reference and an OpenMP version; the parallel versions give
// results that do not depend on the number of threads.

#include <cstddef>
#include <span>
#include <vector>

#include "cot/congestion.hpp"
#include "cot/grid.hpp"

namespace cot {

enum class Exec { Serial, Parallel };

namespace kernels {

/// div(i, j) = [vx(i+1, j) - vx(i, j) + vy(i, j+1) - vy(i, j)] / h.
void divergence(const VectorField& v, ScalarField& out, Exec exec = Exec::Parallel);

/// Graph Laplacian of the cell adjacency (interior faces as edges):
/// out_c = sum over neighbours n of (u_c - u_n). Positive semidefinite.
void neumann_laplacian(const Grid& g, std::span<const double> u, std::span<double> out, Exec exec = Exec::Parallel);

/// Radial proximal map per cell on 4-vectors: w_c = z_c * prox(|z_c|, step_c) / |z_c|
/// with prox the scalar map of H. z and w hold 4 entries per cell.
void cell_prox(const CongestionSpec& H, std::span<const double> z, std::span<const double> step, std::span<double> w,
               Exec exec = Exec::Parallel);

/// A weighted straight segment, e.g. one transported pair of a coupling.
struct Segment {
  double x0, y0, x1, y1;
  double weight;
};

/// Piece of a segment inside one cell.
struct Piece {
  std::size_t cell;
  double length;
};

/// Exact clipping of a segment against the cells it crosses, in order along
/// the segment. Pieces of zero length are dropped.
void clip_segment(const Grid& g, const Segment& s, std::vector<Piece>& out);

/// Accumulates, per cell, weight * length (into `length`, if non-null) and
/// weight * length * unit direction (into `dx` and `dy`, if non-null).
/// Values are masses, not densities. The parallel version splits the
/// segments into fixed chunks and merges them in chunk order.
void deposit_segments(const Grid& g, std::span<const Segment> segs, double* length, double* dx, double* dy,
                      Exec exec = Exec::Parallel);

}  // namespace kernels
}  // namespace cot
