#include "cot/kernels.hpp"

#include <algorithm>
#include <cmath>

#include "cot/error.hpp"
#include "cot/parallel.hpp"

namespace cot::kernels {

void divergence(const VectorField& v, ScalarField& out, Exec exec) {
  const Grid& g = v.grid();
  if (!(out.grid() == g)) out = ScalarField(g);
  const double inv_h = 1.0 / g.h;
  const int nx = g.nx, ny = g.ny;
  if (exec == Exec::Serial) {
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i)
        out(i, j) = (v.vx(i + 1, j) - v.vx(i, j) + v.vy(i, j + 1) - v.vy(i, j)) * inv_h;
    return;
  }
#pragma omp parallel for schedule(static)
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i)
      out(i, j) = (v.vx(i + 1, j) - v.vx(i, j) + v.vy(i, j + 1) - v.vy(i, j)) * inv_h;
}

namespace {

inline double laplacian_at(const Grid& g, std::span<const double> u, int i, int j) {
  const std::size_t c = g.index(i, j);
  double s = 0.0;
  if (i > 0) s += u[c] - u[c - 1];
  if (i + 1 < g.nx) s += u[c] - u[c + 1];
  if (j > 0) s += u[c] - u[c - static_cast<std::size_t>(g.nx)];
  if (j + 1 < g.ny) s += u[c] - u[c + static_cast<std::size_t>(g.nx)];
  return s;
}

}  // namespace

void neumann_laplacian(const Grid& g, std::span<const double> u, std::span<double> out, Exec exec) {
  const int nx = g.nx, ny = g.ny;
  if (exec == Exec::Serial) {
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) out[g.index(i, j)] = laplacian_at(g, u, i, j);
    return;
  }
#pragma omp parallel for schedule(static)
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) out[g.index(i, j)] = laplacian_at(g, u, i, j);
}

namespace {

inline void prox_one(const CongestionSpec& H, const double* z, double step, double* w) {
  const double n = std::sqrt(z[0] * z[0] + z[1] * z[1] + z[2] * z[2] + z[3] * z[3]);
  if (n == 0.0) {
    w[0] = w[1] = w[2] = w[3] = 0.0;
    return;
  }
  const double f = H.prox(n, step) / n;
  for (int k = 0; k < 4; ++k) w[k] = f * z[k];
}

}  // namespace

void cell_prox(const CongestionSpec& H, std::span<const double> z, std::span<const double> step, std::span<double> w,
               Exec exec) {
  const std::ptrdiff_t cells = static_cast<std::ptrdiff_t>(step.size());
  if (exec == Exec::Serial) {
    for (std::ptrdiff_t c = 0; c < cells; ++c)
      prox_one(H, z.data() + 4 * c, step[static_cast<std::size_t>(c)], w.data() + 4 * c);
    return;
  }
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t c = 0; c < cells; ++c)
    prox_one(H, z.data() + 4 * c, step[static_cast<std::size_t>(c)], w.data() + 4 * c);
}

void clip_segment(const Grid& g, const Segment& s, std::vector<Piece>& out) {
  out.clear();
  const double dx = s.x1 - s.x0, dy = s.y1 - s.y0;
  const double len = std::hypot(dx, dy);
  if (len == 0.0) return;

  // Parameters where the segment crosses grid lines, then one piece per gap.
  std::vector<double> ts{0.0, 1.0};
  auto crossings = [&](double a0, double d, int n) {
    if (d == 0.0) return;
    const double lo = std::min(a0, a0 + d), hi = std::max(a0, a0 + d);
    const int k0 = std::max(0, static_cast<int>(std::ceil(lo / g.h)));
    const int k1 = std::min(n, static_cast<int>(std::floor(hi / g.h)));
    for (int k = k0; k <= k1; ++k) {
      const double t = (k * g.h - a0) / d;
      if (t > 0.0 && t < 1.0) ts.push_back(t);
    }
  };
  crossings(s.x0, dx, g.nx);
  crossings(s.y0, dy, g.ny);
  std::sort(ts.begin(), ts.end());

  for (std::size_t k = 0; k + 1 < ts.size(); ++k) {
    const double dt = ts[k + 1] - ts[k];
    if (dt <= 0.0) continue;
    const double tm = 0.5 * (ts[k] + ts[k + 1]);
    const auto [i, j] = g.locate(s.x0 + tm * dx, s.y0 + tm * dy);
    const std::size_t cell = g.index(i, j);
    if (!out.empty() && out.back().cell == cell) out.back().length += dt * len;
    else out.push_back({cell, dt * len});
  }
}

namespace {

void deposit_range(const Grid& g, std::span<const Segment> segs, std::size_t begin, std::size_t end, double* length,
                   double* dx, double* dy, std::vector<Piece>& pieces) {
  for (std::size_t k = begin; k < end; ++k) {
    const Segment& s = segs[k];
    if (s.weight == 0.0) continue;
    clip_segment(g, s, pieces);
    if (pieces.empty()) continue;
    const double len = std::hypot(s.x1 - s.x0, s.y1 - s.y0);
    const double ux = (s.x1 - s.x0) / len, uy = (s.y1 - s.y0) / len;
    for (const Piece& p : pieces) {
      const double m = s.weight * p.length;
      if (length) length[p.cell] += m;
      if (dx) dx[p.cell] += m * ux;
      if (dy) dy[p.cell] += m * uy;
    }
  }
}

}  // namespace

void deposit_segments(const Grid& g, std::span<const Segment> segs, double* length, double* dx, double* dy,
                      Exec exec) {
  for (const Segment& s : segs) {
    if (!g.contains(s.x0, s.y0) || !g.contains(s.x1, s.y1))
      throw Error(ErrorCode::PointOutsideDomain, "segment endpoint outside the grid domain");
  }
  std::vector<Piece> pieces;
  if (exec == Exec::Serial) {
    deposit_range(g, segs, 0, segs.size(), length, dx, dy, pieces);
    return;
  }

  // Fixed chunking keeps the summation order independent of the thread count.
  // At most 64 chunks bound the scratch memory.
  const std::size_t chunk = std::max<std::size_t>(256, (segs.size() + 63) / 64);
  const std::size_t cells = g.cells();
  const std::size_t chunks = (segs.size() + chunk - 1) / chunk;
  const int channels = (length ? 1 : 0) + (dx ? 1 : 0) + (dy ? 1 : 0);
  if (chunks <= 1 || channels == 0) {
    deposit_range(g, segs, 0, segs.size(), length, dx, dy, pieces);
    return;
  }
  std::vector<double> partial(chunks * 3 * cells, 0.0);
#pragma omp parallel
  {
    std::vector<Piece> local;
#pragma omp for schedule(dynamic)
    for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(chunks); ++c) {
      const auto cu = static_cast<std::size_t>(c);
      double* base = partial.data() + cu * 3 * cells;
      deposit_range(g, segs, cu * chunk, std::min(segs.size(), (cu + 1) * chunk), length ? base : nullptr,
                    dx ? base + cells : nullptr, dy ? base + 2 * cells : nullptr, local);
    }
  }
  for (std::size_t c = 0; c < chunks; ++c) {
    const double* base = partial.data() + c * 3 * cells;
    for (std::size_t k = 0; k < cells; ++k) {
      if (length) length[k] += base[k];
      if (dx) dx[k] += base[cells + k];
      if (dy) dy[k] += base[2 * cells + k];
    }
  }
}

}  // namespace cot::kernels
