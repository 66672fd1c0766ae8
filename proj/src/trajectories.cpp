#include "cot/trajectories.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <vector>

#include "cot/error.hpp"
#include "cot/parallel.hpp"

namespace cot {

namespace {

// Linear interpolation weights on a lattice of n nodes at (k + offset) h,
// clamped to the end nodes.
struct Stencil {
  int k0, k1;
  double t;
};

Stencil stencil(double x, double h, double offset, int n) {
  if (n == 1) return {0, 0, 0.0};
  double f = x / h - offset;
  f = std::clamp(f, 0.0, static_cast<double>(n - 1));
  const int k0 = std::min(static_cast<int>(f), n - 2);
  return {k0, k0 + 1, f - k0};
}

class VelocityField {
 public:
  VelocityField(const VectorField& v, const ScalarField& mu, const ScalarField& nu, double floor)
      : v_(v), mu_(mu), nu_(nu), g_(v.grid()), floor_(floor) {}

  // w(t, x) = v(x) / max(rho_t(x), floor); counts clamped evaluations.
  std::array<double, 2> operator()(double t, double x, double y, std::size_t& floor_hits) const {
    x = std::clamp(x, 0.0, g_.width());
    y = std::clamp(y, 0.0, g_.height());
    // vx nodes at (i h, (j + 1/2) h); vy nodes at ((i + 1/2) h, j h).
    const Stencil ax = stencil(x, g_.h, 0.0, g_.nx + 1), ay = stencil(y, g_.h, 0.5, g_.ny);
    const double vx = (1 - ay.t) * ((1 - ax.t) * v_.vx(ax.k0, ay.k0) + ax.t * v_.vx(ax.k1, ay.k0)) +
                      ay.t * ((1 - ax.t) * v_.vx(ax.k0, ay.k1) + ax.t * v_.vx(ax.k1, ay.k1));
    const Stencil bx = stencil(x, g_.h, 0.5, g_.nx), by = stencil(y, g_.h, 0.0, g_.ny + 1);
    const double vy = (1 - by.t) * ((1 - bx.t) * v_.vy(bx.k0, by.k0) + bx.t * v_.vy(bx.k1, by.k0)) +
                      by.t * ((1 - bx.t) * v_.vy(bx.k0, by.k1) + bx.t * v_.vy(bx.k1, by.k1));
    const Stencil cx = stencil(x, g_.h, 0.5, g_.nx), cy = stencil(y, g_.h, 0.5, g_.ny);
    auto rho_at = [&](int i, int j) { return (1 - t) * mu_(i, j) + t * nu_(i, j); };
    double rho = (1 - cy.t) * ((1 - cx.t) * rho_at(cx.k0, cy.k0) + cx.t * rho_at(cx.k1, cy.k0)) +
                 cy.t * ((1 - cx.t) * rho_at(cx.k0, cy.k1) + cx.t * rho_at(cx.k1, cy.k1));
    if (rho < floor_) {
      rho = floor_;
      ++floor_hits;
    }
    return {vx / rho, vy / rho};
  }

 private:
  const VectorField& v_;
  const ScalarField& mu_;
  const ScalarField& nu_;
  const Grid& g_;
  double floor_;
};

// Mirrors a coordinate back into [0, len]; returns whether it moved.
bool reflect(double& x, double len) {
  bool moved = false;
  while (x < 0.0 || x > len) {
    x = x < 0.0 ? -x : 2.0 * len - x;
    moved = true;
  }
  return moved;
}

struct ChunkOutput {
  std::vector<double> intensity;
  std::size_t floor_hits = 0;
  std::size_t reflections = 0;
};

}  // namespace

TrajectoryResult reconstruct_trajectories(const VectorField& v, const ScalarField& mu, const ScalarField& nu,
                                          const TrajectoryOptions& opt) {
  const Grid& g = v.grid();
  if (!(mu.grid() == g) || !(nu.grid() == g))
    throw Error(ErrorCode::ShapeMismatch, "flow and densities live on different grids");
  if (opt.n_particles == 0 || opt.n_steps == 0)
    throw Error(ErrorCode::InvalidInput, "n_particles and n_steps must be positive");
  for (std::size_t c = 0; c < g.cells(); ++c)
    if (!(mu[c] >= 0.0) || !(nu[c] >= 0.0)) throw Error(ErrorCode::InvalidInput, "densities must be nonnegative");
  const double mass = mu.mass();
  if (!(mass > 0.0)) throw Error(ErrorCode::InvalidInput, "mu has no mass");
  if (std::abs(mass - nu.mass()) > 1e-8 * mass) throw Error(ErrorCode::MassMismatch, "mu and nu differ in mass");

  const double floor = opt.floor_factor * std::max(mu.max(), nu.max());
  const VelocityField w(v, mu, nu, floor);

  // Stratified sampling: particle k takes the quantile (k + U) / N of the
  // cell mass distribution and a uniform position inside that cell.
  std::vector<double> cdf(g.cells());
  double acc = 0.0;
  for (std::size_t c = 0; c < g.cells(); ++c) cdf[c] = (acc += mu[c]);
  const std::size_t N = opt.n_particles;
  const double weight = mass / static_cast<double>(N);
  const double dt = 1.0 / static_cast<double>(opt.n_steps);

  TrajectoryResult res;
  std::vector<double> end_xy(2 * N), mid_xy(2 * N);
  const std::size_t mid_step = opt.n_steps / 2;
  const bool exact_mid = opt.n_steps % 2 == 0;

  const std::size_t chunk = std::max<std::size_t>(64, (N + 63) / 64);
  const std::size_t chunks = (N + chunk - 1) / chunk;
  std::vector<ChunkOutput> out(chunks);

  auto run_chunk = [&](std::size_t ci) {
    ChunkOutput& o = out[ci];
    o.intensity.assign(g.cells(), 0.0);
    std::vector<kernels::Segment> segs;
    segs.reserve(opt.n_steps);
    for (std::size_t k = ci * chunk; k < std::min(N, (ci + 1) * chunk); ++k) {
      std::seed_seq seq{static_cast<std::uint64_t>(opt.seed), static_cast<std::uint64_t>(k)};
      std::mt19937_64 rng(seq);
      std::uniform_real_distribution<double> unif(0.0, 1.0);
      const double q = (static_cast<double>(k) + unif(rng)) / static_cast<double>(N) * acc;
      const auto c = static_cast<std::size_t>(
          std::min<std::ptrdiff_t>(std::lower_bound(cdf.begin(), cdf.end(), q) - cdf.begin(),
                                   static_cast<std::ptrdiff_t>(g.cells() - 1)));
      const int ci_x = static_cast<int>(c % static_cast<std::size_t>(g.nx));
      const int ci_y = static_cast<int>(c / static_cast<std::size_t>(g.nx));
      double x = (ci_x + unif(rng)) * g.h;
      double y = (ci_y + unif(rng)) * g.h;
      if (g.ny == 1) y = 0.5 * g.h;

      segs.clear();
      for (std::size_t s = 0; s < opt.n_steps; ++s) {
        if (s == mid_step && exact_mid) mid_xy[2 * k] = x, mid_xy[2 * k + 1] = y;
        const double t = static_cast<double>(s) * dt;
        const auto k1 = w(t, x, y, o.floor_hits);
        const auto k2 = w(t + 0.5 * dt, x + 0.5 * dt * k1[0], y + 0.5 * dt * k1[1], o.floor_hits);
        const auto k3 = w(t + 0.5 * dt, x + 0.5 * dt * k2[0], y + 0.5 * dt * k2[1], o.floor_hits);
        const auto k4 = w(t + dt, x + dt * k3[0], y + dt * k3[1], o.floor_hits);
        double nx = x + dt / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]);
        double ny = y + dt / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]);
        const bool rx = reflect(nx, g.width());
        const bool ry = reflect(ny, g.height());
        if (rx || ry) ++o.reflections;
        segs.push_back({x, y, nx, ny, weight});
        x = nx;
        y = ny;
        if (s + 1 == mid_step && !exact_mid) mid_xy[2 * k] = x, mid_xy[2 * k + 1] = y;
      }
      end_xy[2 * k] = x;
      end_xy[2 * k + 1] = y;
      kernels::deposit_segments(g, segs, o.intensity.data(), nullptr, nullptr, Exec::Serial);
    }
  };

  if (opt.exec == Exec::Serial) {
    for (std::size_t ci = 0; ci < chunks; ++ci) run_chunk(ci);
  } else {
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t ci = 0; ci < static_cast<std::ptrdiff_t>(chunks); ++ci) run_chunk(static_cast<std::size_t>(ci));
  }

  res.intensity = ScalarField(g);
  for (const ChunkOutput& o : out) {
    for (std::size_t c = 0; c < g.cells(); ++c) res.intensity[c] += o.intensity[c];
    res.floor_hits += o.floor_hits;
    res.reflections += o.reflections;
  }
  for (double& x : res.intensity.values()) x /= g.area();
  for (std::size_t k = 0; k < N; ++k) {
    res.endpoints.add({end_xy[2 * k], end_xy[2 * k + 1]}, weight);
    res.midpoints.add({mid_xy[2 * k], mid_xy[2 * k + 1]}, weight);
  }
  return res;
}

namespace {

void check_coarse(const Grid& g, int cx, int cy) {
  if (cx < 1 || cy < 1 || g.nx % cx != 0 || g.ny % cy != 0)
    throw Error(ErrorCode::ShapeMismatch, "coarse grid must divide the fine grid");
}

DiscreteMeasure coarse_measure(const Grid& g, int cx, int cy, const std::vector<double>& mass) {
  const double hx = g.width() / cx, hy = g.height() / cy;
  DiscreteMeasure out(2);
  for (int j = 0; j < cy; ++j)
    for (int i = 0; i < cx; ++i) {
      const double m = mass[static_cast<std::size_t>(j) * static_cast<std::size_t>(cx) + static_cast<std::size_t>(i)];
      if (m > 0.0) out.add({(i + 0.5) * hx, (j + 0.5) * hy}, m);
    }
  return out;
}

}  // namespace

DiscreteMeasure coarsen_density(const ScalarField& density, int coarse_nx, int coarse_ny) {
  const Grid& g = density.grid();
  check_coarse(g, coarse_nx, coarse_ny);
  const int fx = g.nx / coarse_nx, fy = g.ny / coarse_ny;
  std::vector<double> mass(static_cast<std::size_t>(coarse_nx) * static_cast<std::size_t>(coarse_ny), 0.0);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      mass[static_cast<std::size_t>(j / fy) * static_cast<std::size_t>(coarse_nx) + static_cast<std::size_t>(i / fx)] +=
          density(i, j) * g.area();
  return coarse_measure(g, coarse_nx, coarse_ny, mass);
}

DiscreteMeasure coarsen_points(const DiscreteMeasure& points, const Grid& grid, int coarse_nx, int coarse_ny) {
  check_coarse(grid, coarse_nx, coarse_ny);
  if (points.dim() != 2) throw Error(ErrorCode::ShapeMismatch, "points must be 2-D");
  const int fx = grid.nx / coarse_nx, fy = grid.ny / coarse_ny;
  std::vector<double> mass(static_cast<std::size_t>(coarse_nx) * static_cast<std::size_t>(coarse_ny), 0.0);
  for (std::size_t a = 0; a < points.size(); ++a) {
    const auto p = points.point(a);
    if (!grid.contains(p[0], p[1])) throw Error(ErrorCode::PointOutsideDomain, "point outside the grid domain");
    const auto [i, j] = grid.locate(p[0], p[1]);
    mass[static_cast<std::size_t>(j / fy) * static_cast<std::size_t>(coarse_nx) + static_cast<std::size_t>(i / fx)] +=
        points.weight(a);
  }
  return coarse_measure(grid, coarse_nx, coarse_ny, mass);
}

}  // namespace cot
