#include "cot/beckmann.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <numeric>
#include <queue>
#include <string>

#include "cot/parallel.hpp"

namespace cot {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;

void require_same_grid(const Grid& a, const Grid& b, const char* what) {
  if (!(a == b)) throw Error(ErrorCode::ShapeMismatch, std::string(what) + " live on different grids");
}

// Solves L x = b for the Neumann graph Laplacian of the cell grid, with b
// projected to zero mean and x returned with zero mean.
class LaplaceSolver {
 public:
  explicit LaplaceSolver(const Grid& g) : g_(g), n_(g.cells()) {
    if (n_ <= 128 * 128) {
      // Pinning cell 0 removes the constant null space.
      std::vector<Eigen::Triplet<double>> trip;
      trip.reserve(5 * n_);
      for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
          const auto c = static_cast<Eigen::Index>(g.index(i, j));
          double diag = 0.0;
          auto link = [&](int ii, int jj) {
            diag += 1.0;
            const auto n = static_cast<Eigen::Index>(g.index(ii, jj));
            if (c > 0 && n > 0) trip.emplace_back(c - 1, n - 1, -1.0);
          };
          if (i > 0) link(i - 1, j);
          if (i + 1 < g.nx) link(i + 1, j);
          if (j > 0) link(i, j - 1);
          if (j + 1 < g.ny) link(i, j + 1);
          if (c > 0) trip.emplace_back(c - 1, c - 1, diag);
        }
      }
      Eigen::SparseMatrix<double> L(static_cast<Eigen::Index>(n_ - 1), static_cast<Eigen::Index>(n_ - 1));
      L.setFromTriplets(trip.begin(), trip.end());
      ldlt_ = std::make_unique<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>>(L);
      if (ldlt_->info() != Eigen::Success) throw Error(ErrorCode::SingularSystem, "Laplacian factorization failed");
    }
  }

  std::vector<double> solve(std::vector<double> b, Exec exec) const {
    const double mean = std::accumulate(b.begin(), b.end(), 0.0) / static_cast<double>(n_);
    for (double& x : b) x -= mean;
    std::vector<double> x(n_, 0.0);
    if (ldlt_) {
      Eigen::VectorXd rhs(static_cast<Eigen::Index>(n_ - 1));
      for (std::size_t k = 1; k < n_; ++k) rhs[static_cast<Eigen::Index>(k - 1)] = b[k];
      const Eigen::VectorXd sol = ldlt_->solve(rhs);
      for (std::size_t k = 1; k < n_; ++k) x[k] = sol[static_cast<Eigen::Index>(k - 1)];
    } else {
      conjugate_gradient(b, x, exec);
    }
    const double xm = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n_);
    for (double& v : x) v -= xm;
    return x;
  }

 private:
  void conjugate_gradient(const std::vector<double>& b, std::vector<double>& x, Exec exec) const {
    std::vector<double> r = b, p = b, Ap(n_);
    double rr = std::inner_product(r.begin(), r.end(), r.begin(), 0.0);
    const double stop = 1e-20 * std::max(rr, 1e-300);
    for (std::size_t it = 0; it < 20 * n_ && rr > stop; ++it) {
      kernels::neumann_laplacian(g_, p, Ap, exec);
      const double alpha = rr / std::inner_product(p.begin(), p.end(), Ap.begin(), 0.0);
      for (std::size_t k = 0; k < n_; ++k) {
        x[k] += alpha * p[k];
        r[k] -= alpha * Ap[k];
      }
      const double rr_new = std::inner_product(r.begin(), r.end(), r.begin(), 0.0);
      const double beta = rr_new / rr;
      rr = rr_new;
      for (std::size_t k = 0; k < n_; ++k) p[k] = r[k] + beta * p[k];
    }
  }

  Grid g_;
  std::size_t n_;
  std::unique_ptr<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>> ldlt_;
};

// w = A v: per cell (vxL, vxR, vyB, vyT) / sqrt(2).
void apply_A(const VectorField& v, std::vector<double>& w) {
  const Grid& g = v.grid();
  w.resize(4 * g.cells());
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      double* c = w.data() + 4 * g.index(i, j);
      c[0] = kInvSqrt2 * v.vx(i, j);
      c[1] = kInvSqrt2 * v.vx(i + 1, j);
      c[2] = kInvSqrt2 * v.vy(i, j);
      c[3] = kInvSqrt2 * v.vy(i, j + 1);
    }
  }
}

// v = A^T w restricted to interior faces.
void apply_At(const std::vector<double>& w, VectorField& v) {
  const Grid& g = v.grid();
  std::fill(v.vx_data().begin(), v.vx_data().end(), 0.0);
  std::fill(v.vy_data().begin(), v.vy_data().end(), 0.0);
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      const double* c = w.data() + 4 * g.index(i, j);
      v.vx(i, j) += kInvSqrt2 * c[0];
      v.vx(i + 1, j) += kInvSqrt2 * c[1];
      v.vy(i, j) += kInvSqrt2 * c[2];
      v.vy(i, j + 1) += kInvSqrt2 * c[3];
    }
  }
  v.clear_boundary();
}

// v -= D^T lambda on interior faces; D^T lambda = -grad lambda.
void subtract_Dt(const std::vector<double>& lambda, VectorField& v) {
  const Grid& g = v.grid();
  const double inv_h = 1.0 / g.h;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 1; i < g.nx; ++i) v.vx(i, j) -= (lambda[g.index(i - 1, j)] - lambda[g.index(i, j)]) * inv_h;
  for (int j = 1; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) v.vy(i, j) -= (lambda[g.index(i, j - 1)] - lambda[g.index(i, j)]) * inv_h;
}

// Balanced right-hand side mu - s nu with s = sum mu / sum nu.
std::vector<double> balanced_source(const ScalarField& mu, const ScalarField& nu) {
  require_same_grid(mu.grid(), nu.grid(), "mu and nu");
  for (std::size_t k = 0; k < mu.size(); ++k)
    if (!std::isfinite(mu[k]) || !std::isfinite(nu[k]))
      throw Error(ErrorCode::InvalidInput, "densities must be finite");
  const double a = mu.mass(), b = nu.mass();
  if (std::abs(a - b) > 1e-10 * std::max({std::abs(a), std::abs(b), 1e-300}))
    throw Error(ErrorCode::MassMismatch, "h^2 sum mu = " + std::to_string(a) + " but h^2 sum nu = " + std::to_string(b));
  const double s = b != 0.0 ? a / b : 1.0;
  std::vector<double> f(mu.size());
  for (std::size_t k = 0; k < f.size(); ++k) f[k] = mu[k] - s * nu[k];
  return f;
}

// Projection of x onto {D v = f}: v = x - D^T lambda with L lambda = h^2 (D x - f).
// Returns lambda.
std::vector<double> project(const LaplaceSolver& solver, const std::vector<double>& f, VectorField& x, Exec exec) {
  const Grid& g = x.grid();
  ScalarField div(g);
  kernels::divergence(x, div, exec);
  std::vector<double> rhs(g.cells());
  for (std::size_t k = 0; k < rhs.size(); ++k) rhs[k] = g.area() * (div[k] - f[k]);
  std::vector<double> lambda = solver.solve(std::move(rhs), exec);
  subtract_Dt(lambda, x);
  return lambda;
}

double max_residual(const VectorField& v, const std::vector<double>& f, Exec exec) {
  ScalarField div(v.grid());
  kernels::divergence(v, div, exec);
  double r = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k) r = std::max(r, std::abs(div[k] - f[k]));
  return r;
}

double norm_inf(const std::vector<double>& a) {
  double m = 0.0;
  for (double x : a) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

ScalarField divergence(const VectorField& v, const Grid& grid) {
  require_same_grid(v.grid(), grid, "field and grid");
  ScalarField out(grid);
  kernels::divergence(v, out);
  return out;
}

double beckmann_cost(const VectorField& v, const CongestionSpec& H, const ScalarField* k) {
  const Grid& g = v.grid();
  if (k) require_same_grid(k->grid(), g, "weight and field");
  const ScalarField mag = cell_magnitude(v);
  double s = 0.0;
  for (std::size_t c = 0; c < mag.size(); ++c) s += (k ? (*k)[c] : 1.0) * H.cost(mag[c]);
  return g.area() * s;
}

BeckmannResult solve_beckmann(const ScalarField& mu, const ScalarField& nu, const CongestionSpec& H,
                              const BeckmannOptions& opt) {
  return solve_beckmann(mu, nu, H, ScalarField(mu.grid(), 1.0), opt);
}

BeckmannResult solve_beckmann(const ScalarField& mu, const ScalarField& nu, const CongestionSpec& H,
                              const ScalarField& k, const BeckmannOptions& opt) {
  const Grid& g = mu.grid();
  require_same_grid(k.grid(), g, "weight and densities");
  for (double x : k.values())
    if (!(x > 0.0) || !std::isfinite(x)) throw Error(ErrorCode::InvalidInput, "cell weights must be positive");
  if (!(opt.tol > 0.0)) throw Error(ErrorCode::InvalidInput, "tol must be positive");
  const std::vector<double> f = balanced_source(mu, nu);
  const Exec exec = opt.exec;
  const std::size_t N = g.cells();
  const LaplaceSolver solver(g);

  // Per-cell scaled costs phi_c = h^2 k_c H.
  std::vector<CongestionSpec> phi;
  phi.reserve(N);
  for (std::size_t c = 0; c < N; ++c) phi.push_back(H.scaled(g.area() * k[c]));
  const double kmean = std::accumulate(k.values().begin(), k.values().end(), 0.0) / static_cast<double>(N);
  double rho = opt.rho > 0.0 ? opt.rho : g.area() * kmean;

  BeckmannResult res;
  res.v = VectorField(g);
  std::vector<double> w(4 * N, 0.0), u(4 * N, 0.0), Av(4 * N), z(4 * N), w_prev, step(N), yhat(4 * N);
  VectorField x(g), v_prev(g);
  if (opt.initial) {
    require_same_grid(opt.initial->grid(), g, "initial field and densities");
    apply_A(*opt.initial, w);
  }
  const bool linear = H.family() == CongestionSpec::Family::Linear;

  double best_dual = -kInfinity;
  for (std::size_t it = 1; it <= opt.max_iter; ++it) {
    // v-step: projection of A^T (w - u) onto the constraint.
    for (std::size_t q = 0; q < 4 * N; ++q) z[q] = w[q] - u[q];
    apply_At(z, x);
    std::vector<double> lambda_p = project(solver, f, x, exec);
    v_prev = res.v;
    res.v = x;
    apply_A(res.v, Av);

    const bool check = it % opt.check_every == 0 || it == opt.max_iter;
    if (check) {
      // Dual certificate: yhat = rho (u + A v - w) has A^T yhat = D^T lambda
      // with lambda = -rho lambda_p, so <lambda, f> - F*(yhat) is a lower bound.
      double lf = 0.0;
      for (std::size_t c = 0; c < N; ++c) lf += -rho * lambda_p[c] * f[c];
      double fstar = 0.0, theta = 1.0;
      for (std::size_t c = 0; c < N; ++c) {
        double n2 = 0.0;
        for (int q = 0; q < 4; ++q) {
          const double y = rho * (u[4 * c + q] + Av[4 * c + q] - w[4 * c + q]);
          yhat[4 * c + q] = y;
          n2 += y * y;
        }
        const double n = std::sqrt(n2);
        if (linear) {
          const double cap = g.area() * k[c] * H.scale() * H.linear_coefficient();
          if (n > cap) theta = std::min(theta, cap / n);
        } else {
          fstar += phi[c].conjugate(n);
        }
      }
      const double dual = linear ? theta * lf : lf - fstar;
      best_dual = std::max(best_dual, dual);
    }

    // w-step: radial prox per cell; u-step.
    w_prev = w;
    for (std::size_t q = 0; q < 4 * N; ++q) z[q] = Av[q] + u[q];
    for (std::size_t c = 0; c < N; ++c) step[c] = g.area() * k[c] / rho;
    kernels::cell_prox(H, z, step, w, exec);
    double r2 = 0.0, s2 = 0.0;
    for (std::size_t q = 0; q < 4 * N; ++q) {
      const double r = Av[q] - w[q];
      u[q] += r;
      r2 += r * r;
      const double s = w[q] - w_prev[q];
      s2 += s * s;
    }
    res.iterations = it;

    if (check) {
      res.cost = 0.0;
      for (std::size_t c = 0; c < N; ++c) {
        const double* a = Av.data() + 4 * c;
        res.cost += phi[c].cost(std::sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2] + a[3] * a[3]));
      }
      res.dual_value = best_dual;
      res.gap = (res.cost - best_dual) / (1.0 + std::abs(res.cost));
      double dv = 0.0;
      for (std::size_t q = 0; q < res.v.vx_data().size(); ++q)
        dv = std::max(dv, std::abs(res.v.vx_data()[q] - v_prev.vx_data()[q]));
      for (std::size_t q = 0; q < res.v.vy_data().size(); ++q)
        dv = std::max(dv, std::abs(res.v.vy_data()[q] - v_prev.vy_data()[q]));
      const double vmax = std::max(norm_inf(res.v.vx_data()), norm_inf(res.v.vy_data()));
      res.change = vmax > 0.0 ? dv / std::max(1.0, vmax) : dv;
      if (res.gap <= opt.tol && res.change <= opt.tol) break;

      // Residual balancing; the projection does not depend on rho.
      const double r = std::sqrt(r2), s = rho * std::sqrt(s2);
      if (r > 10.0 * s) {
        rho *= 2.0;
        for (double& q : u) q *= 0.5;
      } else if (s > 10.0 * r) {
        rho *= 0.5;
        for (double& q : u) q *= 2.0;
      }
    }
  }
  res.status = res.gap <= opt.tol && res.change <= opt.tol ? SolveStatus::Converged : SolveStatus::MaxIterations;
  res.residual = max_residual(res.v, f, exec);
  return res;
}

QuadraticDual solve_dual_quadratic(const ScalarField& mu, const ScalarField& nu) {
  const Grid& g = mu.grid();
  const std::vector<double> f = balanced_source(mu, nu);
  const LaplaceSolver solver(g);
  // div grad = -L / h^2, so L u = -h^2 f.
  std::vector<double> rhs(f.size());
  for (std::size_t k = 0; k < f.size(); ++k) rhs[k] = -g.area() * f[k];
  QuadraticDual out;
  out.u = ScalarField(g);
  out.u.values() = solver.solve(std::move(rhs), Exec::Parallel);
  out.v = VectorField(g);
  subtract_Dt(out.u.values(), out.v);  // v = -D^T u = grad u
  out.cost = beckmann_cost(out.v, CongestionSpec::quadratic());
  out.residual = max_residual(out.v, f, Exec::Parallel);
  if (!(out.residual <= 1e-8 * std::max(1.0, norm_inf(f))))
    throw Error(ErrorCode::SingularSystem, "Poisson solve did not meet the divergence constraint");
  return out;
}

Matrix grid_geodesics(const ScalarField& k, const std::vector<std::size_t>& from, const std::vector<std::size_t>& to) {
  const Grid& g = k.grid();
  Matrix out(from.size(), to.size());
  const double diag = std::sqrt(2.0) * g.h;
  for (std::size_t a = 0; a < from.size(); ++a) {
    std::vector<double> dist(g.cells(), kInfinity);
    using Item = std::pair<double, std::size_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    dist[from[a]] = 0.0;
    heap.emplace(0.0, from[a]);
    while (!heap.empty()) {
      const auto [d, c] = heap.top();
      heap.pop();
      if (d > dist[c]) continue;
      const int i = static_cast<int>(c % static_cast<std::size_t>(g.nx));
      const int j = static_cast<int>(c / static_cast<std::size_t>(g.nx));
      for (int dj = -1; dj <= 1; ++dj) {
        for (int di = -1; di <= 1; ++di) {
          if ((di == 0 && dj == 0) || i + di < 0 || i + di >= g.nx || j + dj < 0 || j + dj >= g.ny) continue;
          const std::size_t n = g.index(i + di, j + dj);
          const double len = (di != 0 && dj != 0) ? diag : g.h;
          const double nd = d + 0.5 * (k[c] + k[n]) * len;
          if (nd < dist[n]) {
            dist[n] = nd;
            heap.emplace(nd, n);
          }
        }
      }
    }
    for (std::size_t b = 0; b < to.size(); ++b) out(a, b) = dist[to[b]];
  }
  return out;
}

namespace {

std::array<double, 2> planar(const Grid& g, std::span<const double> p) {
  if (p.size() == 2) return {p[0], p[1]};
  if (p.size() == 1) return {p[0], 0.5 * g.height()};
  throw Error(ErrorCode::ShapeMismatch, "grid points must be 1-D or 2-D");
}

}  // namespace

ScalarField density_from_points(const Grid& grid, const DiscreteMeasure& m) {
  ScalarField out(grid);
  for (std::size_t a = 0; a < m.size(); ++a) {
    const auto [x, y] = planar(grid, m.point(a));
    if (!grid.contains(x, y)) throw Error(ErrorCode::PointOutsideDomain, "point outside the grid domain");
    const auto [i, j] = grid.locate(x, y);
    out(i, j) += m.weight(a) / grid.area();
  }
  return out;
}

WeightedDualityReport weighted_beckmann_duality_check(const ScalarField& k, const DiscreteMeasure& mu,
                                                      const DiscreteMeasure& nu, const BeckmannOptions& opt) {
  const Grid& g = k.grid();
  const ScalarField dmu = density_from_points(g, mu);
  const ScalarField dnu = density_from_points(g, nu);

  std::vector<std::size_t> src, dst;
  std::vector<double> wa, wb;
  for (std::size_t c = 0; c < g.cells(); ++c) {
    if (dmu[c] > 0.0) src.push_back(c), wa.push_back(dmu[c] * g.area());
    if (dnu[c] > 0.0) dst.push_back(c), wb.push_back(dnu[c] * g.area());
  }
  WeightedDualityReport rep;
  rep.flow = solve_beckmann(dmu, dnu, CongestionSpec::linear(1.0), k, opt);
  rep.flow_value = rep.flow.cost;
  if (!src.empty() && !dst.empty())
    rep.geodesic_ot_value = solve_discrete_ot(wa, wb, grid_geodesics(k, src, dst)).value;
  const double denom = rep.geodesic_ot_value > 0.0 ? rep.geodesic_ot_value : 1.0;
  rep.rel_err = std::abs(rep.flow_value - rep.geodesic_ot_value) / denom;
  rep.tolerance = kOctagonalDistortion + 2.0 * g.h;
  return rep;
}

namespace {

std::vector<kernels::Segment> coupling_segments(const Matrix& coupling, const DiscreteMeasure& src,
                                                const DiscreteMeasure& dst, const Grid& grid) {
  if (coupling.rows() != src.size() || coupling.cols() != dst.size())
    throw Error(ErrorCode::ShapeMismatch, "coupling shape does not match the point sets");
  std::vector<kernels::Segment> segs;
  for (std::size_t i = 0; i < coupling.rows(); ++i) {
    const auto a = planar(grid, src.point(i));
    if (!grid.contains(a[0], a[1])) throw Error(ErrorCode::PointOutsideDomain, "source point outside the grid domain");
    for (std::size_t j = 0; j < coupling.cols(); ++j) {
      const auto b = planar(grid, dst.point(j));
      if (!grid.contains(b[0], b[1])) throw Error(ErrorCode::PointOutsideDomain, "target point outside the grid domain");
      if (coupling(i, j) > 0.0) segs.push_back({a[0], a[1], b[0], b[1], coupling(i, j)});
    }
  }
  return segs;
}

}  // namespace

ScalarField rasterize_transport_density(const Matrix& coupling, const DiscreteMeasure& src, const DiscreteMeasure& dst,
                                        const Grid& grid, Exec exec) {
  const auto segs = coupling_segments(coupling, src, dst, grid);
  ScalarField sigma(grid);
  kernels::deposit_segments(grid, segs, sigma.values().data(), nullptr, nullptr, exec);
  for (double& s : sigma.values()) s /= grid.area();
  return sigma;
}

std::pair<ScalarField, ScalarField> rasterize_v_gamma_cells(const Matrix& coupling, const DiscreteMeasure& src,
                                                            const DiscreteMeasure& dst, const Grid& grid, Exec exec) {
  const auto segs = coupling_segments(coupling, src, dst, grid);
  ScalarField qx(grid), qy(grid);
  kernels::deposit_segments(grid, segs, nullptr, qx.values().data(), qy.values().data(), exec);
  for (double& s : qx.values()) s /= grid.area();
  for (double& s : qy.values()) s /= grid.area();
  return {std::move(qx), std::move(qy)};
}

VectorField rasterize_v_gamma(const Matrix& coupling, const DiscreteMeasure& src, const DiscreteMeasure& dst,
                              const Grid& grid, Exec exec) {
  const auto [qx, qy] = rasterize_v_gamma_cells(coupling, src, dst, grid, exec);
  VectorField v(grid);
  for (int j = 0; j < grid.ny; ++j)
    for (int i = 1; i < grid.nx; ++i) v.vx(i, j) = 0.5 * (qx(i - 1, j) + qx(i, j));
  for (int j = 1; j < grid.ny; ++j)
    for (int i = 0; i < grid.nx; ++i) v.vy(i, j) = 0.5 * (qy(i, j - 1) + qy(i, j));
  return v;
}

}  // namespace cot
