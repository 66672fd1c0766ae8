#include "cot/urbanplan.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <exception>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

namespace cot {

SpreadSpec SpreadSpec::quadratic(double scale) {
  if (!(scale > 0.0) || !std::isfinite(scale)) throw Error(ErrorCode::InvalidInput, "spread scale must be positive");
  return SpreadSpec(Family::Quadratic, 2.0, scale);
}

SpreadSpec SpreadSpec::power(double m, double scale) {
  if (!(m > 1.0) || !std::isfinite(m)) throw Error(ErrorCode::InvalidInput, "spread exponent must exceed 1");
  if (!(scale > 0.0) || !std::isfinite(scale)) throw Error(ErrorCode::InvalidInput, "spread scale must be positive");
  return SpreadSpec(Family::Power, m, scale);
}

double SpreadSpec::value(double t) const {
  if (family_ == Family::Quadratic) return scale_ * t * t;
  return scale_ * std::pow(t, m_) / m_;
}

double SpreadSpec::derivative(double t) const {
  if (family_ == Family::Quadratic) return 2.0 * scale_ * t;
  return scale_ * std::pow(t, m_ - 1.0);
}

double SpreadSpec::inverse_derivative(double s) const {
  if (s <= 0.0) return 0.0;
  if (family_ == Family::Quadratic) return s / (2.0 * scale_);
  return std::pow(s / scale_, 1.0 / (m_ - 1.0));
}

std::string SpreadSpec::describe() const {
  std::ostringstream os;
  os.precision(17);
  if (family_ == Family::Quadratic) os << "quadratic " << scale_;
  else os << "power " << m_ << ' ' << scale_;
  return os.str();
}

void SpreadSpec::check() const {
  if (value(0.0) != 0.0) throw Error(ErrorCode::InvalidInput, "spread cost must vanish at 0");
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> unif(0.0, 10.0);
  for (int k = 0; k < 20; ++k) {
    const double a = unif(rng), b = unif(rng);
    const double mid = value(0.5 * (a + b)), avg = 0.5 * (value(a) + value(b));
    if (mid > avg + 1e-12 * std::max(1.0, avg)) throw Error(ErrorCode::InvalidInput, "spread cost is not convex");
  }
  for (double s : {0.1, 1.0, 10.0}) {
    if (std::abs(derivative(inverse_derivative(s)) - s) > 1e-8 * std::max(1.0, s))
      throw Error(ErrorCode::InvalidInput, "inverse derivative does not invert f'");
  }
}

ConcentrationSpec::ConcentrationSpec(Kind k, std::function<double(double)> fn, std::function<double(double)> dfn,
                                     std::string name)
    : kind_(k), fn_(std::move(fn)), dfn_(std::move(dfn)), name_(std::move(name)) {
  if (!fn_) throw Error(ErrorCode::InvalidInput, "concentration function missing");
  std::mt19937_64 rng(20240602);
  if (kind_ == Kind::Atomic) {
    if (std::abs(fn_(0.0)) > 1e-12) throw Error(ErrorCode::InvalidInput, "atomic cost must satisfy g(0) = 0");
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int k = 0; k < 40; ++k) {
      const double a = 0.5 * unif(rng), b = 0.5 * unif(rng);
      if (fn_(a + b) > fn_(a) + fn_(b) + 1e-10)
        throw Error(ErrorCode::InvalidInput, "atomic cost " + name_ + " is not subadditive");
    }
  } else {
    std::uniform_real_distribution<double> unif(0.0, 10.0);
    std::vector<double> r(40);
    for (double& x : r) x = unif(rng);
    std::sort(r.begin(), r.end());
    for (std::size_t k = 1; k < r.size(); ++k)
      if (fn_(r[k]) < fn_(r[k - 1]) - 1e-12)
        throw Error(ErrorCode::InvalidInput, "interaction cost " + name_ + " is not nondecreasing");
  }
}

ConcentrationSpec ConcentrationSpec::atomic(std::function<double(double)> g, std::string name) {
  return ConcentrationSpec(Kind::Atomic, std::move(g), nullptr, std::move(name));
}

ConcentrationSpec ConcentrationSpec::atomic_power(double coefficient, double exponent) {
  if (!(coefficient >= 0.0) || !(exponent > 0.0))
    throw Error(ErrorCode::InvalidInput, "atomic power cost needs coefficient >= 0 and exponent > 0");
  std::ostringstream os;
  os.precision(17);
  os << "power " << coefficient << ' ' << exponent;
  return ConcentrationSpec(
      Kind::Atomic, [=](double a) { return a <= 0.0 ? 0.0 : coefficient * std::pow(a, exponent); }, nullptr, os.str());
}

ConcentrationSpec ConcentrationSpec::interaction(std::function<double(double)> h, std::function<double(double)> dh,
                                                 std::string name) {
  return ConcentrationSpec(Kind::Interaction, std::move(h), std::move(dh), std::move(name));
}

ConcentrationSpec ConcentrationSpec::interaction_power(double coefficient, double exponent) {
  if (!(coefficient >= 0.0) || !(exponent > 0.0))
    throw Error(ErrorCode::InvalidInput, "interaction power cost needs coefficient >= 0 and exponent > 0");
  std::ostringstream os;
  os.precision(17);
  os << "power " << coefficient << ' ' << exponent;
  return ConcentrationSpec(
      Kind::Interaction, [=](double r) { return coefficient * std::pow(r, exponent); },
      [=](double r) { return r <= 0.0 ? 0.0 : coefficient * exponent * std::pow(r, exponent - 1.0); }, os.str());
}

namespace {

DiscreteMeasure cell_centers(const Grid& g) {
  DiscreteMeasure out(2);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) out.add({g.xc(i), g.yc(j)}, 1.0);
  return out;
}

void require_probability(double mass, const char* what) {
  if (std::abs(mass - 1.0) > 1e-8)
    throw Error(ErrorCode::MassMismatch, std::string(what) + " has mass " + std::to_string(mass) + ", expected 1");
}

double spread_value(const ScalarField& mu, const SpreadSpec& f) {
  double s = 0.0;
  for (double u : mu.values()) s += f.value(u);
  return mu.grid().area() * s;
}

double concentration_value(const DiscreteMeasure& nu, const ConcentrationSpec& conc) {
  double s = 0.0;
  if (conc.kind() == ConcentrationSpec::Kind::Atomic) {
    for (double a : nu.weights()) s += conc.g(a);
    return s;
  }
  for (std::size_t k = 0; k < nu.size(); ++k)
    for (std::size_t l = 0; l < nu.size(); ++l)
      s += conc.h(std::sqrt(lp_cost(nu.point(k), nu.point(l), 2.0))) * nu.weight(k) * nu.weight(l);
  return s;
}

// Optimal transport from the cell masses of mu to nu, with the source
// potential extended to every cell by c-transform.
struct Response {
  std::vector<std::size_t> support;  // cells with mu > 0
  Matrix plan;                       // support x atoms
  std::vector<double> psi;           // per cell
  std::vector<double> target;        // per atom
  double transport = 0.0;
};

Response respond(const ScalarField& mu, const DiscreteMeasure& nu, const DiscreteMeasure& centers, double p) {
  const Grid& g = mu.grid();
  Response r;
  std::vector<double> a;
  for (std::size_t c = 0; c < g.cells(); ++c)
    if (mu[c] > 0.0) r.support.push_back(c), a.push_back(mu[c] * g.area());
  Matrix cost(r.support.size(), nu.size());
  for (std::size_t s = 0; s < r.support.size(); ++s)
    for (std::size_t j = 0; j < nu.size(); ++j) cost(s, j) = lp_cost(centers.point(r.support[s]), nu.point(j), p);
  TransportResult ot = solve_discrete_ot(a, nu.weights(), cost);
  r.plan = std::move(ot.plan);
  r.transport = ot.value;
  r.target = std::move(ot.potentials.psi);
  r.psi = c_transform(centers, nu, r.target, lp_point_cost(p));
  return r;
}

// C with h^2 sum (f')^-1((C - psi)_+) = 1 and the resulting density.
std::pair<double, std::vector<double>> normalize(const std::vector<double>& psi, const SpreadSpec& f, double area) {
  auto mass = [&](double C) {
    double s = 0.0;
    for (double v : psi) s += f.inverse_derivative(C - v);
    return area * s;
  };
  const double lo0 = *std::min_element(psi.begin(), psi.end());
  double lo = lo0, width = 1.0;
  while (mass(lo0 + width) < 1.0) {
    width *= 2.0;
    if (width > 1e6) throw Error(ErrorCode::BisectionFailure, "no multiplier below 1e6 normalizes the density");
  }
  double hi = lo0 + width;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++it) {
    const double mid = 0.5 * (lo + hi);
    (mass(mid) < 1.0 ? lo : hi) = mid;
  }
  const double C = 0.5 * (lo + hi);
  std::vector<double> u(psi.size());
  for (std::size_t c = 0; c < psi.size(); ++c) u[c] = f.inverse_derivative(C - psi[c]);
  const double m = area * std::accumulate(u.begin(), u.end(), 0.0);
  for (double& x : u) x /= m;
  return {C, std::move(u)};
}

double l1_distance(const std::vector<double>& a, const std::vector<double>& b, double area) {
  double s = 0.0;
  for (std::size_t c = 0; c < a.size(); ++c) s += std::abs(a[c] - b[c]);
  return area * s;
}

// Fills the potential, multiplier and residual of `sol` from its mu.
void finish(CitySolution& sol, const DiscreteMeasure& centers, double p, const SpreadSpec& f,
            const ConcentrationSpec* conc) {
  const Grid& g = sol.mu.grid();
  const Response r = respond(sol.mu, sol.nu, centers, p);
  auto [C, u] = normalize(r.psi, f, g.area());
  sol.potential = ScalarField(g);
  sol.potential.values() = r.psi;
  sol.multiplier = C;
  sol.residual = l1_distance(sol.mu.values(), u, g.area());
  sol.value.transport = r.transport;
  sol.value.spread = spread_value(sol.mu, f);
  sol.value.concentration = conc ? concentration_value(sol.nu, *conc) : 0.0;
  sol.value.total = sol.value.transport + sol.value.spread + sol.value.concentration;
}

ScalarField uniform_density(const Grid& g) {
  return ScalarField(g, 1.0 / (static_cast<double>(g.cells()) * g.area()));
}

// mu <- (1 - theta) mu + theta u.
ScalarField damped(const ScalarField& mu, const std::vector<double>& u, double theta) {
  ScalarField out = mu;
  for (std::size_t c = 0; c < u.size(); ++c) out[c] = (1.0 - theta) * mu[c] + theta * u[c];
  return out;
}

std::array<double, 2> barycenter(const ScalarField& mu) {
  const Grid& g = mu.grid();
  double m = 0.0, x = 0.0, y = 0.0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      m += mu(i, j);
      x += mu(i, j) * g.xc(i);
      y += mu(i, j) * g.yc(j);
    }
  return {x / m, y / m};
}

}  // namespace

CityValue eval_total(const ScalarField& mu, const DiscreteMeasure& nu, double p, const SpreadSpec& spread,
                     const ConcentrationSpec& conc) {
  if (nu.dim() != 2) throw Error(ErrorCode::ShapeMismatch, "nu must be 2-D");
  require_probability(mu.mass(), "mu");
  require_probability(nu.total_mass(), "nu");
  const Grid& g = mu.grid();
  for (std::size_t a = 0; a < nu.size(); ++a)
    if (!g.contains(nu.point(a)[0], nu.point(a)[1]))
      throw Error(ErrorCode::PointOutsideDomain, "atom outside the grid domain");
  CityValue v;
  v.transport = respond(mu, nu, cell_centers(g), p).transport;
  v.spread = spread_value(mu, spread);
  v.concentration = concentration_value(nu, conc);
  v.total = v.transport + v.spread + v.concentration;
  return v;
}

CityValue eval_total(const ScalarField& mu, const ScalarField& nu, double p, const SpreadSpec& spread,
                     const ConcentrationSpec& conc) {
  if (!(mu.grid() == nu.grid())) throw Error(ErrorCode::ShapeMismatch, "mu and nu live on different grids");
  require_probability(mu.mass(), "mu");
  require_probability(nu.mass(), "nu");
  const Grid& g = mu.grid();
  DiscreteMeasure atoms(2);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      if (nu(i, j) > 0.0) atoms.add({g.xc(i), g.yc(j)}, nu(i, j) * g.area());
  CityValue v;
  v.transport = respond(mu, atoms, cell_centers(g), p).transport;
  v.spread = spread_value(mu, spread);
  v.concentration = conc.kind() == ConcentrationSpec::Kind::Atomic ? kInfinity : concentration_value(atoms, conc);
  v.total = v.transport + v.spread + v.concentration;
  return v;
}

CitySolution solve_p_nu(const DiscreteMeasure& nu, double p, const SpreadSpec& spread, const Grid& grid, double tol,
                        const CityOptions& opt) {
  if (!(tol > 0.0)) throw Error(ErrorCode::InvalidInput, "tol must be positive");
  if (!(p >= 1.0)) throw Error(ErrorCode::InvalidInput, "p must be at least 1");
  if (!(opt.theta > 0.0 && opt.theta <= 1.0)) throw Error(ErrorCode::InvalidInput, "theta must lie in (0, 1]");
  if (nu.dim() != 2) throw Error(ErrorCode::ShapeMismatch, "nu must be 2-D");
  require_probability(nu.total_mass(), "nu");
  const DiscreteMeasure centers = cell_centers(grid);

  CitySolution sol;
  sol.nu = nu;
  if (opt.initial_mu) {
    if (!(opt.initial_mu->grid() == grid)) throw Error(ErrorCode::ShapeMismatch, "initial mu is on another grid");
    require_probability(opt.initial_mu->mass(), "initial mu");
    sol.mu = *opt.initial_mu;
  } else {
    sol.mu = uniform_density(grid);
  }
  sol.status = SolveStatus::MaxIterations;
  for (std::size_t it = 1; it <= opt.max_iter; ++it) {
    const Response r = respond(sol.mu, nu, centers, p);
    const auto [C, u] = normalize(r.psi, spread, grid.area());
    ScalarField next = damped(sol.mu, u, opt.theta);
    sol.change = l1_distance(next.values(), sol.mu.values(), grid.area());
    sol.mu = std::move(next);
    sol.iterations = it;
    if (sol.change <= tol) {
      sol.status = SolveStatus::Converged;
      break;
    }
  }
  finish(sol, centers, p, spread, nullptr);
  return sol;
}

double quadratic_city_radius(double lambda) {
  if (!(lambda > 0.0)) throw Error(ErrorCode::InvalidInput, "lambda must be positive");
  return std::pow(2.0 * (2.0 * lambda + 1.0) / (std::numbers::pi * lambda), 0.25);
}

CitySolution solve_quadratic_city(double lambda, const Grid& grid, double tol, const QuadraticCityOptions& opt) {
  if (!(tol > 0.0)) throw Error(ErrorCode::InvalidInput, "tol must be positive");
  const double radius = quadratic_city_radius(lambda);
  if (2.0 * radius > std::min(grid.width(), grid.height()))
    throw Error(ErrorCode::DomainTooSmall, "the domain cannot hold a city of radius " + std::to_string(radius));
  const std::size_t K = opt.atoms_per_side;
  if (K == 0) throw Error(ErrorCode::InvalidInput, "atoms_per_side must be positive");
  const SpreadSpec f = SpreadSpec::quadratic();
  const ConcentrationSpec G = ConcentrationSpec::interaction_power(lambda, 2.0);
  const DiscreteMeasure centers = cell_centers(grid);

  // nu0 = mu0 = uniform, carried by the centers of a K x K partition.
  CitySolution sol;
  sol.mu = uniform_density(grid);
  const double bw = grid.width() / static_cast<double>(K), bh = grid.height() / static_cast<double>(K);
  for (std::size_t j = 0; j < K; ++j)
    for (std::size_t i = 0; i < K; ++i)
      sol.nu.add({(static_cast<double>(i) + 0.5) * bw, (static_cast<double>(j) + 0.5) * bh},
                 1.0 / static_cast<double>(K * K));

  auto total = [&](const ScalarField& mu, const DiscreteMeasure& nu, const Response& r) {
    return r.transport + spread_value(mu, f) + concentration_value(nu, G);
  };
  Response r = respond(sol.mu, sol.nu, centers, 2.0);
  double value = total(sol.mu, sol.nu, r);
  sol.value_history.push_back(value);
  sol.status = SolveStatus::MaxIterations;

  for (std::size_t it = 1; it <= opt.max_iter; ++it) {
    sol.iterations = it;
    // mu-step with backtracking on theta.
    const auto [C, u] = normalize(r.psi, f, grid.area());
    double theta = opt.theta;
    ScalarField mu_next;
    Response r_next;
    double v_next = kInfinity;
    for (int tries = 0; tries < 30; ++tries, theta *= 0.5) {
      mu_next = damped(sol.mu, u, theta);
      r_next = respond(mu_next, sol.nu, centers, 2.0);
      v_next = total(mu_next, sol.nu, r_next);
      if (v_next <= value + 1e-10) break;
    }
    if (v_next > value + 1e-10) break;
    sol.change = l1_distance(mu_next.values(), sol.mu.values(), grid.area());
    sol.mu = std::move(mu_next);

    // nu-step: exact minimizer of the quadratic bound at the current plan.
    const auto xbar = barycenter(sol.mu);
    DiscreteMeasure nu_next(2);
    for (std::size_t k = 0; k < sol.nu.size(); ++k) {
      double m = 0.0, tx = 0.0, ty = 0.0;
      for (std::size_t s = 0; s < r_next.support.size(); ++s) {
        const double w = r_next.plan(s, k);
        if (w == 0.0) continue;
        const auto x = centers.point(r_next.support[s]);
        m += w;
        tx += w * x[0];
        ty += w * x[1];
      }
      const auto y = sol.nu.point(k);
      const double bx = m > 0.0 ? tx / m : y[0], by = m > 0.0 ? ty / m : y[1];
      nu_next.add({(bx + 2.0 * lambda * xbar[0]) / (1.0 + 2.0 * lambda),
                   (by + 2.0 * lambda * xbar[1]) / (1.0 + 2.0 * lambda)},
                  sol.nu.weight(k));
    }
    sol.nu = std::move(nu_next);
    r = respond(sol.mu, sol.nu, centers, 2.0);
    const double v_new = total(sol.mu, sol.nu, r);
    const double decrease = value - v_new;
    value = std::min(value, v_new);
    sol.value_history.push_back(v_new);
    if (decrease < tol) {
      sol.status = SolveStatus::Converged;
      break;
    }
  }
  finish(sol, centers, 2.0, f, &G);

  const auto x0 = barycenter(sol.mu);
  const double c = lambda / (2.0 * lambda + 1.0);
  std::vector<double> ref(grid.cells());
  for (int j = 0; j < grid.ny; ++j)
    for (int i = 0; i < grid.nx; ++i) {
      const double d2 = std::pow(grid.xc(i) - x0[0], 2) + std::pow(grid.yc(j) - x0[1], 2);
      ref[grid.index(i, j)] = std::max(0.0, c * (radius * radius - d2));
    }
  sol.reference_l1 = l1_distance(sol.mu.values(), ref, grid.area());
  sol.reference_radius = radius;
  return sol;
}

bool label_connected(const Grid& grid, const std::vector<int>& labels, int label) {
  if (labels.size() != grid.cells()) throw Error(ErrorCode::ShapeMismatch, "one label per cell expected");
  std::vector<char> seen(labels.size(), 0);
  std::vector<std::size_t> stack;
  std::size_t total = 0, reached = 0;
  for (std::size_t c = 0; c < labels.size(); ++c) {
    if (labels[c] != label) continue;
    ++total;
    if (stack.empty() && reached == 0) {
      stack.push_back(c);
      seen[c] = 1;
    }
  }
  while (!stack.empty()) {
    const std::size_t c = stack.back();
    stack.pop_back();
    ++reached;
    const int i = static_cast<int>(c % static_cast<std::size_t>(grid.nx));
    const int j = static_cast<int>(c / static_cast<std::size_t>(grid.nx));
    const int di[4] = {-1, 1, 0, 0}, dj[4] = {0, 0, -1, 1};
    for (int q = 0; q < 4; ++q) {
      const int a = i + di[q], b = j + dj[q];
      if (a < 0 || a >= grid.nx || b < 0 || b >= grid.ny) continue;
      const std::size_t n = grid.index(a, b);
      if (!seen[n] && labels[n] == label) {
        seen[n] = 1;
        stack.push_back(n);
      }
    }
  }
  return reached == total;
}

namespace {

// argmin_y sum_s w_s |x_s - y|^p by cyclic golden-section over the two axes.
std::array<double, 2> best_response(const std::vector<std::array<double, 2>>& xs, const std::vector<double>& w,
                                    double p, std::array<double, 2> y, const Grid& g) {
  double m = 0.0, bx = 0.0, by = 0.0;
  for (std::size_t s = 0; s < xs.size(); ++s) m += w[s], bx += w[s] * xs[s][0], by += w[s] * xs[s][1];
  if (m <= 0.0) return y;
  if (p == 2.0) return {bx / m, by / m};
  auto f = [&](double a, double b) {
    double s = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) s += w[k] * std::pow(std::hypot(xs[k][0] - a, xs[k][1] - b), p);
    return s;
  };
  const double r = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int sweep = 0; sweep < 40; ++sweep) {
    const std::array<double, 2> before = y;
    for (int axis = 0; axis < 2; ++axis) {
      double lo = 0.0, hi = axis == 0 ? g.width() : g.height();
      auto at = [&](double t) { return axis == 0 ? f(t, y[1]) : f(y[0], t); };
      double c = hi - r * (hi - lo), d = lo + r * (hi - lo);
      double fc = at(c), fd = at(d);
      while (hi - lo > 1e-10 * g.width()) {
        if (fc < fd) {
          hi = d, d = c, fd = fc;
          c = hi - r * (hi - lo), fc = at(c);
        } else {
          lo = c, c = d, fc = fd;
          d = lo + r * (hi - lo), fd = at(d);
        }
      }
      y[axis] = 0.5 * (lo + hi);
    }
    if (std::hypot(y[0] - before[0], y[1] - before[1]) <= 1e-9 * g.width()) break;
  }
  return y;
}

// Euclidean projection onto the probability simplex.
std::vector<double> project_simplex(std::vector<double> v) {
  std::vector<double> s = v;
  std::sort(s.begin(), s.end(), std::greater<>());
  double cum = 0.0, tau = 0.0;
  for (std::size_t k = 0; k < s.size(); ++k) {
    cum += s[k];
    const double t = (cum - 1.0) / static_cast<double>(k + 1);
    if (s[k] - t > 0.0) tau = t;
  }
  for (double& x : v) x = std::max(0.0, x - tau);
  return v;
}

DiscreteMeasure positive_atoms(const std::vector<std::array<double, 2>>& y, const std::vector<double>& a) {
  DiscreteMeasure nu(2);
  for (std::size_t k = 0; k < y.size(); ++k)
    if (a[k] > 0.0) nu.add({y[k][0], y[k][1]}, a[k]);
  return nu;
}

double g_slope(const ConcentrationSpec& g, double a) {
  const double d = 1e-7;
  if (a > d) return (g.g(a + d) - g.g(a - d)) / (2.0 * d);
  return (g.g(a + d) - g.g(a)) / d;
}

CitySolution atomic_branch(std::size_t k, double p, const SpreadSpec& spread, const ConcentrationSpec& g,
                           const Grid& grid, double tol, const AtomicOptions& opt, const DiscreteMeasure& centers) {
  std::vector<std::array<double, 2>> y(k);
  std::vector<double> a(k, 1.0 / static_cast<double>(k));
  for (std::size_t j = 0; j < k; ++j)
    y[j] = {(static_cast<double>(j) + 0.5) / static_cast<double>(k) * grid.width(), 0.5 * grid.height()};

  CityOptions inner;
  inner.theta = opt.theta;
  CitySolution best;
  best.value.total = kInfinity;
  ScalarField mu = uniform_density(grid);
  double value = kInfinity;
  std::size_t outer = 0;
  bool converged = false;
  std::vector<double> history;
  double change = 0.0;
  for (; outer < opt.max_outer; ++outer) {
    // mu-step.
    inner.initial_mu = &mu;
    CitySolution s = solve_p_nu(positive_atoms(y, a), p, spread, grid, tol, inner);
    mu = s.mu;

    // Positions: best response to the current plan.
    DiscreteMeasure nu = positive_atoms(y, a);
    Response r = respond(mu, nu, centers, p);
    std::vector<std::size_t> live;
    for (std::size_t j = 0; j < k; ++j)
      if (a[j] > 0.0) live.push_back(j);
    std::vector<std::array<double, 2>> xs(r.support.size());
    for (std::size_t q = 0; q < r.support.size(); ++q) xs[q] = {centers.point(r.support[q])[0], centers.point(r.support[q])[1]};
    for (std::size_t col = 0; col < live.size(); ++col) {
      std::vector<double> w(r.support.size());
      for (std::size_t q = 0; q < r.support.size(); ++q) w[q] = r.plan(q, col);
      y[live[col]] = best_response(xs, w, p, y[live[col]], grid);
    }

    // Sizes: projected gradient on T(mu, sum a delta_y) + sum g(a).
    auto objective = [&](const std::vector<double>& aa, Response* out) {
      Response rr = respond(mu, positive_atoms(y, aa), centers, p);
      double v = rr.transport;
      for (double x : aa) v += g.g(x);
      if (out) *out = std::move(rr);
      return v;
    };
    r = Response{};
    double phi = objective(a, &r);
    double step = 0.1;
    for (std::size_t it = 0; it < opt.size_steps && k > 1; ++it) {
      std::vector<double> grad(k, 0.0);
      std::size_t col = 0;
      for (std::size_t j = 0; j < k; ++j) grad[j] = g_slope(g, a[j]) + (a[j] > 0.0 ? r.target[col++] : 0.0);
      bool moved = false;
      for (int bt = 0; bt < 30; ++bt, step *= 0.5) {
        std::vector<double> trial(k);
        for (std::size_t j = 0; j < k; ++j) trial[j] = a[j] - step * grad[j];
        trial = project_simplex(trial);
        Response rt;
        const double pt = objective(trial, &rt);
        if (pt < phi - 1e-14) {
          a = trial, phi = pt, r = std::move(rt), moved = true;
          step *= 2.0;
          break;
        }
      }
      if (!moved) break;
    }

    CitySolution cand;
    cand.mu = mu;
    cand.nu = positive_atoms(y, a);
    const double v_new = eval_total(cand.mu, cand.nu, p, spread, g).total;
    if (v_new > value + 1e-10) break;  // reject and keep the previous configuration
    const double decrease = value - v_new;
    value = v_new;
    change = best.mu.size() ? l1_distance(cand.mu.values(), best.mu.values(), grid.area()) : 0.0;
    best = std::move(cand);
    history.push_back(v_new);
    if (decrease < tol) {
      converged = true;
      ++outer;
      break;
    }
  }
  finish(best, centers, p, spread, &g);
  best.value_history = std::move(history);
  best.change = change;
  best.iterations = outer;
  best.status = converged ? SolveStatus::Converged : SolveStatus::MaxIterations;
  best.atoms = best.nu.size();

  // Catchments: each supported cell goes to the atom receiving most of its mass.
  const Response r = respond(best.mu, best.nu, centers, p);
  best.catchment.assign(grid.cells(), -1);
  const double mmax = best.mu.max();
  for (std::size_t q = 0; q < r.support.size(); ++q) {
    if (best.mu[r.support[q]] <= 1e-9 * mmax) continue;
    std::size_t arg = 0;
    for (std::size_t j = 1; j < best.nu.size(); ++j)
      if (r.plan(q, j) > r.plan(q, arg)) arg = j;
    best.catchment[r.support[q]] = static_cast<int>(arg);
  }
  best.catchments_connected = true;
  for (std::size_t j = 0; j < best.nu.size(); ++j)
    best.catchments_connected = best.catchments_connected && label_connected(grid, best.catchment, static_cast<int>(j));
  return best;
}

}  // namespace

CitySolution minimize_with_atomic_G(double p, const SpreadSpec& spread, const ConcentrationSpec& g, std::size_t k_max,
                                    const Grid& grid, double tol, const AtomicOptions& opt) {
  if (g.kind() != ConcentrationSpec::Kind::Atomic) throw Error(ErrorCode::InvalidInput, "an atomic G is required");
  if (k_max == 0) throw Error(ErrorCode::InvalidInput, "k_max must be at least 1");
  if (!(tol > 0.0)) throw Error(ErrorCode::InvalidInput, "tol must be positive");
  const DiscreteMeasure centers = cell_centers(grid);
  std::vector<CitySolution> branches(k_max);
  std::vector<std::exception_ptr> errors(k_max);
  // Branches are independent and deterministic.
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t k = 1; k <= static_cast<std::ptrdiff_t>(k_max); ++k) {
    const auto i = static_cast<std::size_t>(k - 1);
    try {
      branches[i] = atomic_branch(i + 1, p, spread, g, grid, tol, opt, centers);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  std::size_t best = 0;
  for (std::size_t k = 1; k < k_max; ++k)
    if (branches[k].value.total < branches[best].value.total) best = k;
  return std::move(branches[best]);
}

}  // namespace cot
