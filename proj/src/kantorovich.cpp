#include "cot/kantorovich.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>

#include "cot/error.hpp"
#include "network_simplex.hpp"

namespace cot {

void DiscreteMeasure::add(std::span<const double> point, double weight) {
  if (point.size() != dim_)
    throw Error(ErrorCode::ShapeMismatch, "point of dimension " + std::to_string(point.size()) +
                                              " added to a measure of dimension " + std::to_string(dim_));
  if (!(weight >= 0.0) || !std::isfinite(weight)) throw Error(ErrorCode::InvalidInput, "weights must be finite and >= 0");
  coords_.insert(coords_.end(), point.begin(), point.end());
  weights_.push_back(weight);
}

double DiscreteMeasure::total_mass() const { return std::accumulate(weights_.begin(), weights_.end(), 0.0); }

double lp_cost(std::span<const double> x, std::span<const double> y, double p) {
  double s = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double d = x[k] - y[k];
    s += d * d;
  }
  if (p == 2.0) return s;
  const double r = std::sqrt(s);
  return p == 1.0 ? r : std::pow(r, p);
}

PointCost lp_point_cost(double p) {
  if (!(p >= 1.0)) throw Error(ErrorCode::InvalidInput, "lp cost exponent must be >= 1");
  return [p](std::span<const double> x, std::span<const double> y) { return lp_cost(x, y, p); };
}

Matrix cost_matrix(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const PointCost& cost) {
  if (mu.dim() != nu.dim()) throw Error(ErrorCode::ShapeMismatch, "measures live in different dimensions");
  Matrix c(mu.size(), nu.size());
  for (std::size_t i = 0; i < mu.size(); ++i)
    for (std::size_t j = 0; j < nu.size(); ++j) c(i, j) = cost(mu.point(i), nu.point(j));
  return c;
}

namespace {

void check_weights(std::span<const double> w, const char* which) {
  for (double x : w)
    if (!(x >= 0.0) || !std::isfinite(x))
      throw Error(ErrorCode::InvalidInput, std::string(which) + " weights must be finite and >= 0");
}

void check_balance(double a, double b) {
  if (std::abs(a - b) > 1e-10 * std::max({std::abs(a), std::abs(b), 1e-300}))
    throw Error(ErrorCode::MassMismatch, "total masses differ: " + std::to_string(a) + " vs " + std::to_string(b));
}

}  // namespace

TransportResult solve_discrete_ot(std::span<const double> mu, std::span<const double> nu, const Matrix& cost) {
  if (mu.empty() || nu.empty()) throw Error(ErrorCode::InvalidInput, "empty measure");
  if (cost.rows() != mu.size() || cost.cols() != nu.size())
    throw Error(ErrorCode::ShapeMismatch, "cost matrix is " + std::to_string(cost.rows()) + "x" +
                                              std::to_string(cost.cols()) + ", measures are " +
                                              std::to_string(mu.size()) + " and " + std::to_string(nu.size()));
  check_weights(mu, "source");
  check_weights(nu, "target");
  for (double c : cost.data())
    if (!std::isfinite(c)) throw Error(ErrorCode::NonFiniteCost, "cost matrix holds inf or nan");

  const double smu = std::accumulate(mu.begin(), mu.end(), 0.0);
  const double snu = std::accumulate(nu.begin(), nu.end(), 0.0);
  check_balance(smu, snu);

  // Absorb the admitted imbalance into nu so that the simplex sees balanced data.
  std::vector<double> target(nu.begin(), nu.end());
  if (snu > 0.0 && smu != snu)
    for (double& w : target) w *= smu / snu;

  detail::TransportSimplex simplex(mu, target, cost);
  TransportResult r;
  r.pivots = simplex.run();
  r.plan = simplex.plan();

  const auto& pi = simplex.potentials();
  const std::size_t m = mu.size(), n = nu.size();
  r.potentials.phi.resize(m);
  r.potentials.psi.resize(n);
  const double shift = -pi[0];
  for (std::size_t i = 0; i < m; ++i) r.potentials.phi[i] = -pi[i] - shift;
  for (std::size_t j = 0; j < n; ++j) r.potentials.psi[j] = pi[m + j] + shift;

  for (std::size_t k = 0; k < r.plan.data().size(); ++k) r.value += r.plan.data()[k] * cost.data()[k];
  for (std::size_t i = 0; i < m; ++i) r.dual_value += r.potentials.phi[i] * mu[i];
  for (std::size_t j = 0; j < n; ++j) r.dual_value += r.potentials.psi[j] * target[j];
  return r;
}

TransportResult solve_discrete_ot(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const Matrix& cost) {
  return solve_discrete_ot(std::span<const double>(mu.weights()), std::span<const double>(nu.weights()), cost);
}

double wasserstein_pp(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p) {
  return solve_discrete_ot(mu, nu, cost_matrix(mu, nu, lp_point_cost(p))).value;
}

double wasserstein(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p) {
  return std::pow(std::max(0.0, wasserstein_pp(mu, nu, p)), 1.0 / p);
}

CertificateReport certify(const TransportResult& r, std::span<const double> mu, std::span<const double> nu,
                          const Matrix& cost) {
  CertificateReport rep;
  const auto rows = r.plan.row_sums();
  const auto cols = r.plan.col_sums();
  for (std::size_t i = 0; i < mu.size(); ++i) rep.marginal_error = std::max(rep.marginal_error, std::abs(rows[i] - mu[i]));
  for (std::size_t j = 0; j < nu.size(); ++j) rep.marginal_error = std::max(rep.marginal_error, std::abs(cols[j] - nu[j]));
  for (std::size_t i = 0; i < mu.size(); ++i) {
    for (std::size_t j = 0; j < nu.size(); ++j) {
      const double slack = r.potentials.phi[i] + r.potentials.psi[j] - cost(i, j);
      rep.feasibility_excess = std::max(rep.feasibility_excess, slack);
      if (r.plan(i, j) > 1e-8) rep.slackness_error = std::max(rep.slackness_error, std::abs(slack));
    }
  }
  rep.duality_gap = std::abs(r.value - r.dual_value);
  return rep;
}

bool support_connected(const Matrix& plan, std::span<const double> mu, std::span<const double> nu, double tol) {
  const std::size_t m = mu.size(), n = nu.size();
  std::vector<std::size_t> root(m + n);
  std::iota(root.begin(), root.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (root[x] != x) x = root[x] = root[root[x]];
    return x;
  };
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (plan(i, j) > tol) root[find(i)] = find(m + j);

  std::size_t component = m + n;
  for (std::size_t u = 0; u < m + n; ++u) {
    const double w = u < m ? mu[u] : nu[u - m];
    if (w <= tol) continue;
    const std::size_t c = find(u);
    if (component == m + n) component = c;
    else if (c != component) return false;
  }
  return true;
}

std::vector<double> c_transform(const DiscreteMeasure& xs, const DiscreteMeasure& ys,
                                std::span<const double> target_potential, const PointCost& cost) {
  std::vector<double> out(xs.size(), kInfinity);
  for (std::size_t i = 0; i < xs.size(); ++i)
    for (std::size_t j = 0; j < ys.size(); ++j)
      out[i] = std::min(out[i], cost(xs.point(i), ys.point(j)) - target_potential[j]);
  return out;
}

namespace {

// Union of the supports of a and b with weights padded by zeros.
std::pair<DiscreteMeasure, DiscreteMeasure> on_common_support(const DiscreteMeasure& a, const DiscreteMeasure& b) {
  std::map<std::vector<double>, std::size_t> index;
  DiscreteMeasure ua(a.dim()), ub(a.dim());
  auto slot = [&](std::span<const double> p) {
    std::vector<double> key(p.begin(), p.end());
    auto [it, fresh] = index.emplace(key, ua.size());
    if (fresh) {
      ua.add(p, 0.0);
      ub.add(p, 0.0);
    }
    return it->second;
  };
  for (std::size_t i = 0; i < a.size(); ++i) ua.weights()[slot(a.point(i))] += a.weight(i);
  for (std::size_t i = 0; i < b.size(); ++i) ub.weights()[slot(b.point(i))] += b.weight(i);
  return {std::move(ua), std::move(ub)};
}

}  // namespace

GateauxReport gateaux_check(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const DiscreteMeasure& mu1,
                            double p, std::span<const double> eps_list) {
  if (mu1.dim() != mu.dim()) throw Error(ErrorCode::ShapeMismatch, "mu and mu1 live in different dimensions");
  check_balance(mu.total_mass(), mu1.total_mass());
  auto [base, pert] = on_common_support(mu, mu1);
  const PointCost cost = lp_point_cost(p);
  const Matrix c = cost_matrix(base, nu, cost);
  const TransportResult r0 = solve_discrete_ot(base, nu, c);
  if (!support_connected(r0.plan, base.weights(), nu.weights(), 1e-12))
    throw Error(ErrorCode::DegenerateDual, "optimal support graph is disconnected; the potential is not unique");

  const std::vector<double> psi = c_transform(base, nu, r0.potentials.psi, cost);
  GateauxReport rep;
  for (std::size_t i = 0; i < base.size(); ++i) rep.inner += psi[i] * (pert.weight(i) - base.weight(i));

  for (double eps : eps_list) {
    DiscreteMeasure mix = base;
    for (std::size_t i = 0; i < mix.size(); ++i) mix.weights()[i] = (1.0 - eps) * base.weight(i) + eps * pert.weight(i);
    const double fd = (solve_discrete_ot(mix, nu, c).value - r0.value) / eps;
    rep.eps.push_back(eps);
    rep.finite_difference.push_back(fd);
    rep.error.push_back(std::abs(fd - rep.inner));
    rep.max_err = std::max(rep.max_err, rep.error.back());
  }
  return rep;
}

HotellingDemands hotelling_demands(const DiscreteMeasure& firms, std::span<const double> prices,
                                   const DiscreteMeasure& consumers, const PointCost& cost) {
  if (firms.size() == 0) throw Error(ErrorCode::InvalidInput, "no firms");
  if (prices.size() != firms.size()) throw Error(ErrorCode::ShapeMismatch, "one price per firm is required");
  HotellingDemands out;
  out.region.resize(consumers.size());
  out.demand.assign(firms.size(), 0.0);
  std::vector<double> total(firms.size());
  std::vector<std::size_t> tied;
  for (std::size_t x = 0; x < consumers.size(); ++x) {
    double best = kInfinity;
    for (std::size_t i = 0; i < firms.size(); ++i) {
      total[i] = cost(consumers.point(x), firms.point(i)) + prices[i];
      best = std::min(best, total[i]);
    }
    const double tol = 1e-12 * std::max(1.0, std::abs(best));
    tied.clear();
    for (std::size_t i = 0; i < firms.size(); ++i)
      if (total[i] <= best + tol) tied.push_back(i);
    out.region[x] = static_cast<int>(tied.front());
    const double share = consumers.weight(x) / static_cast<double>(tied.size());
    for (std::size_t i : tied) out.demand[i] += share;
  }
  return out;
}

std::vector<double> hotelling_recover_prices(const DiscreteMeasure& firms, std::span<const double> demands,
                                             const DiscreteMeasure& consumers, const PointCost& cost) {
  if (demands.size() != firms.size()) throw Error(ErrorCode::ShapeMismatch, "one demand per firm is required");
  DiscreteMeasure supply = firms;
  std::copy(demands.begin(), demands.end(), supply.weights().begin());
  const TransportResult r = solve_discrete_ot(supply, consumers, cost_matrix(supply, consumers, cost));
  // Consumers minimize c + p, so the firm-side potential is phi = -p.
  std::vector<double> prices(firms.size());
  for (std::size_t i = 0; i < prices.size(); ++i) prices[i] = -(r.potentials.phi[i] - r.potentials.phi[0]);
  return prices;
}

}  // namespace cot
