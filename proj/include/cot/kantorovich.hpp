#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "cot/matrix.hpp"

namespace cot {

/// Weighted point masses in R^dim. Points are stored contiguously.
class DiscreteMeasure {
 public:
  explicit DiscreteMeasure(std::size_t dim = 1) : dim_(dim) {}

  void add(std::span<const double> point, double weight);
  void add(std::initializer_list<double> point, double weight) {
    add(std::span<const double>(point.begin(), point.size()), weight);
  }

  std::size_t size() const { return weights_.size(); }
  std::size_t dim() const { return dim_; }
  std::span<const double> point(std::size_t i) const { return {coords_.data() + i * dim_, dim_}; }
  double weight(std::size_t i) const { return weights_[i]; }
  const std::vector<double>& weights() const { return weights_; }
  std::vector<double>& weights() { return weights_; }
  double total_mass() const;

 private:
  std::size_t dim_;
  std::vector<double> coords_;
  std::vector<double> weights_;
};

using PointCost = std::function<double(std::span<const double>, std::span<const double>)>;

/// |x - y|^p with the Euclidean norm.
double lp_cost(std::span<const double> x, std::span<const double> y, double p);
PointCost lp_point_cost(double p);

Matrix cost_matrix(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const PointCost& cost);

/// Dual pair for max sum(phi mu) + sum(psi nu) s.t. phi(x) + psi(y) <= c(x, y).
struct PotentialPair {
  std::vector<double> phi;  // source side
  std::vector<double> psi;  // target side
};

struct TransportResult {
  Matrix plan;
  PotentialPair potentials;
  double value = 0.0;       // sum plan * cost
  double dual_value = 0.0;  // sum phi mu + sum psi nu
  std::size_t pivots = 0;
};

/// Exact discrete optimal transport by a primal network simplex on the
/// complete bipartite graph. Potentials are normalized so that phi[0] = 0.
/// Throws MassMismatch when the totals differ by more than 1e-10 relative and
/// NonFiniteCost for inf/nan costs.
TransportResult solve_discrete_ot(std::span<const double> mu, std::span<const double> nu, const Matrix& cost);
TransportResult solve_discrete_ot(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const Matrix& cost);

/// W_p^p (the p-th power) for the Euclidean ground metric.
double wasserstein_pp(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p);
/// W_p itself.
double wasserstein(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p);

/// Largest violations of the coupling and potential invariants.
struct CertificateReport {
  double marginal_error = 0.0;      // max |row/col sum - weight|
  double feasibility_excess = 0.0;  // max(phi + psi - c), clamped at 0
  double slackness_error = 0.0;     // max |phi + psi - c| over plan > 1e-8
  double duality_gap = 0.0;         // |value - dual_value|
};
CertificateReport certify(const TransportResult& r, std::span<const double> mu, std::span<const double> nu,
                          const Matrix& cost);

/// Whether the bipartite support graph {plan > tol} connects every node of
/// positive mass. When it does, the potentials are unique up to a constant.
bool support_connected(const Matrix& plan, std::span<const double> mu, std::span<const double> nu,
                       double tol = 1e-12);

/// psi(x) = min_j c(x, y_j) - phi_j, the c-transform of a target-side potential.
std::vector<double> c_transform(const DiscreteMeasure& xs, const DiscreteMeasure& ys,
                                std::span<const double> target_potential, const PointCost& cost);

struct GateauxReport {
  std::vector<double> eps;
  std::vector<double> finite_difference;
  std::vector<double> error;  // |fd - inner| per eps
  double inner = 0.0;         // sum psi (mu1 - mu)
  double max_err = 0.0;
};

/// Compares [W_p^p((1-e) mu + e mu1, nu) - W_p^p(mu, nu)] / e with
/// sum psi d(mu1 - mu), psi being the source potential of (mu, nu) extended
/// by c-transform to the union of supports. Throws DegenerateDual when the
/// optimal support graph is disconnected.
GateauxReport gateaux_check(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const DiscreteMeasure& mu1,
                            double p, std::span<const double> eps_list);

struct HotellingDemands {
  std::vector<int> region;      // consumer -> firm (lowest index on ties)
  std::vector<double> demand;   // per firm
};

/// Consumers choose the firm minimizing c(x, x_i) + p_i. A consumer tied
/// between several firms is listed under the lowest index but its mass is
/// shared equally among the tied firms, so that the demand vector pins the
/// prices down exactly (see hotelling_recover_prices).
HotellingDemands hotelling_demands(const DiscreteMeasure& firms, std::span<const double> prices,
                                   const DiscreteMeasure& consumers, const PointCost& cost);

/// Prices from demands: minus the firm-side potential of the transport from
/// sum d_i delta_{x_i} to the consumers, normalized so that the first price is 0.
std::vector<double> hotelling_recover_prices(const DiscreteMeasure& firms, std::span<const double> demands,
                                             const DiscreteMeasure& consumers, const PointCost& cost);

}  // namespace cot
