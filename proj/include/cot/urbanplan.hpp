#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "cot/error.hpp"
#include "cot/grid.hpp"
#include "cot/kantorovich.hpp"

namespace cot {

/// Convex superlinear spread cost f on [0, inf) with f(0) = 0.
///   quadratic c:  f(t) = c t^2,        (f')^-1(s) = s / (2c)
///   power m c:    f(t) = c t^m / m,    (f')^-1(s) = (s / c)^(1 / (m - 1)),  m > 1
class SpreadSpec {
 public:
  enum class Family { Quadratic, Power };

  static SpreadSpec quadratic(double scale = 1.0);
  static SpreadSpec power(double m, double scale = 1.0);

  double value(double t) const;
  double derivative(double t) const;
  /// (f')^-1 on s >= 0; returns 0 for s <= 0.
  double inverse_derivative(double s) const;

  Family family() const { return family_; }
  double exponent() const { return m_; }
  double scale() const { return scale_; }
  std::string describe() const;

  /// Midpoint convexity at 20 seeded random triples and f'((f')^-1(s)) = s
  /// within 1e-8 at s in {0.1, 1, 10}. Throws InvalidInput otherwise.
  void check() const;

 private:
  SpreadSpec(Family f, double m, double scale) : family_(f), m_(m), scale_(scale) {}
  Family family_;
  double m_;
  double scale_;
};

/// Concentration cost G of the service measure nu.
///   Atomic g:       G(nu) = sum_k g(a_k) for nu = sum_k a_k delta_{y_k}, +inf for non-atomic nu
///   Interaction h:  G(nu) = sum_k sum_l h(|y_k - y_l|) a_k a_l
/// Construction checks g(0) = 0 and subadditivity (atomic) or monotonicity
/// (interaction) at sampled points and throws InvalidInput on violation.
class ConcentrationSpec {
 public:
  enum class Kind { Atomic, Interaction };

  static ConcentrationSpec atomic(std::function<double(double)> g, std::string name = "custom");
  /// g(a) = coefficient * a^exponent, subadditive for exponent in (0, 1].
  static ConcentrationSpec atomic_power(double coefficient, double exponent);
  /// `dh` is the derivative of h, used by the position gradient.
  static ConcentrationSpec interaction(std::function<double(double)> h, std::function<double(double)> dh,
                                       std::string name = "custom");
  /// h(r) = coefficient * r^exponent.
  static ConcentrationSpec interaction_power(double coefficient, double exponent);

  Kind kind() const { return kind_; }
  double g(double a) const { return fn_(a); }
  double h(double r) const { return fn_(r); }
  double dh(double r) const { return dfn_ ? dfn_(r) : 0.0; }
  const std::string& name() const { return name_; }

 private:
  ConcentrationSpec(Kind k, std::function<double(double)> fn, std::function<double(double)> dfn, std::string name);
  Kind kind_;
  std::function<double(double)> fn_;
  std::function<double(double)> dfn_;
  std::string name_;
};

struct CityValue {
  double transport = 0.0;      // W_p^p(mu, nu)
  double spread = 0.0;         // h^2 sum f(u)
  double concentration = 0.0;  // G(nu); +inf when nu is not admissible
  double total = 0.0;
};

/// Value of T + F + G with T = W_p^p between the cell masses of mu (at cell
/// centers) and nu. Throws MassMismatch unless both have unit mass within 1e-8.
CityValue eval_total(const ScalarField& mu, const DiscreteMeasure& nu, double p, const SpreadSpec& spread,
                     const ConcentrationSpec& conc);
/// Density version of nu; an Atomic G is +inf here.
CityValue eval_total(const ScalarField& mu, const ScalarField& nu, double p, const SpreadSpec& spread,
                     const ConcentrationSpec& conc);

struct CitySolution {
  ScalarField mu;
  DiscreteMeasure nu{2};
  CityValue value;
  ScalarField potential;  // source potential, c-transform extended to every cell
  double multiplier = 0.0;  // C with h^2 sum (f')^-1((C - psi)_+) = 1
  double residual = 0.0;    // h^2 sum |mu - (f')^-1((C - psi)_+)|
  double change = 0.0;      // last h^2 sum |mu_new - mu|
  std::size_t iterations = 0;
  SolveStatus status = SolveStatus::Converged;
  std::vector<double> value_history;  // accepted outer values
  // Quadratic city: L1 distance to the closed-form profile about the
  // barycenter of mu, and its radius; NaN for the other solvers.
  double reference_l1 = std::numeric_limits<double>::quiet_NaN();
  double reference_radius = std::numeric_limits<double>::quiet_NaN();
  // Atomic G: atom count chosen, per-cell atom index (-1 off the support) and
  // whether every atom's catchment is 4-connected.
  std::size_t atoms = 0;
  std::vector<int> catchment;
  bool catchments_connected = true;
};

struct CityOptions {
  double theta = 0.3;         // damping of the mu fixed point
  std::size_t max_iter = 500;
  const ScalarField* initial_mu = nullptr;  // default: uniform
};

/// min_mu W_p^p(mu, nu) + F(mu) for fixed atomic nu on the cell grid, by the
/// damped fixed point mu <- (1 - theta) mu + theta (f')^-1((C - psi_mu)_+).
/// Stops when h^2 sum |mu_new - mu| <= tol; otherwise returns the last iterate
/// with MaxIterations. Throws BisectionFailure when the bracket for C passes 1e6.
CitySolution solve_p_nu(const DiscreteMeasure& nu, double p, const SpreadSpec& spread, const Grid& grid, double tol,
                        const CityOptions& opt = {});

/// (2 (2 lambda + 1) / (pi lambda))^(1/4): radius of the optimal city for
/// f(t) = t^2, p = 2 and G = lambda * sum |x - y|^2 nu nu in the plane.
double quadratic_city_radius(double lambda);

struct QuadraticCityOptions {
  std::size_t atoms_per_side = 12;  // nu is carried by K x K equal-mass atoms
  double theta = 0.3;
  std::size_t max_iter = 400;
};

/// Alternating minimization for f(t) = t^2, p = 2, G = lambda sum |y_k - y_l|^2 a_k a_l.
/// Each outer step takes one damped mu step, halving theta until the value
/// does not increase, then moves every atom to the minimizer of the coupled
/// quadratic bound (T_j + 2 lambda x_bar) / (1 + 2 lambda), T_j being the
/// barycenter of the mass it receives. Stops when the value decreases by less
/// than tol. Throws DomainTooSmall when the grid cannot hold the ball of
/// radius quadratic_city_radius(lambda) about its center.
CitySolution solve_quadratic_city(double lambda, const Grid& grid, double tol, const QuadraticCityOptions& opt = {});

struct AtomicOptions {
  double theta = 0.3;
  std::size_t max_outer = 40;
  std::size_t size_steps = 8;  // projected-gradient steps on the sizes per outer step
};

/// For each k in 1..k_max: start from k equal atoms spread along the
/// horizontal midline, then alternate solve_p_nu, best-response atom
/// positions (coordinate descent on sum gamma_j |x - y|^p) and projected
/// gradient on the sizes. Returns the k with the lowest value.
CitySolution minimize_with_atomic_G(double p, const SpreadSpec& spread, const ConcentrationSpec& g, std::size_t k_max,
                                    const Grid& grid, double tol, const AtomicOptions& opt = {});

/// True when the cells labelled `label` form one 4-connected component (or none).
bool label_connected(const Grid& grid, const std::vector<int>& labels, int label);

}  // namespace cot
