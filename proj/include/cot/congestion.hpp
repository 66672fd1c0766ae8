#pragma once

#include <functional>
#include <string>

namespace cot {

/// Convex nondecreasing congestion cost H on [0, inf) with H(0) = 0, its
/// derivative g = H' (unit cost at a given flow), the proximal map of H and
/// its convex conjugate.
///
/// Closed-form families, all optionally multiplied by a positive scale c:
///   quadratic        H(t) = t^2 / 2
///   linear a         H(t) = a t
///   affine_power a p H(t) = a t + t^p / p      (a >= 0, p > 1)
///   monomial p       H(t) = t^p / p            (p > 1)
/// A custom (H, g) pair is also accepted; its prox and conjugate are computed
/// numerically.
class CongestionSpec {
 public:
  enum class Family { Quadratic, Linear, AffinePower, Monomial, Custom };

  static CongestionSpec quadratic();
  static CongestionSpec linear(double a);
  static CongestionSpec affine_power(double a, double p);
  static CongestionSpec monomial(double p);
  static CongestionSpec custom(std::function<double(double)> H, std::function<double(double)> g);

  /// Parses "quadratic", "linear a", "affine_power a p" or "monomial p".
  static CongestionSpec parse(const std::string& text);

  /// c * H for c > 0.
  CongestionSpec scaled(double c) const;

  double cost(double t) const;
  double marginal(double t) const;
  /// argmin_{s >= 0} H(s) + (s - t)^2 / (2 step), for t >= 0 and step > 0.
  double prox(double t, double step) const;
  /// H*(s) = sup_{t >= 0} s t - H(t); +inf where unbounded.
  double conjugate(double s) const;

  Family family() const { return family_; }
  double scale() const { return scale_; }
  double linear_coefficient() const { return a_; }
  double exponent() const { return p_; }
  std::string describe() const;

  /// Central-difference check of g against H at t in {0.1, 1, 10}; throws
  /// InvalidInput when |fd - g| > 1e-6 * max(1, |g|).
  void check_consistency() const;

 private:
  CongestionSpec() = default;

  Family family_ = Family::Quadratic;
  double a_ = 0.0;      // linear coefficient
  double p_ = 2.0;      // power exponent; unused for Linear
  double scale_ = 1.0;  // overall multiplier
  std::function<double(double)> H_;
  std::function<double(double)> g_;
};

}  // namespace cot
