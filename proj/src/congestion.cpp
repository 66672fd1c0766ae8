#include "cot/congestion.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cot/error.hpp"
#include "cot/network.hpp"

namespace cot {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::InvalidInput, what);
}

std::string fmt_num(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

// Root of an increasing function on [lo, hi] with phi(lo) <= 0 <= phi(hi).
// Newton steps with bisection as a fallback.
template <class F, class DF>
double safeguarded_root(F phi, DF dphi, double lo, double hi) {
  double x = hi;
  for (int it = 0; it < 100; ++it) {
    const double fx = phi(x);
    if (fx == 0.0) return x;
    if (fx > 0.0) hi = x; else lo = x;
    const double d = dphi(x);
    double next = d > 0.0 ? x - fx / d : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) <= 1e-15 * std::max(1.0, std::abs(x)) || hi - lo <= 1e-15 * std::max(1.0, hi))
      return next;
    x = next;
  }
  return x;
}

}  // namespace

CongestionSpec CongestionSpec::quadratic() {
  CongestionSpec s;
  s.family_ = Family::Quadratic;
  s.a_ = 0.0;
  s.p_ = 2.0;
  return s;
}

CongestionSpec CongestionSpec::linear(double a) {
  require(a >= 0.0 && std::isfinite(a), "linear coefficient must be finite and >= 0");
  CongestionSpec s;
  s.family_ = Family::Linear;
  s.a_ = a;
  s.p_ = 0.0;
  return s;
}

CongestionSpec CongestionSpec::affine_power(double a, double p) {
  require(a >= 0.0 && std::isfinite(a), "affine coefficient must be finite and >= 0");
  require(p > 1.0 && std::isfinite(p), "power exponent must exceed 1");
  CongestionSpec s;
  s.family_ = Family::AffinePower;
  s.a_ = a;
  s.p_ = p;
  return s;
}

CongestionSpec CongestionSpec::monomial(double p) {
  require(p > 1.0 && std::isfinite(p), "power exponent must exceed 1");
  CongestionSpec s;
  s.family_ = Family::Monomial;
  s.a_ = 0.0;
  s.p_ = p;
  return s;
}

CongestionSpec CongestionSpec::custom(std::function<double(double)> H, std::function<double(double)> g) {
  require(static_cast<bool>(H) && static_cast<bool>(g), "custom congestion needs H and g");
  CongestionSpec s;
  s.family_ = Family::Custom;
  s.H_ = std::move(H);
  s.g_ = std::move(g);
  require(std::abs(s.H_(0.0)) <= 1e-14, "custom H must satisfy H(0) = 0");
  s.check_consistency();
  return s;
}

CongestionSpec CongestionSpec::parse(const std::string& text) {
  std::istringstream in(text);
  std::string name;
  in >> name;
  auto number = [&](const char* what) {
    double v;
    if (!(in >> v)) throw Error(ErrorCode::ParseError, std::string("congestion spec '") + text + "' lacks " + what);
    return v;
  };
  CongestionSpec spec = quadratic();
  if (name == "quadratic") {
    spec = quadratic();
  } else if (name == "linear") {
    spec = linear(number("coefficient"));
  } else if (name == "affine_power") {
    const double a = number("coefficient");
    spec = affine_power(a, number("exponent"));
  } else if (name == "monomial") {
    spec = monomial(number("exponent"));
  } else {
    throw Error(ErrorCode::ParseError, "unknown congestion family '" + name + "'");
  }
  std::string rest;
  if (in >> rest) throw Error(ErrorCode::ParseError, "trailing tokens in congestion spec '" + text + "'");
  return spec;
}

CongestionSpec CongestionSpec::scaled(double c) const {
  require(c > 0.0 && std::isfinite(c), "scale must be positive");
  CongestionSpec s = *this;
  s.scale_ *= c;
  return s;
}

double CongestionSpec::cost(double t) const {
  switch (family_) {
    case Family::Quadratic: return scale_ * 0.5 * t * t;
    case Family::Linear: return scale_ * a_ * t;
    case Family::AffinePower:
    case Family::Monomial: return scale_ * (a_ * t + std::pow(t, p_) / p_);
    case Family::Custom: return scale_ * H_(t);
  }
  return 0.0;
}

double CongestionSpec::marginal(double t) const {
  switch (family_) {
    case Family::Quadratic: return scale_ * t;
    case Family::Linear: return scale_ * a_;
    case Family::AffinePower:
    case Family::Monomial: return scale_ * (a_ + std::pow(t, p_ - 1.0));
    case Family::Custom: return scale_ * g_(t);
  }
  return 0.0;
}

double CongestionSpec::prox(double t, double step) const {
  if (t <= 0.0) return 0.0;
  const double k = step * scale_;
  switch (family_) {
    case Family::Quadratic: return t / (1.0 + k);
    case Family::Linear: return std::max(0.0, t - k * a_);
    case Family::AffinePower:
    case Family::Monomial: {
      // Optimality: s + k (a + s^{p-1}) = t, active only past the threshold k a.
      const double excess = t - k * a_;
      if (excess <= 0.0) return 0.0;
      if (p_ == 2.0) return excess / (1.0 + k);
      const double q = p_ - 1.0;
      auto phi = [&](double s) { return s + k * std::pow(s, q) - excess; };
      auto dphi = [&](double s) { return 1.0 + k * q * std::pow(s, q - 1.0); };
      return safeguarded_root(phi, dphi, 0.0, excess);
    }
    case Family::Custom: {
      if (t <= k * g_(0.0)) return 0.0;
      double lo = 0.0, hi = t;
      for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, hi); ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid + k * g_(mid) > t) hi = mid; else lo = mid;
      }
      return 0.5 * (lo + hi);
    }
  }
  return 0.0;
}

double CongestionSpec::conjugate(double s) const {
  // H* for c h is c h*(s / c).
  const double sig = s / scale_;
  switch (family_) {
    case Family::Quadratic: {
      const double sp = std::max(0.0, sig);
      return scale_ * 0.5 * sp * sp;
    }
    case Family::Linear: return sig <= a_ ? 0.0 : kInfinity;
    case Family::AffinePower:
    case Family::Monomial: {
      const double q = p_ / (p_ - 1.0);
      const double ex = std::max(0.0, sig - a_);
      return scale_ * std::pow(ex, q) / q;
    }
    case Family::Custom: {
      if (sig <= g_(0.0)) return 0.0;
      double hi = 1.0;
      while (g_(hi) < sig) {
        hi *= 2.0;
        if (hi > 1e15) return kInfinity;
      }
      double lo = 0.0;
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (g_(mid) < sig) lo = mid; else hi = mid;
      }
      const double t = 0.5 * (lo + hi);
      return scale_ * (sig * t - H_(t));
    }
  }
  return 0.0;
}

std::string CongestionSpec::describe() const {
  std::string base;
  switch (family_) {
    case Family::Quadratic: base = "quadratic"; break;
    case Family::Linear: base = "linear " + fmt_num(a_); break;
    case Family::AffinePower: base = "affine_power " + fmt_num(a_) + " " + fmt_num(p_); break;
    case Family::Monomial: base = "monomial " + fmt_num(p_); break;
    case Family::Custom: base = "custom"; break;
  }
  if (scale_ != 1.0) base += " x" + fmt_num(scale_);
  return base;
}

void CongestionSpec::check_consistency() const {
  constexpr double h = 1e-5;
  for (double t : {0.1, 1.0, 10.0}) {
    const double fd = (cost(t + h) - cost(t - h)) / (2.0 * h);
    const double g = marginal(t);
    if (!(std::abs(fd - g) <= 1e-6 * std::max(1.0, std::abs(g))))
      throw Error(ErrorCode::InvalidInput, "g is not the derivative of H at t = " + fmt_num(t));
  }
}

}  // namespace cot
