#include <doctest.h>

#include <array>
#include <cmath>

#include "cot/error.hpp"
#include "cot/urbanplan.hpp"

using namespace cot;

namespace {

const ConcentrationSpec kNoConcentration = ConcentrationSpec::interaction_power(0.0, 1.0);

double second_moment(const DiscreteMeasure& nu, double cx, double cy) {
  double s = 0.0;
  for (std::size_t k = 0; k < nu.size(); ++k)
    s += nu.weight(k) * (std::pow(nu.point(k)[0] - cx, 2) + std::pow(nu.point(k)[1] - cy, 2));
  return s;
}

std::array<double, 2> barycenter(const ScalarField& mu) {
  const Grid& g = mu.grid();
  double x = 0.0, y = 0.0, m = 0.0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) m += mu(i, j), x += mu(i, j) * g.xc(i), y += mu(i, j) * g.yc(j);
  return {x / m, y / m};
}

}  // namespace

TEST_CASE("spread families") {
  const auto q = SpreadSpec::quadratic(2.0);
  CHECK(q.value(3.0) == doctest::Approx(18.0));
  CHECK(q.inverse_derivative(4.0) == doctest::Approx(1.0));
  CHECK(q.inverse_derivative(-1.0) == 0.0);
  const auto pw = SpreadSpec::power(3.0, 1.5);
  CHECK(pw.derivative(pw.inverse_derivative(2.7)) == doctest::Approx(2.7));
  CHECK_NOTHROW(pw.check());
  CHECK_THROWS_AS(SpreadSpec::power(1.0), Error);
}

TEST_CASE("concentration invariants") {
  CHECK_NOTHROW(ConcentrationSpec::atomic_power(1.0, 0.5));
  CHECK_THROWS_AS(ConcentrationSpec::atomic([](double a) { return a * a; }, "square"), Error);
  CHECK_THROWS_AS(ConcentrationSpec::atomic([](double a) { return 1.0 + a; }, "offset"), Error);
  CHECK_THROWS_AS(ConcentrationSpec::interaction([](double r) { return -r; }, [](double) { return -1.0; }, "falling"),
                  Error);
}

TEST_CASE("eval_total on closed-form configurations") {
  const Grid g = Grid::make(8, 8, 0.125);
  const ScalarField uniform(g, 1.0);
  const auto f = SpreadSpec::quadratic();

  const auto v = eval_total(uniform, uniform, 2.0, f, kNoConcentration);
  CHECK(v.transport == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(v.spread == doctest::Approx(1.0));
  CHECK(v.total == doctest::Approx(1.0));

  CHECK(std::isinf(eval_total(uniform, uniform, 2.0, f, ConcentrationSpec::atomic_power(1.0, 0.5)).concentration));

  DiscreteMeasure two(2);
  two.add({0.25, 0.5}, 0.5), two.add({0.75, 0.5}, 0.5);
  const auto G = ConcentrationSpec::interaction_power(1.0, 2.0);
  CHECK(eval_total(uniform, two, 2.0, f, G).concentration == doctest::Approx(2.0 * 0.25 * 0.25));

  ScalarField heavy(g, 2.0);
  CHECK_THROWS_AS(eval_total(heavy, uniform, 2.0, f, kNoConcentration), Error);
}

TEST_CASE("uniform service gives a uniform city") {
  const Grid g = Grid::make(10, 10, 0.1);
  DiscreteMeasure nu(2);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) nu.add({g.xc(i), g.yc(j)}, 0.01);
  const auto sol = solve_p_nu(nu, 2.0, SpreadSpec::quadratic(), g, 1e-10);
  for (double x : sol.mu.values()) CHECK(x == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("single service point gives the truncated paraboloid") {
  const Grid g = Grid::make(64, 64, 1.0 / 64);
  DiscreteMeasure nu(2);
  nu.add({0.5, 0.5}, 1.0);
  const auto sol = solve_p_nu(nu, 2.0, SpreadSpec::quadratic(), g, 1e-9, {0.3, 2000, nullptr});
  CHECK(sol.status == SolveStatus::Converged);

  // Oracle: u = ((C - r^2) / 2)_+ with C fixed by unit mass.
  auto profile_mass = [&](double C) {
    double m = 0.0;
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i)
        m += std::max(0.0, 0.5 * (C - std::pow(g.xc(i) - 0.5, 2) - std::pow(g.yc(j) - 0.5, 2))) * g.area();
    return m;
  };
  double lo = 0.0, hi = 10.0;
  for (int it = 0; it < 200; ++it) (profile_mass(0.5 * (lo + hi)) < 1.0 ? lo : hi) = 0.5 * (lo + hi);
  const double C = 0.5 * (lo + hi);
  double l1 = 0.0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const double exact = std::max(0.0, 0.5 * (C - std::pow(g.xc(i) - 0.5, 2) - std::pow(g.yc(j) - 0.5, 2)));
      l1 += std::abs(sol.mu(i, j) - exact) * g.area();
    }
  CHECK(l1 <= 1e-3);
  CHECK(sol.residual <= 10.0 * 1e-9);
}

TEST_CASE("a costlier spread lowers the spread term and raises transport") {
  const Grid g = Grid::make(24, 24, 1.0 / 24);
  DiscreteMeasure nu(2);
  nu.add({0.3, 0.5}, 0.6), nu.add({0.7, 0.4}, 0.4);
  const auto base = solve_p_nu(nu, 2.0, SpreadSpec::quadratic(), g, 1e-8, {0.3, 2000, nullptr});
  const auto steep = solve_p_nu(nu, 2.0, SpreadSpec::quadratic(2.0), g, 1e-8, {0.3, 2000, nullptr});
  CHECK(steep.value.transport >= base.value.transport - 1e-9);
  CHECK(steep.value.spread / 2.0 <= base.value.spread + 1e-9);
}

TEST_CASE("quadratic city contracts as lambda grows") {
  const Grid g = Grid::make(30, 30, 0.1);
  double previous = 1e300;
  for (double lambda : {1.0, 4.0, 16.0}) {
    QuadraticCityOptions opt;
    opt.atoms_per_side = 6;
    const auto sol = solve_quadratic_city(lambda, g, 1e-6, opt);
    const auto c = barycenter(sol.mu);
    const double m2 = second_moment(sol.nu, c[0], c[1]);
    CHECK(m2 < previous);
    previous = m2;
  }
  CHECK_THROWS_AS(solve_quadratic_city(1.0, Grid::make(10, 10, 0.1), 1e-6), Error);
}

TEST_CASE("one pole sits at the barycenter of the city") {
  const Grid g = Grid::make(20, 20, 0.05);
  const auto sol = minimize_with_atomic_G(2.0, SpreadSpec::quadratic(), ConcentrationSpec::atomic_power(0.05, 0.5), 1, g,
                                          1e-7);
  REQUIRE(sol.nu.size() == 1);
  const auto c = barycenter(sol.mu);
  CHECK(std::abs(sol.nu.point(0)[0] - c[0]) <= 1e-6);
  CHECK(std::abs(sol.nu.point(0)[1] - c[1]) <= 1e-6);
  CHECK(sol.catchments_connected);
}

TEST_CASE("two poles on a symmetric domain are mirror images") {
  const Grid g = Grid::make(24, 24, 1.0 / 24);
  const auto sol = minimize_with_atomic_G(2.0, SpreadSpec::quadratic(), ConcentrationSpec::atomic_power(0.05, 0.5), 2, g,
                                          1e-6);
  REQUIRE(sol.nu.size() == 2);
  CHECK(std::abs(sol.nu.point(0)[0] + sol.nu.point(1)[0] - 1.0) <= g.h);
  CHECK(std::abs(sol.nu.point(0)[1] - sol.nu.point(1)[1]) <= g.h);
  CHECK(std::abs(sol.nu.weight(0) - sol.nu.weight(1)) <= 1e-3);
  CHECK(sol.catchments_connected);
  for (std::size_t k = 1; k < sol.value_history.size(); ++k)
    CHECK(sol.value_history[k] <= sol.value_history[k - 1] + 1e-12);
}

TEST_CASE("label connectivity") {
  const Grid g = Grid::make(3, 3, 1.0);
  std::vector<int> labels{0, 0, 1,
                          1, 0, 1,
                          1, 0, 0};
  CHECK(label_connected(g, labels, 0));
  CHECK_FALSE(label_connected(g, labels, 1));
  CHECK(label_connected(g, labels, 7));
}
