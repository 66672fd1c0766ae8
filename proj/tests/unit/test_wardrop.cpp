#include <doctest.h>

#include <cmath>
#include <numeric>

#include "cot/error.hpp"
#include "cot/wardrop.hpp"

using namespace cot;

namespace {

Network pigou() {
  Network net;
  const int s = net.node("s"), t = net.node("t");
  net.add_edge(s, t), net.add_edge(s, t);
  net.add_source(s), net.add_destination(t);
  validate_network(net);
  return net;
}

Network diamond() {
  Network net;
  const int s = net.node("s"), a = net.node("a"), b = net.node("b"), t = net.node("t");
  net.add_edge(s, a), net.add_edge(a, t), net.add_edge(s, b), net.add_edge(b, t);
  net.add_source(s), net.add_destination(t);
  validate_network(net);
  return net;
}

Matrix single(double d) { return Matrix(1, 1, d); }

}  // namespace

TEST_CASE("objective and link metric") {
  const EdgeCosts costs{CongestionSpec::quadratic(), CongestionSpec::linear(2.0)};
  const std::vector<double> flows{2.0, 3.0};
  CHECK(objective(flows, costs) == doctest::Approx(2.0 + 6.0));
  CHECK(link_metric(flows, costs) == std::vector<double>{2.0, 2.0});
  CHECK(objective(flows, CongestionSpec::quadratic()) == doctest::Approx(6.5));
}

TEST_CASE("Pigou: all traffic takes the congestible link") {
  const Network net = pigou();
  const EdgeCosts costs{CongestionSpec::linear(1.0), CongestionSpec::quadratic()};
  const auto r = solve_fixed_demand(net, costs, single(1.0), 1e-8, 10000);
  CHECK(r.status == SolveStatus::Converged);
  CHECK(r.objective == doctest::Approx(0.5).epsilon(1e-7));
  CHECK(r.flows[1] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(r.relative_gap <= 1e-8);
  CHECK(verify_wardrop(net, r).max_excess <= 1e-4);
}

TEST_CASE("diamond splits evenly") {
  const Network net = diamond();
  const auto r = solve_fixed_demand(net, uniform_costs(net, CongestionSpec::quadratic()), single(2.0), 1e-9, 10000);
  for (double f : r.flows) CHECK(f == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(r.objective == doctest::Approx(2.0).epsilon(1e-8));
}

TEST_CASE("objective history never increases") {
  const Network net = diamond();
  const EdgeCosts costs{CongestionSpec::monomial(3.0), CongestionSpec::affine_power(0.2, 2.0),
                        CongestionSpec::quadratic(), CongestionSpec::linear(0.7)};
  const auto r = solve_fixed_demand(net, costs, single(1.3), 1e-8, 10000);
  for (std::size_t k = 1; k < r.objective_history.size(); ++k)
    CHECK(r.objective_history[k] <= r.objective_history[k - 1] + 1e-12);
  CHECK(r.objective == doctest::Approx(brute_force_equilibrium(net, costs, DemandSpec::fixed(single(1.3))).objective)
                           .epsilon(1e-6));
}

TEST_CASE("all-or-nothing routes along the shortest path") {
  const Network net = diamond();
  const auto flows = all_or_nothing(net, std::vector<double>{1.0, 1.0, 0.2, 0.3}, single(2.0));
  CHECK(flows == std::vector<double>{0.0, 0.0, 2.0, 2.0});
}

TEST_CASE("path decomposition reproduces link flows and demand") {
  const Network net = diamond();
  const auto r = solve_fixed_demand(net, uniform_costs(net, CongestionSpec::quadratic()), single(2.0), 1e-9, 10000);
  const auto paths = decompose_flows(net, r.flows, r.coupling, r.xi);
  std::vector<double> rebuilt(net.edge_count(), 0.0);
  double total = 0.0;
  for (const PathFlow& pf : paths) {
    total += pf.flow;
    for (int e : pf.path.edges) rebuilt[static_cast<std::size_t>(e)] += pf.flow;
  }
  CHECK(total == doctest::Approx(2.0));
  for (std::size_t e = 0; e < rebuilt.size(); ++e) CHECK(rebuilt[e] == doctest::Approx(r.flows[e]).epsilon(1e-9));
}

TEST_CASE("variable demand with two sources and two sinks") {
  Network net;
  const int s1 = net.node("s1"), s2 = net.node("s2"), d1 = net.node("d1"), d2 = net.node("d2");
  net.add_edge(s1, d1), net.add_edge(s1, d2), net.add_edge(s2, d1), net.add_edge(s2, d2);
  net.add_source(s1), net.add_source(s2), net.add_destination(d1), net.add_destination(d2);
  validate_network(net);
  // Cross links are expensive, so the coupling stays on the diagonal.
  const EdgeCosts costs{CongestionSpec::quadratic(), CongestionSpec::linear(5.0), CongestionSpec::linear(5.0),
                        CongestionSpec::quadratic()};
  const std::vector<double> mu{0.5, 0.5}, nu{0.5, 0.5};
  const auto r = solve_variable_demand(net, costs, mu, nu, 1e-9, 10000);
  CHECK(r.coupling(0, 0) == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(r.coupling(1, 1) == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(r.objective == doctest::Approx(0.25).epsilon(1e-7));
  CHECK_THROWS_AS(solve_variable_demand(net, costs, mu, std::vector<double>{0.5, 0.6}, 1e-9, 100), Error);
}

TEST_CASE("demand validation") {
  const Network net = pigou();
  const EdgeCosts costs = uniform_costs(net, CongestionSpec::quadratic());
  CHECK_THROWS_AS(solve_fixed_demand(net, costs, single(-1.0), 1e-8, 100), Error);
  CHECK_THROWS_AS(solve_fixed_demand(net, costs, Matrix(2, 1, 1.0), 1e-8, 100), Error);
}
