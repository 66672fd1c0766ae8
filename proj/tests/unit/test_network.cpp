#include <doctest.h>

#include <cmath>
#include <functional>

#include "cot/congestion.hpp"
#include "cot/error.hpp"
#include "cot/network.hpp"

using namespace cot;

namespace {

Network diamond() {
  Network net;
  const int s = net.node("s"), a = net.node("a"), b = net.node("b"), t = net.node("t");
  net.add_edge(s, a), net.add_edge(a, t), net.add_edge(s, b), net.add_edge(b, t);
  net.add_source(s), net.add_destination(t);
  validate_network(net);
  return net;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected cot::Error");
  return ErrorCode::InvalidInput;
}

}  // namespace

TEST_CASE("congestion families: cost, marginal, prox and conjugate") {
  const auto q = CongestionSpec::quadratic();
  CHECK(q.cost(3.0) == doctest::Approx(4.5));
  CHECK(q.marginal(3.0) == doctest::Approx(3.0));
  CHECK(q.prox(2.0, 1.0) == doctest::Approx(1.0));
  CHECK(q.conjugate(2.0) == doctest::Approx(2.0));

  const auto ap = CongestionSpec::affine_power(0.5, 3.0);
  CHECK(ap.cost(2.0) == doctest::Approx(1.0 + 8.0 / 3.0));
  CHECK(ap.marginal(2.0) == doctest::Approx(4.5));
  // Prox optimality: marginal(s) + (s - t) / step = 0.
  const double s = ap.prox(3.0, 0.7);
  CHECK(ap.marginal(s) + (s - 3.0) / 0.7 == doctest::Approx(0.0).epsilon(1e-9));

  const auto lin = CongestionSpec::linear(2.0);
  CHECK(lin.prox(5.0, 1.0) == doctest::Approx(3.0));
  CHECK(lin.prox(1.0, 1.0) == doctest::Approx(0.0));
  CHECK(lin.conjugate(1.5) == doctest::Approx(0.0));
  CHECK(std::isinf(lin.conjugate(2.5)));

  const auto m = CongestionSpec::monomial(3.0).scaled(2.0);
  CHECK(m.cost(3.0) == doctest::Approx(18.0));
  CHECK(m.marginal(3.0) == doctest::Approx(18.0));
}

TEST_CASE("congestion parse round trip and consistency check") {
  for (const char* text : {"quadratic", "linear 0.3", "affine_power 0.2 2.5", "monomial 4"}) {
    const auto spec = CongestionSpec::parse(text);
    CHECK(CongestionSpec::parse(spec.describe()).cost(1.7) == doctest::Approx(spec.cost(1.7)));
    CHECK_NOTHROW(spec.check_consistency());
  }
  CHECK(code_of([] { CongestionSpec::parse("cubic"); }) == ErrorCode::ParseError);
  CHECK(code_of([] { CongestionSpec::monomial(1.0); }) == ErrorCode::InvalidInput);
  // g must be the derivative of H.
  CHECK(code_of([] {
          CongestionSpec::custom([](double t) { return t * t; }, [](double t) { return t; }).check_consistency();
        }) == ErrorCode::InvalidInput);
}

TEST_CASE("network validation") {
  CHECK_NOTHROW(diamond());
  CHECK(code_of([] {
          Network net;
          net.add_edge(net.node("s"), net.node("s"));
          net.add_source(0), net.add_destination(0);
          validate_network(net);
        }) == ErrorCode::SelfLoop);
  CHECK(code_of([] {
          Network net;
          const int s = net.node("s"), t = net.node("t");
          net.add_edge(t, s);
          net.add_source(s), net.add_destination(t);
          validate_network(net);
        }) == ErrorCode::Unreachable);
  CHECK(code_of([] {
          Network net;
          net.add_edge(net.node("s"), net.node("t"));
          net.add_source(0);
          validate_network(net);
        }) == ErrorCode::InvalidInput);
}

TEST_CASE("shortest distances and path enumeration on the diamond") {
  const Network net = diamond();
  const std::vector<double> xi{1.0, 2.0, 0.5, 4.0};
  const auto table = shortest_distances(net, xi);
  CHECK(table.distance(0, 0) == doctest::Approx(3.0));
  CHECK(table.witness[0][0] == std::vector<int>{0, 1});
  const auto paths = enumerate_paths(net);
  REQUIRE(paths.size() == 2);
  for (const Path& p : paths) CHECK(is_connected_path(net, p));
  CHECK(path_length(paths[1].edges, xi) == doctest::Approx(4.5));
  CHECK(code_of([] { shortest_distances(diamond(), std::vector<double>{1.0, -1.0, 1.0, 1.0}); }) ==
        ErrorCode::NegativeMetric);
}
