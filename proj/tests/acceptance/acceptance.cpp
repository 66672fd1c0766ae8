// Acceptance suite: one PASS/FAIL line per criterion. Oracles are computed
// here, independently of the solvers they check, wherever that is practical.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <json.hpp>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "cot/beckmann.hpp"
#include "cot/io.hpp"
#include "cot/kantorovich.hpp"
#include "cot/trajectories.hpp"
#include "cot/urbanplan.hpp"
#include "cot/wardrop.hpp"

namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

int failures = 0;

void criterion(int id, const char* title, double limit_seconds, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome out;
  try {
    out = body();
  } catch (const std::exception& e) {
    out = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::ostringstream time;
  time.precision(3);
  time << std::fixed << secs << "s";
  if (limit_seconds > 0.0) {
    time << " (limit " << limit_seconds << "s)";
    if (secs > limit_seconds) out.pass = false;
  }
  if (!out.pass) ++failures;
  std::printf("[%s] %2d %s: %s; %s\n", out.pass ? "PASS" : "FAIL", id, title, out.detail.c_str(), time.str().c_str());
  std::fflush(stdout);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

// ---------------------------------------------------------------- networks

struct Instance {
  std::string name;
  std::string net;
  std::vector<std::array<std::string, 3>> demand;  // source, destination, value
};

std::vector<Instance> network_suite() {
  return {
      {"pigou", "nodes 2\nedge s t linear 1\nedge s t quadratic\nsource s\ndest t\n", {{"s", "t", "1"}}},
      {"three_parallel",
       "nodes 2\nedge s t affine_power 0.2 2\nedge s t monomial 3\nedge s t linear 0.9\nsource s\ndest t\n",
       {{"s", "t", "1.5"}}},
      {"braess",
       "nodes 4\nedge s a monomial 2\nedge s b linear 1\nedge a t linear 1\nedge b t monomial 2\n"
       "edge a b linear 0.01\nsource s\ndest t\n",
       {{"s", "t", "2"}}},
      {"diamond", "nodes 4\nedge s a quadratic\nedge a t quadratic\nedge s b quadratic\nedge b t quadratic\n"
                  "source s\ndest t\n",
       {{"s", "t", "2"}}},
      {"grid_2x3",
       "nodes 6\nedge n00 n10 quadratic\nedge n10 n20 affine_power 0.3 2\nedge n01 n11 monomial 3\n"
       "edge n11 n21 quadratic\nedge n00 n01 linear 0.4\nedge n10 n11 affine_power 0.1 3\n"
       "edge n20 n21 quadratic\nsource n00\ndest n21\n",
       {{"n00", "n21", "1.2"}}},
      {"shared_link",
       "nodes 5\nedge s1 m affine_power 0.5 2\nedge s2 m affine_power 0.2 3\nedge m d1 quadratic\n"
       "edge m d2 monomial 3\nedge s1 d1 linear 2\nedge s2 d2 linear 1.5\nsource s1\nsource s2\ndest d1\ndest d2\n",
       {{"s1", "d1", "0.7"}, {"s1", "d2", "0.3"}, {"s2", "d1", "0.2"}, {"s2", "d2", "0.5"}}},
      {"parallel_chain",
       "nodes 4\nedge s a quadratic\nedge s a linear 0.5\nedge a b monomial 3\nedge a b affine_power 0.2 2\n"
       "edge b t quadratic\nedge b t linear 0.8\nsource s\ndest t\n",
       {{"s", "t", "1.4"}}},
      {"ladder_2x4",
       "nodes 8\nedge a0 a1 quadratic\nedge a1 a2 affine_power 0.1 2\nedge a2 a3 quadratic\n"
       "edge b0 b1 monomial 3\nedge b1 b2 quadratic\nedge b2 b3 affine_power 0.3 3\n"
       "edge a0 b0 linear 0.2\nedge a1 b1 quadratic\nedge a2 b2 linear 0.1\nedge a3 b3 quadratic\n"
       "edge a0 b1 affine_power 0.5 2\nedge a2 b3 monomial 2\nsource a0\ndest b3\n",
       {{"a0", "b3", "1.6"}}},
      {"two_way_link",
       "nodes 4\nedge s a quadratic\nedge s b affine_power 0.2 2\nedge a b linear 0.3\nedge b a linear 0.3\n"
       "edge a t monomial 3\nedge b t quadratic\nsource s\nsource a\ndest t\ndest b\n",
       {{"s", "t", "1"}, {"a", "b", "0.4"}, {"s", "b", "0.3"}}},
      {"mixed_7",
       "nodes 7\nedge s1 x quadratic\nedge s1 y affine_power 0.4 2\nedge s2 y quadratic\nedge s2 z monomial 3\n"
       "edge x y linear 0.2\nedge y z quadratic\nedge x d1 quadratic\nedge y d1 affine_power 0.1 3\n"
       "edge y d2 quadratic\nedge z d2 linear 0.6\nsource s1\nsource s2\ndest d1\ndest d2\n",
       {{"s1", "d1", "0.8"}, {"s1", "d2", "0.4"}, {"s2", "d1", "0.3"}, {"s2", "d2", "0.9"}}},
  };
}

struct Parsed {
  cot::NetworkFile file;
  cot::EdgeCosts costs;
  cot::Matrix gamma;
};

Parsed parse_instance(const Instance& in) {
  std::istringstream ss(in.net);
  Parsed p{cot::parse_network(ss, in.name), {}, {}};
  p.costs = p.file.resolve(cot::CongestionSpec::quadratic());
  std::string dem;
  for (const auto& d : in.demand) dem += "demand " + d[0] + " " + d[1] + " " + d[2] + "\n";
  std::istringstream ds(dem);
  p.gamma = cot::parse_demand(ds, p.file.net, in.name).gamma;
  return p;
}

// All-pairs distances by Floyd-Warshall over edge costs xi.
std::vector<std::vector<double>> floyd(const cot::Network& net, const std::vector<double>& xi) {
  const std::size_t n = net.node_count();
  std::vector<std::vector<double>> d(n, std::vector<double>(n, cot::kInfinity));
  for (std::size_t i = 0; i < n; ++i) d[i][i] = 0.0;
  for (std::size_t e = 0; e < net.edge_count(); ++e) {
    const auto& ed = net.edge(static_cast<int>(e));
    d[ed.tail][ed.head] = std::min(d[ed.tail][ed.head], xi[e]);
  }
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) d[i][j] = std::min(d[i][j], d[i][k] + d[k][j]);
  return d;
}

// ---------------------------------------------------------------- grids

cot::ScalarField random_density(const cot::Grid& g, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.1, 1.0);
  cot::ScalarField f(g);
  for (double& x : f.values()) x = u(rng);
  const double m = f.mass();
  for (double& x : f.values()) x /= m;
  return f;
}

cot::VectorField random_flow(const cot::Grid& g, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  cot::VectorField v(g);
  for (double& x : v.vx_data()) x = u(rng);
  for (double& x : v.vy_data()) x = u(rng);
  v.clear_boundary();
  return v;
}

// ---------------------------------------------------------------- CLI

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run(const std::string& cmd) { return std::system((cmd + " > /dev/null 2>&1").c_str()); }

// Report without the timing block, plus every other output file, keyed by name.
std::vector<std::pair<std::string, std::string>> snapshot(const fs::path& dir) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    std::string body = slurp(entry.path());
    if (name == "report.json") {
      auto j = nlohmann::json::parse(body);
      j.erase("timing");
      body = j.dump(2);
    }
    out.emplace_back(name, body);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

int main() {
  std::printf("acceptance suite (%s)\n", COTSOLVE_PATH);

  criterion(1, "Wardrop equilibrium on 10 networks", 5.0, [] {
    double worst_gap = 0.0, worst_excess = 0.0;
    bool ok = true;
    for (const Instance& in : network_suite()) {
      const Parsed p = parse_instance(in);
      if (cot::enumerate_paths(p.file.net).size() > 50) return Outcome{false, in.name + " has more than 50 paths"};
      const auto r = cot::solve_fixed_demand(p.file.net, p.costs, p.gamma, 1e-6, 100000);
      const auto w = cot::verify_wardrop(p.file.net, r);
      worst_gap = std::max(worst_gap, r.relative_gap);
      worst_excess = std::max(worst_excess, w.max_excess);
      ok = ok && r.status == cot::SolveStatus::Converged && r.relative_gap <= 1e-6 && w.max_excess <= 1e-4;
    }
    return Outcome{ok, "max gap " + fmt(worst_gap) + " (<= 1e-6), max excess " + fmt(worst_excess) + " (<= 1e-4)"};
  });

  criterion(2, "Brute-force objective equivalence", 0.0, [] {
    double worst = 0.0;
    std::string where;
    for (const Instance& in : network_suite()) {
      const Parsed p = parse_instance(in);
      const auto r = cot::solve_fixed_demand(p.file.net, p.costs, p.gamma, 1e-9, 100000);
      const auto b = cot::brute_force_equilibrium(p.file.net, p.costs, cot::DemandSpec::fixed(p.gamma));
      const double err = std::abs(r.objective - b.objective) / (1.0 + std::abs(b.objective));
      if (err > worst) worst = err, where = in.name;
    }
    return Outcome{worst <= 1e-5, "max |J - J_oracle| / (1 + J) " + fmt(worst) + " at " + where + " (<= 1e-5)"};
  });

  criterion(3, "Variable demand matches the Kantorovich optimum", 0.0, [] {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.2, 1.0);
    double worst = 0.0;
    for (int inst = 0; inst < 5; ++inst) {
      cot::Network net;
      const int s1 = net.node("s1"), s2 = net.node("s2"), m = net.node("m"), d1 = net.node("d1"), d2 = net.node("d2");
      net.add_edge(s1, d1), net.add_edge(s1, m), net.add_edge(s2, m), net.add_edge(s2, d2);
      net.add_edge(m, d1), net.add_edge(m, d2), net.add_edge(s1, d2), net.add_edge(s2, d1);
      net.add_source(s1), net.add_source(s2), net.add_destination(d1), net.add_destination(d2);
      cot::validate_network(net);
      cot::EdgeCosts costs;
      for (std::size_t e = 0; e < net.edge_count(); ++e) {
        const double a = u(rng);
        costs.push_back(e % 3 == 0 ? cot::CongestionSpec::affine_power(a, 2.0)
                                   : e % 3 == 1 ? cot::CongestionSpec::monomial(2.0 + a)
                                                : cot::CongestionSpec::linear(2.0 * a));
      }
      const double a1 = u(rng), a2 = u(rng), b1 = u(rng);
      const std::vector<double> mu{a1, a2}, nu{b1, a1 + a2 - b1};
      if (nu[1] <= 0.0) continue;
      const auto r = cot::solve_variable_demand(net, costs, mu, nu, 1e-9, 100000);
      const auto d = floyd(net, r.xi);
      const double c[2][2] = {{d[s1][d1], d[s1][d2]}, {d[s2][d1], d[s2][d2]}};
      double realized = 0.0;
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) realized += c[i][j] * r.coupling(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
      // 2 x 2 couplings form a segment in t = gamma(0, 0); the optimum is at an end.
      const double lo = std::max(0.0, mu[0] - nu[1]), hi = std::min(mu[0], nu[0]);
      auto cost_at = [&](double t) {
        return c[0][0] * t + c[0][1] * (mu[0] - t) + c[1][0] * (nu[0] - t) + c[1][1] * (mu[1] - nu[0] + t);
      };
      const double oracle = std::min(cost_at(lo), cost_at(hi));
      worst = std::max(worst, std::abs(realized - oracle) / std::max(1e-12, std::abs(oracle)));
    }
    return Outcome{worst <= 1e-6, "max relative difference " + fmt(worst) + " (<= 1e-6)"};
  });

  criterion(4, "OT strong duality and permutation oracle", 0.0, [] {
    std::mt19937_64 rng(4);
    double worst_dual = 0.0, worst_perm = 0.0;
    for (int inst = 0; inst < 100; ++inst) {
      std::uniform_int_distribution<int> size(1, 50);
      const std::size_t m = static_cast<std::size_t>(size(rng)), n = static_cast<std::size_t>(size(rng));
      std::uniform_real_distribution<double> w(0.01, 1.0), cst(0.0, 10.0);
      std::vector<double> a(m), b(n);
      for (double& x : a) x = w(rng);
      for (double& x : b) x = w(rng);
      const double sa = std::accumulate(a.begin(), a.end(), 0.0), sb = std::accumulate(b.begin(), b.end(), 0.0);
      for (double& x : b) x *= sa / sb;
      cot::Matrix c(m, n);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) c(i, j) = cst(rng);
      const auto r = cot::solve_discrete_ot(a, b, c);
      double primal = 0.0, dual = 0.0;
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) primal += r.plan(i, j) * c(i, j);
      for (std::size_t i = 0; i < m; ++i) dual += r.potentials.phi[i] * a[i];
      for (std::size_t j = 0; j < n; ++j) dual += r.potentials.psi[j] * b[j];
      worst_dual = std::max(worst_dual, std::abs(primal - dual) / (1.0 + std::abs(primal)));
    }
    for (std::size_t n = 1; n <= 6; ++n) {
      for (int rep = 0; rep < 5; ++rep) {
        std::uniform_real_distribution<double> cst(0.0, 1.0);
        cot::Matrix c(n, n);
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < n; ++j) c(i, j) = cst(rng);
        std::vector<double> w(n, 1.0 / static_cast<double>(n));
        const double value = cot::solve_discrete_ot(w, w, c).value;
        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        double best = cot::kInfinity;
        do {
          double s = 0.0;
          for (std::size_t i = 0; i < n; ++i) s += c(i, perm[i]) / static_cast<double>(n);
          best = std::min(best, s);
        } while (std::next_permutation(perm.begin(), perm.end()));
        worst_perm = std::max(worst_perm, std::abs(value - best));
      }
    }
    return Outcome{worst_dual <= 1e-8 && worst_perm <= 1e-10,
                   "max duality gap " + fmt(worst_dual) + " (<= 1e-8), max permutation error " + fmt(worst_perm) +
                       " (<= 1e-10)"};
  });

  criterion(5, "Transport density mass identity", 0.0, [] {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> pos(0.0, 1.0), w(0.0, 1.0);
    const cot::Grid g = cot::Grid::make(32, 32, 1.0 / 32);
    double worst = 0.0, worst_w1 = 0.0;
    for (int inst = 0; inst < 20; ++inst) {
      cot::DiscreteMeasure src(2), dst(2);
      const int m = 2 + inst % 5, n = 3 + inst % 4;
      for (int i = 0; i < m; ++i) src.add({pos(rng), pos(rng)}, 1.0);
      for (int j = 0; j < n; ++j) dst.add({pos(rng), pos(rng)}, 1.0);
      cot::Matrix gamma(static_cast<std::size_t>(m), static_cast<std::size_t>(n));
      double direct = 0.0;
      for (std::size_t i = 0; i < gamma.rows(); ++i)
        for (std::size_t j = 0; j < gamma.cols(); ++j) {
          gamma(i, j) = w(rng);
          direct += gamma(i, j) * std::hypot(src.point(i)[0] - dst.point(j)[0], src.point(i)[1] - dst.point(j)[1]);
        }
      const double mass = g.area() * [&] {
        const auto s = cot::rasterize_transport_density(gamma, src, dst, g);
        return std::accumulate(s.values().begin(), s.values().end(), 0.0);
      }();
      worst = std::max(worst, std::abs(mass - direct) / direct);

      // Optimal coupling for |x - y| between normalized marginals.
      for (auto& x : src.weights()) x = 1.0 / m;
      for (auto& x : dst.weights()) x = 1.0 / n;
      const auto ot = cot::solve_discrete_ot(src, dst, cot::cost_matrix(src, dst, cot::lp_point_cost(1.0)));
      const auto s = cot::rasterize_transport_density(ot.plan, src, dst, g);
      const double m1 = g.area() * std::accumulate(s.values().begin(), s.values().end(), 0.0);
      worst_w1 = std::max(worst_w1, std::abs(m1 - cot::wasserstein(src, dst, 1.0)) / m1);
    }
    return Outcome{worst <= 1e-8 && worst_w1 <= 1e-8,
                   "max relative error " + fmt(worst) + ", vs W1 " + fmt(worst_w1) + " (<= 1e-8)"};
  });

  criterion(6, "Quadratic minimal flow vs Poisson; 1-D cumulative sum", 30.0, [] {
    std::mt19937_64 rng(6);
    double worst = 0.0;
    for (int n : {16, 32, 64}) {
      const cot::Grid g = cot::Grid::make(n, n, 1.0 / n);
      for (int inst = 0; inst < 5; ++inst) {
        const auto mu = random_density(g, rng), nu = random_density(g, rng);
        const cot::VectorField start = random_flow(g, rng);
        cot::BeckmannOptions opt;
        opt.tol = 1e-10;
        opt.initial = &start;
        const auto r = cot::solve_beckmann(mu, nu, cot::CongestionSpec::quadratic(), opt);
        const double poisson = cot::solve_dual_quadratic(mu, nu).cost;
        worst = std::max(worst, std::abs(r.cost - poisson) / poisson);
      }
    }
    double worst_1d = 0.0;
    for (const auto& H : {cot::CongestionSpec::quadratic(), cot::CongestionSpec::affine_power(0.5, 3.0)}) {
      const cot::Grid g = cot::Grid::make(40, 1, 0.025);
      const auto mu = random_density(g, rng), nu = random_density(g, rng);
      const cot::VectorField start = random_flow(g, rng);
      cot::BeckmannOptions opt;
      opt.tol = 1e-12;
      opt.initial = &start;
      const auto r = cot::solve_beckmann(mu, nu, H, opt);
      double acc = 0.0;
      for (int i = 1; i < g.nx; ++i) {
        acc += g.h * (mu(i - 1, 0) - nu(i - 1, 0));
        worst_1d = std::max(worst_1d, std::abs(r.v.vx(i, 0) - acc));
      }
    }
    return Outcome{worst <= 1e-6 && worst_1d <= 1e-8,
                   "max relative cost difference " + fmt(worst) + " (<= 1e-6), 1-D max flux error " + fmt(worst_1d) +
                       " (<= 1e-8)"};
  });

  criterion(7, "Weighted flow vs grid-geodesic transport", 0.0, [] {
    const cot::Grid g = cot::Grid::make(32, 32, 1.0 / 32);
    std::vector<cot::ScalarField> weights;
    weights.emplace_back(g, 1.0);
    cot::ScalarField bump(g), split(g), ramp(g), valley(g);
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        const double x = g.xc(i), y = g.yc(j);
        bump(i, j) = 1.0 + 2.0 * std::exp(-((x - 0.5) * (x - 0.5) + (y - 0.5) * (y - 0.5)) / 0.02);
        split(i, j) = y < 0.5 ? 1.0 : 2.0;
        ramp(i, j) = 1.0 + x;
        valley(i, j) = 1.0 + 4.0 * (y - 0.5) * (y - 0.5);
      }
    weights.push_back(bump), weights.push_back(split), weights.push_back(ramp), weights.push_back(valley);
    double worst_ratio = 0.0;
    std::string detail;
    for (std::size_t inst = 0; inst < weights.size(); ++inst) {
      cot::DiscreteMeasure mu(2), nu(2);
      mu.add({g.xc(4), g.yc(8)}, 0.6), mu.add({g.xc(6), g.yc(24)}, 0.4);
      nu.add({g.xc(27), g.yc(16)}, 0.5), nu.add({g.xc(20), g.yc(3)}, 0.5);
      cot::BeckmannOptions opt;
      opt.tol = 1e-5;
      opt.max_iter = 40000;
      const auto rep = cot::weighted_beckmann_duality_check(weights[inst], mu, nu, opt);
      const double bound = cot::kOctagonalDistortion + 2.0 * g.h;
      worst_ratio = std::max(worst_ratio, rep.rel_err / bound);
      detail += (inst ? ", " : "") + fmt(rep.rel_err);
    }
    return Outcome{worst_ratio <= 1.0, "relative errors " + detail + " (<= distortion + 2h = " +
                                           fmt(cot::kOctagonalDistortion + 2.0 / 32) + ")"};
  });

  criterion(8, "Trajectory reconstruction on the 64^2 bump instance", 60.0, [] {
    const cot::Grid g = cot::Grid::make(64, 64, 1.0 / 64);
    cot::ScalarField mu(g), nu(g);
    const double s2 = 2.0 * 0.08 * 0.08;
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        const double x = g.xc(i), y = g.yc(j);
        mu(i, j) = 0.05 + std::exp(-((x - 0.35) * (x - 0.35) + (y - 0.5) * (y - 0.5)) / s2);
        nu(i, j) = 0.05 + std::exp(-((x - 0.65) * (x - 0.65) + (y - 0.5) * (y - 0.5)) / s2);
      }
    const double m = mu.mass();
    for (double& x : mu.values()) x /= m;
    for (double& x : nu.values()) x /= m;
    cot::BeckmannOptions opt;
    opt.tol = 1e-10;
    const auto flow = cot::solve_beckmann(mu, nu, cot::CongestionSpec::quadratic(), opt);
    cot::TrajectoryOptions topt;
    topt.n_particles = 10000;
    topt.n_steps = 200;
    topt.seed = 8;
    const auto tr = cot::reconstruct_trajectories(flow.v, mu, nu, topt);

    const double w1 = cot::wasserstein(cot::coarsen_points(tr.endpoints, g, 16, 16), cot::coarsen_density(nu, 16, 16), 1.0);
    cot::ScalarField mid(g);
    for (std::size_t c = 0; c < g.cells(); ++c) mid[c] = 0.5 * (mu[c] + nu[c]);
    const double w1_mid =
        cot::wasserstein(cot::coarsen_points(tr.midpoints, g, 16, 16), cot::coarsen_density(mid, 16, 16), 1.0);
    // |v| from co-located face averages.
    double diff = 0.0, norm = 0.0;
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        const double vx = 0.5 * (flow.v.vx(i, j) + flow.v.vx(i + 1, j));
        const double vy = 0.5 * (flow.v.vy(i, j) + flow.v.vy(i, j + 1));
        const double mag = std::hypot(vx, vy);
        diff += std::abs(tr.intensity(i, j) - mag);
        norm += mag;
      }
    const double rel = diff / norm;
    const bool ok = w1 <= 2.0 * g.h && rel <= 0.1 && w1_mid <= 3.0 * g.h;
    return Outcome{ok, "W1(end, nu) " + fmt(w1) + " (<= " + fmt(2 * g.h) + "), intensity L1 " + fmt(rel) +
                           " (<= 0.1), W1(mid) " + fmt(w1_mid) + " (<= " + fmt(3 * g.h) + "), floor hits " +
                           std::to_string(tr.floor_hits) + ", reflections " + std::to_string(tr.reflections)};
  });

  criterion(9, "Gateaux derivative of W_p^p", 0.0, [] {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> pos(0.0, 1.0), w(0.1, 1.0);
    const std::vector<double> eps{1e-4};
    double worst = 0.0;
    int done = 0, tries = 0;
    while (done < 10 && tries < 200) {
      ++tries;
      const int m = 3 + tries % 3, n = 3 + (tries / 3) % 3;
      cot::DiscreteMeasure mu(2), nu(2), mu1(2);
      std::vector<double> a(static_cast<std::size_t>(m)), a1(a.size()), b(static_cast<std::size_t>(n));
      for (double& x : a) x = w(rng);
      for (double& x : a1) x = w(rng);
      for (double& x : b) x = w(rng);
      const double sa = std::accumulate(a.begin(), a.end(), 0.0), sa1 = std::accumulate(a1.begin(), a1.end(), 0.0),
                   sb = std::accumulate(b.begin(), b.end(), 0.0);
      for (int i = 0; i < m; ++i) {
        const double x = pos(rng), y = pos(rng);
        mu.add({x, y}, a[static_cast<std::size_t>(i)] / sa);
        mu1.add({x, y}, a1[static_cast<std::size_t>(i)] / sa1);
      }
      for (int j = 0; j < n; ++j) nu.add({pos(rng), pos(rng)}, b[static_cast<std::size_t>(j)] / sb);
      try {
        const auto rep = cot::gateaux_check(mu, nu, mu1, 2.0, eps);
        worst = std::max(worst, rep.error[0] / (1.0 + std::abs(rep.inner)));
        ++done;
      } catch (const cot::Error& e) {
        if (e.code() != cot::ErrorCode::DegenerateDual) throw;
      }
    }
    return Outcome{done == 10 && worst <= 1e-3,
                   std::to_string(done) + " instances, max |fd - inner| / (1 + |inner|) " + fmt(worst) + " (<= 1e-3)"};
  });

  criterion(10, "Quadratic city closed form at lambda = 1, 96^2", 120.0, [] {
    const double lambda = 1.0;
    const cot::Grid g = cot::Grid::make(96, 96, 3.0 / 96);
    const auto sol = cot::solve_quadratic_city(lambda, g, 1e-6);
    // Oracle: r from pi r^4 / 2 * lambda / (2 lambda + 1) = 1.
    const double r = std::pow(2.0 * (2.0 * lambda + 1.0) / (std::numbers::pi * lambda), 0.25);
    double mx = 0.0, my = 0.0, mm = 0.0;
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        const double w = sol.mu(i, j) * g.area();
        mm += w, mx += w * g.xc(i), my += w * g.yc(j);
      }
    mx /= mm, my /= mm;
    double l1 = 0.0, mu2 = 0.0;
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        const double rho2 = (g.xc(i) - mx) * (g.xc(i) - mx) + (g.yc(j) - my) * (g.yc(j) - my);
        const double exact = std::max(0.0, lambda / (2.0 * lambda + 1.0) * (r * r - rho2));
        l1 += std::abs(sol.mu(i, j) - exact) * g.area();
        mu2 += sol.mu(i, j) * g.area() * rho2;
      }
    double nx = 0.0, ny = 0.0, nm = 0.0;
    for (std::size_t k = 0; k < sol.nu.size(); ++k) {
      nm += sol.nu.weight(k), nx += sol.nu.weight(k) * sol.nu.point(k)[0], ny += sol.nu.weight(k) * sol.nu.point(k)[1];
    }
    nx /= nm, ny /= nm;
    double nu2 = 0.0;
    for (std::size_t k = 0; k < sol.nu.size(); ++k)
      nu2 += sol.nu.weight(k) * (std::pow(sol.nu.point(k)[0] - mx, 2) + std::pow(sol.nu.point(k)[1] - my, 2));
    const double ratio = nu2 / mu2, expected = 1.0 / ((2.0 * lambda + 1.0) * (2.0 * lambda + 1.0));
    const double bary = std::hypot(nx - mx, ny - my);
    const bool ok = l1 <= 0.05 && bary <= g.h && std::abs(ratio / expected - 1.0) <= 0.1;
    return Outcome{ok, "L1 " + fmt(l1) + " (<= 0.05), barycenter gap " + fmt(bary) + " (<= " + fmt(g.h) +
                           "), second-moment ratio " + fmt(ratio) + " vs " + fmt(expected) + " (within 10%), " +
                           std::to_string(sol.iterations) + " outer steps"};
  });

  criterion(11, "Hotelling price round trip", 0.0, [] {
    struct Case {
      std::vector<std::vector<double>> firms;
      std::vector<double> prices;
      int dim;
    };
    const std::vector<Case> cases{
        {{{0.0}, {1.0}}, {0.0, 0.5}, 1},
        {{{0.1}, {0.5}, {0.9}}, {0.0, 0.1, 0.05}, 1},
        {{{0.25}, {0.75}}, {0.0, 0.0}, 1},
        {{{0.0}, {0.3}, {0.6}, {1.0}}, {0.2, 0.0, 0.1, 0.0}, 1},
        {{{0.25, 0.5}, {0.75, 0.5}}, {0.0, 0.0}, 2},
    };
    double worst = 0.0;
    bool connected = true;
    double boundary_demand = 0.0;
    for (std::size_t ci = 0; ci < cases.size(); ++ci) {
      const Case& cs = cases[ci];
      cot::DiscreteMeasure firms(static_cast<std::size_t>(cs.dim)), consumers(static_cast<std::size_t>(cs.dim));
      for (const auto& f : cs.firms) firms.add(f, 1.0);
      if (cs.dim == 1) {
        for (int k = 0; k <= 400; ++k) consumers.add({k / 400.0}, 1.0 / 401.0);
      } else {
        for (int j = 0; j <= 20; ++j)
          for (int i = 0; i <= 20; ++i) consumers.add({i / 20.0, j / 20.0}, 1.0 / 441.0);
      }
      const auto cost = cot::lp_point_cost(1.0);
      const auto d = cot::hotelling_demands(firms, cs.prices, consumers, cost);
      if (ci == 0) boundary_demand = d.demand[0];
      {
        cot::DiscreteMeasure supply = firms;
        std::copy(d.demand.begin(), d.demand.end(), supply.weights().begin());
        const auto ot = cot::solve_discrete_ot(supply, consumers, cot::cost_matrix(supply, consumers, cost));
        connected = connected && cot::support_connected(ot.plan, supply.weights(), consumers.weights());
      }
      const auto back = cot::hotelling_recover_prices(firms, d.demand, consumers, cost);
      for (std::size_t i = 0; i < back.size(); ++i)
        worst = std::max(worst, std::abs(back[i] - (cs.prices[i] - cs.prices[0])));
    }
    // Consumers left of 0.75 plus half of the tied one.
    const double expected = 300.5 / 401.0;
    const bool ok = worst <= 1e-6 && connected && std::abs(boundary_demand - expected) <= 1e-12;
    return Outcome{ok, "max price error " + fmt(worst) + " (<= 1e-6), assignment graphs " +
                           (connected ? "connected" : "NOT connected") + ", boundary instance demand " +
                           fmt(boundary_demand)};
  });

  criterion(12, "CLI determinism", 0.0, [] {
    const fs::path root = fs::temp_directory_path() / ("cot_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(root);
    const std::string bin = COTSOLVE_PATH, data = COT_DATA_DIR;
    const std::vector<std::pair<std::string, std::string>> commands{
        {"wardrop", "wardrop --net " + data + "/braess.net --demand " + data + "/braess.dem --tol 1e-8"},
        {"wardrop_marginals",
         "wardrop --net " + data + "/two_sources.net --demand " + data + "/two_sources.dem --tol 1e-8"},
        {"ot", "ot --mu " + data + "/square_mu.pts --nu " + data + "/square_nu.pts --metric lp 1"},
        {"beckmann", "beckmann --mu " + data + "/bump_mu.csv --nu " + data +
                         "/bump_nu.csv --H 'affine_power 0.1 2' --tol 1e-6 --particles 2000 --steps 50 --seed 7"},
        {"city", "city --config " + data + "/city.json"},
        {"hotelling", "hotelling --firms " + data + "/firms.pts --consumers " + data + "/consumers.pts"},
    };
    std::string differing;
    for (const auto& [name, args] : commands) {
      const fs::path dir = root / name;
      const int e1 = run(bin + " " + args + " -o " + dir.string());
      const auto first = snapshot(dir);
      const int e2 = run(bin + " " + args + " -o " + dir.string());
      const auto second = snapshot(dir);
      if (e1 != 0 || e2 != 0 || first != second || first.empty()) differing += " " + name;
    }
    fs::remove_all(root);
    return Outcome{differing.empty(), differing.empty() ? std::to_string(commands.size()) + " commands identical"
                                                        : "differences or failures in:" + differing};
  });

  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
