#include "commands.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <numeric>
#include <sstream>

#include "cot/beckmann.hpp"
#include "cot/error.hpp"
#include "cot/io.hpp"
#include "cot/kantorovich.hpp"
#include "cot/trajectories.hpp"
#include "cot/urbanplan.hpp"
#include "cot/wardrop.hpp"

namespace cotsolve {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string fnv1a64(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw cot::Error(cot::ErrorCode::InvalidInput, "cannot read '" + path + "'");
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char ch; in.get(ch);) {
    h ^= static_cast<unsigned char>(ch);
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Collects one command's report. Only "timing" may differ between runs.
class Report {
 public:
  Report(std::string command, const Common& c) : command_(std::move(command)) {
    config_["tol"] = c.tol;
    config_["max_iter"] = c.max_iter;
    config_["seed"] = c.seed;
    config_["output_dir"] = c.output_dir;
    config_["threads"] = c.threads;
    dir_ = c.output_dir;
    fs::create_directories(dir_);
  }

  json& config() { return config_; }
  json& results() { return results_; }
  void input(const std::string& role, const std::string& path) {
    inputs_[role] = {{"path", path}, {"fnv1a64", fnv1a64(path)}};
  }
  std::string path(const std::string& file) const { return (fs::path(dir_) / file).string(); }

  int finish(bool converged) {
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    json r;
    r["command"] = command_;
    r["config"] = config_;
    r["inputs"] = inputs_.is_null() ? json::object() : inputs_;
    r["results"] = results_;
    r["status"] = converged ? "converged" : "max_iterations";
    r["timing"] = {{"seconds", seconds}};
    std::ofstream out(path("report.json"));
    if (!out) throw cot::Error(cot::ErrorCode::InvalidInput, "cannot write into '" + dir_ + "'");
    out << r.dump(2) << '\n';
    if (!converged) std::cerr << command_ << ": no convergence; best iterate written\n";
    return converged ? kExitOk : kExitNoConvergence;
  }

 private:
  std::string command_;
  std::string dir_;
  json config_ = json::object();
  json inputs_;
  json results_ = json::object();
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

// CSV with a header row and %.17g numbers.
class Table {
 public:
  Table(const std::string& path, const std::string& header) : out_(path) {
    if (!out_) throw cot::Error(cot::ErrorCode::InvalidInput, "cannot write '" + path + "'");
    out_ << header << '\n';
  }
  template <typename... Cells>
  void row(const Cells&... cells) {
    bool first = true;
    ((out_ << (first ? "" : ",") << cell(cells), first = false), ...);
    out_ << '\n';
  }

 private:
  static std::string cell(const std::string& s) { return s; }
  static std::string cell(const char* s) { return s; }
  static std::string cell(double v) { return num(v); }
  static std::string cell(std::size_t v) { return std::to_string(v); }
  static std::string cell(int v) { return std::to_string(v); }
  std::ofstream out_;
};

double metric_exponent(const std::vector<std::string>& metric) {
  if (metric.size() != 2 || metric[0] != "lp")
    throw cot::Error(cot::ErrorCode::InvalidInput, "metric must read `lp <p>`");
  double p = 0.0;
  try {
    p = std::stod(metric[1]);
  } catch (const std::exception&) {
    throw cot::Error(cot::ErrorCode::InvalidInput, "bad metric exponent '" + metric[1] + "'");
  }
  if (!(p >= 1.0)) throw cot::Error(cot::ErrorCode::InvalidInput, "metric exponent must be at least 1");
  return p;
}

json matrix_json(const cot::Matrix& m) {
  json rows = json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (std::size_t j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
    rows.push_back(r);
  }
  return rows;
}

void write_column(const std::string& path, const std::string& name, const std::vector<double>& v) {
  Table t(path, "index," + name);
  for (std::size_t k = 0; k < v.size(); ++k) t.row(k, v[k]);
}

void write_points(const std::string& path, const cot::DiscreteMeasure& m) {
  Table t(path, m.dim() == 2 ? "x,y,weight" : "x,weight");
  for (std::size_t a = 0; a < m.size(); ++a) {
    if (m.dim() == 2) t.row(m.point(a)[0], m.point(a)[1], m.weight(a));
    else t.row(m.point(a)[0], m.weight(a));
  }
}

}  // namespace

int run_wardrop(const Common& c, const WardropArgs& a) {
  Report rep("wardrop", c);
  rep.config()["net"] = a.net;
  rep.config()["demand"] = a.demand;
  rep.config()["H"] = a.H;
  rep.config()["path_cap"] = a.path_cap;
  rep.input("net", a.net);
  rep.input("demand", a.demand);

  const cot::NetworkFile nf = cot::read_network(a.net);
  const cot::EdgeCosts costs = nf.resolve(cot::CongestionSpec::parse(a.H));
  const cot::DemandSpec demand = cot::read_demand(a.demand, nf.net);
  const cot::EquilibriumResult res = cot::solve(nf.net, costs, demand, c.tol, c.max_iter);

  json& r = rep.results();
  r["objective"] = res.objective;
  r["relative_gap"] = res.relative_gap;
  r["iterations"] = res.iterations;
  r["demand_kind"] = demand.kind == cot::DemandSpec::Kind::Fixed ? "fixed" : "marginals";
  json edge_costs = json::array();
  for (const auto& h : costs) edge_costs.push_back(h.describe());
  r["edge_costs"] = edge_costs;
  r["coupling"] = matrix_json(res.coupling);
  try {
    const cot::WardropReport w = cot::verify_wardrop(nf.net, res, a.path_cap);
    r["max_excess"] = w.max_excess;
    r["worst_pair"] = w.worst_source < 0 ? json(nullptr)
                                          : json::array({nf.net.label(w.worst_source), nf.net.label(w.worst_destination)});
    r["used_paths"] = w.paths.size();
  } catch (const cot::Error& e) {
    if (e.code() != cot::ErrorCode::PathExplosion && e.code() != cot::ErrorCode::DecompositionFailure) throw;
    r["max_excess"] = nullptr;
    r["verification_skipped"] = e.what();
  }

  Table flows(rep.path("flows.csv"), "edge,tail,head,flow,unit_cost");
  for (std::size_t e = 0; e < nf.net.edge_count(); ++e) {
    const cot::Edge& ed = nf.net.edge(static_cast<int>(e));
    flows.row(e, nf.net.label(ed.tail), nf.net.label(ed.head), res.flows[e], res.xi[e]);
  }
  cot::write_matrix_csv(rep.path("coupling.csv"), res.coupling);
  return rep.finish(res.status == cot::SolveStatus::Converged);
}

int run_ot(const Common& c, const OtArgs& a) {
  Report rep("ot", c);
  rep.config()["mu"] = a.mu;
  rep.config()["nu"] = a.nu;
  rep.config()["cost"] = a.cost_csv.empty() ? json(nullptr) : json(a.cost_csv);
  rep.config()["metric"] = a.cost_csv.empty() ? json(a.metric) : json(nullptr);
  rep.input("mu", a.mu);
  rep.input("nu", a.nu);

  const cot::DiscreteMeasure mu = cot::read_measure(a.mu);
  const cot::DiscreteMeasure nu = cot::read_measure(a.nu);
  cot::Matrix cost;
  if (!a.cost_csv.empty()) {
    rep.input("cost", a.cost_csv);
    cost = cot::read_matrix_csv(a.cost_csv);
  } else {
    if (mu.dim() != nu.dim()) throw cot::Error(cot::ErrorCode::ShapeMismatch, "mu and nu differ in dimension");
    cost = cot::cost_matrix(mu, nu, cot::lp_point_cost(metric_exponent(a.metric)));
  }
  const cot::TransportResult t = cot::solve_discrete_ot(mu, nu, cost);
  const cot::CertificateReport cert = cot::certify(t, mu.weights(), nu.weights(), cost);

  json& r = rep.results();
  r["value"] = t.value;
  r["dual_value"] = t.dual_value;
  r["pivots"] = t.pivots;
  r["marginal_error"] = cert.marginal_error;
  r["feasibility_excess"] = cert.feasibility_excess;
  r["slackness_error"] = cert.slackness_error;
  r["duality_gap"] = cert.duality_gap;
  r["support_connected"] = cot::support_connected(t.plan, mu.weights(), nu.weights());
  cot::write_matrix_csv(rep.path("coupling.csv"), t.plan);
  write_column(rep.path("phi.csv"), "phi", t.potentials.phi);
  write_column(rep.path("psi.csv"), "psi", t.potentials.psi);
  return rep.finish(true);
}

int run_beckmann(const Common& c, const BeckmannArgs& a) {
  Report rep("beckmann", c);
  rep.config()["mu"] = a.mu;
  rep.config()["nu"] = a.nu;
  rep.config()["weights"] = a.weights.empty() ? json(nullptr) : json(a.weights);
  rep.config()["H"] = a.H;
  rep.config()["check_every"] = a.check_every;
  rep.config()["particles"] = a.particles;
  rep.config()["steps"] = a.steps;
  rep.input("mu", a.mu);
  rep.input("nu", a.nu);

  const cot::ScalarField mu = cot::read_scalar_csv(a.mu);
  const cot::ScalarField nu = cot::read_scalar_csv(a.nu);
  const cot::Grid& g = mu.grid();
  const cot::CongestionSpec H = cot::CongestionSpec::parse(a.H);
  cot::ScalarField k(g, 1.0);
  if (!a.weights.empty()) {
    rep.input("weights", a.weights);
    k = cot::read_scalar_csv(a.weights);
  }
  cot::BeckmannOptions opt;
  opt.tol = c.tol;
  opt.max_iter = c.max_iter;
  opt.check_every = std::max<std::size_t>(1, a.check_every);
  const cot::BeckmannResult res = cot::solve_beckmann(mu, nu, H, k, opt);

  json& r = rep.results();
  r["grid"] = {{"nx", g.nx}, {"ny", g.ny}, {"h", g.h}};
  r["cost"] = res.cost;
  r["dual_value"] = res.dual_value;
  r["gap"] = res.gap;
  r["residual"] = res.residual;
  r["change"] = res.change;
  r["iterations"] = res.iterations;
  r["boundary_flux"] = res.v.boundary_flux();
  if (H.family() == cot::CongestionSpec::Family::Quadratic && H.scale() == 1.0 && a.weights.empty()) {
    const cot::QuadraticDual q = cot::solve_dual_quadratic(mu, nu);
    r["poisson_cost"] = q.cost;
    r["poisson_rel_diff"] = std::abs(q.cost - res.cost) / std::max(std::abs(q.cost), 1e-300);
  }
  cot::write_vector_csv(rep.path("flow"), res.v);
  cot::write_scalar_csv(rep.path("magnitude.csv"), cot::cell_magnitude(res.v));

  if (a.particles > 0) {
    cot::TrajectoryOptions topt;
    topt.n_particles = a.particles;
    topt.n_steps = a.steps;
    topt.seed = c.seed;
    const cot::TrajectoryResult tr = cot::reconstruct_trajectories(res.v, mu, nu, topt);
    // Coarse grid: the largest divisor of each side not above 16.
    auto coarse = [](int n) {
      for (int d = std::min(n, 16); d >= 1; --d)
        if (n % d == 0) return d;
      return 1;
    };
    const int cx = coarse(g.nx), cy = coarse(g.ny);
    cot::ScalarField target = nu;
    const double scale = mu.mass() / nu.mass();
    for (double& x : target.values()) x *= scale;
    const double w1 = cot::wasserstein(cot::coarsen_points(tr.endpoints, g, cx, cy), cot::coarsen_density(target, cx, cy), 1.0);
    r["trajectories"] = {{"endpoint_w1", w1},
                         {"coarse_grid", {cx, cy}},
                         {"floor_hits", tr.floor_hits},
                         {"reflections", tr.reflections}};
    cot::write_scalar_csv(rep.path("intensity.csv"), tr.intensity);
    write_points(rep.path("endpoints.csv"), tr.endpoints);
  }
  return rep.finish(res.status == cot::SolveStatus::Converged);
}

namespace {

struct CityConfig {
  std::string mode;
  double p = 2.0;
  std::string spread_family = "quadratic";
  double spread_exponent = 2.0;
  double spread_scale = 1.0;
  std::string conc_kind = "interaction";
  std::string conc_fn = "power";
  double conc_exponent = 2.0;
  double conc_coefficient = 1.0;
  double lambda = 1.0;
  int nx = 96, ny = 96;
  double h = 0.03125;
  double tol = 1e-6;
  std::size_t max_iter = 400;
  std::size_t k_max = 3;
  std::size_t atoms_per_side = 12;
  double theta = 0.3;
  std::vector<std::array<double, 3>> nu;  // p_nu mode: x, y, weight

  json to_json() const {
    json nu_j = json::array();
    for (const auto& a : nu) nu_j.push_back({a[0], a[1], a[2]});
    return {{"mode", mode},
            {"p", p},
            {"spread", {{"family", spread_family}, {"exponent", spread_exponent}, {"scale", spread_scale}}},
            {"concentration",
             {{"kind", conc_kind}, {"function", conc_fn}, {"exponent", conc_exponent}, {"coefficient", conc_coefficient}}},
            {"lambda", lambda},
            {"grid", {{"nx", nx}, {"ny", ny}, {"h", h}}},
            {"tol", tol},
            {"max_iter", max_iter},
            {"k_max", k_max},
            {"atoms_per_side", atoms_per_side},
            {"theta", theta},
            {"nu", nu_j}};
  }
};

CityConfig parse_city(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw cot::Error(cot::ErrorCode::InvalidInput, "cannot read '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw cot::Error(cot::ErrorCode::ParseError, path + ": " + e.what());
  }
  CityConfig c;
  try {
    c.p = j.value("p", c.p);
    if (j.contains("spread")) {
      const json& s = j["spread"];
      c.spread_family = s.value("family", c.spread_family);
      c.spread_exponent = s.value("exponent", c.spread_family == "quadratic" ? 2.0 : c.spread_exponent);
      c.spread_scale = s.value("scale", c.spread_scale);
    }
    if (j.contains("concentration")) {
      const json& s = j["concentration"];
      c.conc_kind = s.value("kind", c.conc_kind);
      const char* fn_key = c.conc_kind == "atomic" ? "g" : "h";
      c.conc_fn = s.value(fn_key, s.value("function", c.conc_fn));
      c.conc_exponent = s.value("exponent", c.conc_kind == "atomic" ? 0.5 : 2.0);
      c.conc_coefficient = s.value("coefficient", c.conc_coefficient);
    }
    c.lambda = j.value("lambda", c.lambda);
    if (j.contains("grid")) {
      c.nx = j["grid"].value("nx", c.nx);
      c.ny = j["grid"].value("ny", c.ny);
      c.h = j["grid"].value("h", c.h);
    }
    c.tol = j.value("tol", c.tol);
    c.max_iter = j.value("max_iter", c.max_iter);
    c.k_max = j.value("k_max", c.k_max);
    c.atoms_per_side = j.value("atoms_per_side", c.atoms_per_side);
    c.theta = j.value("theta", c.theta);
    if (j.contains("nu"))
      for (const json& a : j["nu"]) c.nu.push_back({a.at(0).get<double>(), a.at(1).get<double>(), a.at(2).get<double>()});
    c.mode = j.value("mode", std::string(!c.nu.empty()          ? "p_nu"
                                         : c.conc_kind == "atomic" ? "atomic"
                                                                   : "quadratic"));
  } catch (const json::exception& e) {
    throw cot::Error(cot::ErrorCode::ParseError, path + ": " + e.what());
  }
  if (c.mode != "quadratic" && c.mode != "atomic" && c.mode != "p_nu")
    throw cot::Error(cot::ErrorCode::InvalidInput, "mode must be quadratic, atomic or p_nu");
  if (c.conc_fn != "power") throw cot::Error(cot::ErrorCode::InvalidInput, "only power concentration costs are supported");
  return c;
}

cot::SpreadSpec spread_of(const CityConfig& c) {
  if (c.spread_family == "quadratic") return cot::SpreadSpec::quadratic(c.spread_scale);
  if (c.spread_family == "power") return cot::SpreadSpec::power(c.spread_exponent, c.spread_scale);
  throw cot::Error(cot::ErrorCode::InvalidInput, "spread family must be quadratic or power");
}

std::array<double, 2> mean_point(const cot::DiscreteMeasure& m) {
  double w = 0.0, x = 0.0, y = 0.0;
  for (std::size_t a = 0; a < m.size(); ++a) {
    w += m.weight(a);
    x += m.weight(a) * m.point(a)[0];
    y += m.weight(a) * m.point(a)[1];
  }
  return {x / w, y / w};
}

}  // namespace

int run_city(const Common& c, const CityArgs& a) {
  Report rep("city", c);
  rep.input("config", a.config);
  const CityConfig cfg = parse_city(a.config);
  rep.config()["config"] = a.config;
  rep.config()["city"] = cfg.to_json();

  const cot::Grid g = cot::Grid::make(cfg.nx, cfg.ny, cfg.h);
  const cot::SpreadSpec spread = spread_of(cfg);
  spread.check();
  cot::CitySolution sol;
  if (cfg.mode == "quadratic") {
    if (cfg.p != 2.0 || cfg.spread_family != "quadratic" || cfg.spread_scale != 1.0)
      throw cot::Error(cot::ErrorCode::InvalidInput, "quadratic mode needs p = 2 and f(t) = t^2");
    cot::QuadraticCityOptions o;
    o.atoms_per_side = cfg.atoms_per_side;
    o.theta = cfg.theta;
    o.max_iter = cfg.max_iter;
    sol = cot::solve_quadratic_city(cfg.lambda, g, cfg.tol, o);
  } else if (cfg.mode == "atomic") {
    const auto G = cot::ConcentrationSpec::atomic_power(cfg.conc_coefficient, cfg.conc_exponent);
    cot::AtomicOptions o;
    o.theta = cfg.theta;
    o.max_outer = cfg.max_iter;
    sol = cot::minimize_with_atomic_G(cfg.p, spread, G, cfg.k_max, g, cfg.tol, o);
  } else {
    cot::DiscreteMeasure nu(2);
    for (const auto& atom : cfg.nu) nu.add({atom[0], atom[1]}, atom[2]);
    cot::CityOptions o;
    o.theta = cfg.theta;
    o.max_iter = cfg.max_iter;
    sol = cot::solve_p_nu(nu, cfg.p, spread, g, cfg.tol, o);
  }

  json& r = rep.results();
  r["transport"] = sol.value.transport;
  r["spread"] = sol.value.spread;
  r["concentration"] = sol.value.concentration;
  r["total"] = sol.value.total;
  r["multiplier"] = sol.multiplier;
  r["residual"] = sol.residual;
  r["change"] = sol.change;
  r["iterations"] = sol.iterations;
  r["mu_mass"] = sol.mu.mass();
  r["atoms"] = sol.nu.size();
  r["nu_barycenter"] = mean_point(sol.nu);
  if (cfg.mode == "quadratic") {
    r["reference_l1"] = sol.reference_l1;
    r["reference_radius"] = sol.reference_radius;
  }
  if (cfg.mode == "atomic") r["catchments_connected"] = sol.catchments_connected;
  r["value_history"] = sol.value_history;

  cot::write_scalar_csv(rep.path("mu.csv"), sol.mu);
  cot::write_scalar_csv(rep.path("potential.csv"), sol.potential);
  write_points(rep.path("nu.csv"), sol.nu);
  if (!sol.catchment.empty()) {
    cot::ScalarField labels(g);
    for (std::size_t q = 0; q < g.cells(); ++q) labels[q] = sol.catchment[q];
    cot::write_scalar_csv(rep.path("catchment.csv"), labels);
  }
  return rep.finish(sol.status == cot::SolveStatus::Converged);
}

int run_hotelling(const Common& c, const HotellingArgs& a) {
  Report rep("hotelling", c);
  rep.config()["firms"] = a.firms;
  rep.config()["consumers"] = a.consumers;
  rep.config()["metric"] = a.metric;
  rep.input("firms", a.firms);
  rep.input("consumers", a.consumers);

  const cot::DiscreteMeasure firms = cot::read_measure(a.firms);
  const cot::DiscreteMeasure consumers = cot::read_measure(a.consumers);
  if (firms.dim() != consumers.dim()) throw cot::Error(cot::ErrorCode::ShapeMismatch, "firms and consumers differ in dimension");
  const cot::PointCost cost = cot::lp_point_cost(metric_exponent(a.metric));
  const std::vector<double> prices = firms.weights();
  const cot::HotellingDemands d = cot::hotelling_demands(firms, prices, consumers, cost);
  const std::vector<double> back = cot::hotelling_recover_prices(firms, d.demand, consumers, cost);

  double err = 0.0;
  Table t(rep.path("firms.csv"), "firm,price,demand,recovered_price");
  for (std::size_t i = 0; i < firms.size(); ++i) {
    const double p0 = prices[i] - prices[0];
    err = std::max(err, std::abs(back[i] - p0));
    t.row(i, prices[i], d.demand[i], back[i] + prices[0]);
  }
  json& r = rep.results();
  r["demands"] = d.demand;
  r["recovered_prices"] = back;
  r["round_trip_error"] = err;
  Table regions(rep.path("regions.csv"), "consumer,firm");
  for (std::size_t k = 0; k < d.region.size(); ++k) regions.row(k, d.region[k]);
  return rep.finish(true);
}

namespace {

struct Check {
  std::string name;
  double value;
  double expected;
  double tol;
  bool pass() const { return std::abs(value - expected) <= tol; }
};

}  // namespace

int run_selftest(const Common& c) {
  Report rep("selftest", c);
  std::vector<Check> checks;

  {  // Pigou: a constant-cost road and a congestible one; all traffic takes the latter.
    cot::Network net;
    const int s = net.node("s"), t = net.node("t");
    net.add_edge(s, t);
    net.add_edge(s, t);
    net.add_source(s);
    net.add_destination(t);
    validate_network(net);
    const cot::EdgeCosts costs{cot::CongestionSpec::linear(1.0), cot::CongestionSpec::quadratic()};
    const auto res = cot::solve_fixed_demand(net, costs, cot::Matrix(1, 1, 1.0), 1e-8, 10000);
    checks.push_back({"pigou_objective", res.objective, 0.5, 1e-6});
  }
  {  // Two atoms one unit apart.
    cot::DiscreteMeasure mu(1), nu(1);
    mu.add({0.0}, 1.0);
    nu.add({1.0}, 1.0);
    checks.push_back({"two_atom_w1", cot::wasserstein(mu, nu, 1.0), 1.0, 1e-12});
  }
  {  // 1-D minimal flow equals the cumulative sum of mu - nu.
    const cot::Grid g = cot::Grid::make(16, 1, 1.0 / 16);
    cot::ScalarField mu(g), nu(g);
    for (int i = 0; i < 16; ++i) {
      mu(i, 0) = i < 8 ? 2.0 : 0.0;
      nu(i, 0) = i < 8 ? 0.0 : 2.0;
    }
    const cot::QuadraticDual q = cot::solve_dual_quadratic(mu, nu);
    double err = 0.0, acc = 0.0;
    for (int i = 1; i < 16; ++i) {
      acc += g.h * (mu(i - 1, 0) - nu(i - 1, 0));
      err = std::max(err, std::abs(q.v.vx(i, 0) - acc));
    }
    checks.push_back({"flow_1d_cumsum", err, 0.0, 1e-10});
  }
  {  // Quadratic ADMM against the Poisson solve.
    const cot::Grid g = cot::Grid::make(8, 8, 0.125);
    cot::ScalarField mu(g), nu(g);
    for (int j = 0; j < 8; ++j)
      for (int i = 0; i < 8; ++i) {
        mu(i, j) = 1.0 + 0.5 * std::sin(i + 2.0 * j);
        nu(i, j) = 1.0 + 0.5 * std::cos(3.0 * i - j);
      }
    const double s = mu.mass() / nu.mass();
    for (double& x : nu.values()) x *= s;
    cot::VectorField start(g);
    for (std::size_t q = 0; q < start.vx_data().size(); ++q) start.vx_data()[q] = std::sin(0.7 * static_cast<double>(q));
    for (std::size_t q = 0; q < start.vy_data().size(); ++q) start.vy_data()[q] = std::cos(1.3 * static_cast<double>(q));
    start.clear_boundary();
    cot::BeckmannOptions o;
    o.tol = 1e-10;
    o.initial = &start;
    const double admm = cot::solve_beckmann(mu, nu, cot::CongestionSpec::quadratic(), o).cost;
    const double poisson = cot::solve_dual_quadratic(mu, nu).cost;
    checks.push_back({"beckmann_vs_poisson", admm / poisson, 1.0, 1e-6});
  }
  {  // Hotelling round trip on a line.
    cot::DiscreteMeasure firms(1), consumers(1);
    firms.add({0.25}, 0.0);
    firms.add({0.75}, 0.0);
    for (int k = 0; k <= 100; ++k) consumers.add({k / 100.0}, 1.0 / 101.0);
    const std::vector<double> prices{0.0, 0.1};
    const auto cost = cot::lp_point_cost(1.0);
    const auto d = cot::hotelling_demands(firms, prices, consumers, cost);
    const auto back = cot::hotelling_recover_prices(firms, d.demand, consumers, cost);
    checks.push_back({"hotelling_round_trip", back[1], 0.1, 1e-9});
  }

  bool ok = true;
  json list = json::array();
  for (const Check& ch : checks) {
    std::printf("%-22s %s  value=%s expected=%s tol=%s\n", ch.name.c_str(), ch.pass() ? "PASS" : "FAIL",
                num(ch.value).c_str(), num(ch.expected).c_str(), num(ch.tol).c_str());
    ok = ok && ch.pass();
    list.push_back({{"name", ch.name}, {"value", ch.value}, {"expected", ch.expected}, {"pass", ch.pass()}});
  }
  rep.results()["checks"] = list;
  rep.finish(true);
  return ok ? kExitOk : kExitInputError;
}

}  // namespace cotsolve
