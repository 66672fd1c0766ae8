#include <CLI11.hpp>
#include <iostream>

#include "commands.hpp"
#include "cot/error.hpp"
#include "cot/parallel.hpp"

namespace {

void add_common(CLI::App* sub, cotsolve::Common& c, double tol, std::size_t max_iter) {
  c.tol = tol;
  c.max_iter = max_iter;
  sub->add_option("--tol", c.tol, "Stopping tolerance")->capture_default_str()->check(CLI::PositiveNumber);
  sub->add_option("--max-iter", c.max_iter, "Iteration cap")->capture_default_str()->check(CLI::PositiveNumber);
  sub->add_option("--seed", c.seed, "Random seed")->capture_default_str();
  sub->add_option("-o,--out", c.output_dir, "Output directory")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Congested transport solvers: Wardrop equilibria, discrete optimal transport, "
               "minimal flows on grids and urban planning."};
  app.require_subcommand(1);

  cotsolve::Common cw, co, cb, cc, ch, cs;
  cotsolve::WardropArgs wa;
  cotsolve::OtArgs oa;
  cotsolve::BeckmannArgs ba;
  cotsolve::CityArgs ca;
  cotsolve::HotellingArgs ha;

  auto* w = app.add_subcommand("wardrop", "Traffic equilibrium on a network");
  add_common(w, cw, 1e-6, 10000);
  w->add_option("--net", wa.net, "Network file")->required()->check(CLI::ExistingFile);
  w->add_option("--demand", wa.demand, "Demand file")->required()->check(CLI::ExistingFile);
  w->add_option("--H", wa.H, "Default congestion cost: quadratic | linear a | affine_power a p | monomial p")
      ->capture_default_str();
  w->add_option("--path-cap", wa.path_cap, "Skip path verification above this many simple paths")->capture_default_str();

  auto* o = app.add_subcommand("ot", "Discrete optimal transport");
  add_common(o, co, 1e-6, 1);
  o->add_option("--mu", oa.mu, "Source measure file")->required()->check(CLI::ExistingFile);
  o->add_option("--nu", oa.nu, "Target measure file")->required()->check(CLI::ExistingFile);
  o->add_option("--metric", oa.metric, "Ground cost |x - y|^p, given as: lp <p>")->expected(2)->capture_default_str();
  o->add_option("--cost", oa.cost_csv, "Explicit cost matrix (CSV)")->check(CLI::ExistingFile);

  auto* b = app.add_subcommand("beckmann", "Minimal flow on a grid");
  add_common(b, cb, 1e-8, 50000);
  b->add_option("--mu", ba.mu, "Source density CSV (with .grid sidecar)")->required()->check(CLI::ExistingFile);
  b->add_option("--nu", ba.nu, "Target density CSV (with .grid sidecar)")->required()->check(CLI::ExistingFile);
  b->add_option("--weights", ba.weights, "Cell weights k (CSV)")->check(CLI::ExistingFile);
  b->add_option("--H", ba.H, "Congestion cost of the flow magnitude")->capture_default_str();
  b->add_option("--check-every", ba.check_every, "Iterations between certificate checks")->capture_default_str();
  b->add_option("--particles", ba.particles, "Reconstruct trajectories with this many particles")->capture_default_str();
  b->add_option("--steps", ba.steps, "Time steps per trajectory")->capture_default_str();

  auto* c = app.add_subcommand("city", "Urban planning problem from a JSON config");
  add_common(c, cc, 1e-6, 400);
  c->add_option("--config", ca.config, "Problem config (JSON)")->required()->check(CLI::ExistingFile);

  auto* h = app.add_subcommand("hotelling", "Hotelling demands and price recovery");
  add_common(h, ch, 1e-6, 1);
  h->add_option("--firms", ha.firms, "Firm locations; the weight column holds the prices")->required()->check(CLI::ExistingFile);
  h->add_option("--consumers", ha.consumers, "Consumer measure file")->required()->check(CLI::ExistingFile);
  h->add_option("--metric", ha.metric, "Travel cost |x - y|^p, given as: lp <p>")->expected(2)->capture_default_str();

  auto* s = app.add_subcommand("selftest", "Run the embedded oracle suite");
  add_common(s, cs, 1e-6, 1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? cotsolve::kExitOk : cotsolve::kExitInputError;
  }

  const int threads = cot::configure_threads_from_env();
  for (auto* common : {&cw, &co, &cb, &cc, &ch, &cs}) common->threads = threads;
  try {
    if (*w) return cotsolve::run_wardrop(cw, wa);
    if (*o) return cotsolve::run_ot(co, oa);
    if (*b) return cotsolve::run_beckmann(cb, ba);
    if (*c) return cotsolve::run_city(cc, ca);
    if (*h) return cotsolve::run_hotelling(ch, ha);
    return cotsolve::run_selftest(cs);
  } catch (const cot::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
  }
  return cotsolve::kExitInputError;
}
