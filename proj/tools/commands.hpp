#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace cotsolve {

// Exit statuses.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInputError = 1;
inline constexpr int kExitNoConvergence = 2;

struct Common {
  double tol = 1e-6;
  std::size_t max_iter = 10000;
  std::uint64_t seed = 1;
  std::string output_dir = ".";
  int threads = 1;  // resolved from CT_THREADS
};

struct WardropArgs {
  std::string net;
  std::string demand;
  std::string H = "quadratic";  // default for edges without their own family
  std::size_t path_cap = 100000;
};

struct OtArgs {
  std::string mu;
  std::string nu;
  std::string cost_csv;                        // overrides the metric when set
  std::vector<std::string> metric{"lp", "2"};  // `lp <p>`
};

struct BeckmannArgs {
  std::string mu;
  std::string nu;
  std::string weights;  // optional cell weights k
  std::string H = "quadratic";
  std::size_t check_every = 10;
  std::size_t particles = 0;  // 0 skips trajectory reconstruction
  std::size_t steps = 200;
};

struct CityArgs {
  std::string config;
};

struct HotellingArgs {
  std::string firms;  // measure file whose weights are the prices
  std::string consumers;
  std::vector<std::string> metric{"lp", "1"};
};

int run_wardrop(const Common& c, const WardropArgs& a);
int run_ot(const Common& c, const OtArgs& a);
int run_beckmann(const Common& c, const BeckmannArgs& a);
int run_city(const Common& c, const CityArgs& a);
int run_hotelling(const Common& c, const HotellingArgs& a);
int run_selftest(const Common& c);

}  // namespace cotsolve
