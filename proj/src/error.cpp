#include "cot/error.hpp"

#include <algorithm>
#include <cstdlib>
#include <string>

#include "cot/parallel.hpp"

namespace cot {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidInput: return "InvalidInput";
    case ErrorCode::DanglingEdge: return "DanglingEdge";
    case ErrorCode::SelfLoop: return "SelfLoop";
    case ErrorCode::Unreachable: return "Unreachable";
    case ErrorCode::NegativeMetric: return "NegativeMetric";
    case ErrorCode::NegativeFlow: return "NegativeFlow";
    case ErrorCode::PathExplosion: return "PathExplosion";
    case ErrorCode::MassMismatch: return "MassMismatch";
    case ErrorCode::NonFiniteCost: return "NonFiniteCost";
    case ErrorCode::DegenerateDual: return "DegenerateDual";
    case ErrorCode::DecompositionFailure: return "DecompositionFailure";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::PointOutsideDomain: return "PointOutsideDomain";
    case ErrorCode::DomainTooSmall: return "DomainTooSmall";
    case ErrorCode::BisectionFailure: return "BisectionFailure";
    case ErrorCode::Unsupported: return "Unsupported";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

int configure_threads_from_env() {
  int threads = 1;
  if (const char* env = std::getenv("CT_THREADS")) {
    try {
      threads = std::max(1, std::stoi(env));
    } catch (const std::exception&) {
      threads = 1;
    }
  }
  omp_set_num_threads(threads);
  return threads;
}

}  // namespace cot
