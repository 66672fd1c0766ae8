#pragma once

// Line-oriented text formats. Blank lines and anything after `#` are ignored.
// Parse failures throw ParseError with the file name and line number.

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cot/congestion.hpp"
#include "cot/kantorovich.hpp"
#include "cot/matrix.hpp"
#include "cot/network.hpp"
#include "cot/wardrop.hpp"

namespace cot {

/// `nodes <n>` first, then `edge <tail> <head> [<family> <params>...]`,
/// `source <label>` and `dest <label>` lines. The number of distinct labels
/// must equal n. An edge without a family takes the default congestion cost.
struct NetworkFile {
  Network net;
  std::vector<std::optional<CongestionSpec>> edge_costs;  // per edge; empty = default

  EdgeCosts resolve(const CongestionSpec& fallback) const;
};

NetworkFile parse_network(std::istream& in, const std::string& name = "<network>");
NetworkFile read_network(const std::string& path);

/// `demand <s> <d> <value>` lines give a fixed S x D table (missing pairs are
/// 0); `mu <label> <value>` and `nu <label> <value>` give marginals. The two
/// forms cannot be mixed.
DemandSpec parse_demand(std::istream& in, const Network& net, const std::string& name = "<demand>");
DemandSpec read_demand(const std::string& path, const Network& net);

/// `point <x> [<y> ...] <weight>`; every point has the same dimension.
DiscreteMeasure parse_measure(std::istream& in, const std::string& name = "<measure>");
DiscreteMeasure read_measure(const std::string& path);

/// Row-major CSV, one row per line, all rows of equal length.
Matrix parse_matrix_csv(std::istream& in, const std::string& name = "<matrix>");
Matrix read_matrix_csv(const std::string& path);
/// Writes with 17 significant digits.
void write_matrix_csv(const std::string& path, const Matrix& m);

}  // namespace cot
