#include "cot/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "cot/error.hpp"

namespace cot {

namespace {

std::ifstream open(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidInput, "cannot read '" + path + "'");
  return in;
}

[[noreturn]] void fail(const std::string& name, std::size_t line, const std::string& msg) {
  throw Error(ErrorCode::ParseError, name + ":" + std::to_string(line) + ": " + msg);
}

// Splits a line into whitespace tokens after stripping a `#` comment.
std::vector<std::string> tokens(const std::string& line) {
  std::istringstream ss(line.substr(0, line.find('#')));
  std::vector<std::string> out;
  for (std::string t; ss >> t;) out.push_back(t);
  return out;
}

double number(const std::string& text, const std::string& name, std::size_t line) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    fail(name, line, "expected a number, got '" + text + "'");
  }
  if (used != text.size()) fail(name, line, "expected a number, got '" + text + "'");
  return v;
}

std::string join(const std::vector<std::string>& t, std::size_t from) {
  std::string s;
  for (std::size_t k = from; k < t.size(); ++k) s += (k > from ? " " : "") + t[k];
  return s;
}

}  // namespace

EdgeCosts NetworkFile::resolve(const CongestionSpec& fallback) const {
  EdgeCosts out;
  out.reserve(edge_costs.size());
  for (const auto& c : edge_costs) out.push_back(c ? *c : fallback);
  return out;
}

NetworkFile parse_network(std::istream& in, const std::string& name) {
  NetworkFile f;
  long declared = -1;
  std::string line;
  for (std::size_t no = 1; std::getline(in, line); ++no) {
    const auto t = tokens(line);
    if (t.empty()) continue;
    if (declared < 0 && t[0] != "nodes") fail(name, no, "the first entry must be `nodes <n>`");
    if (t[0] == "nodes") {
      if (declared >= 0) fail(name, no, "duplicate `nodes` line");
      if (t.size() != 2) fail(name, no, "expected `nodes <n>`");
      const double n = number(t[1], name, no);
      if (n < 1 || n != static_cast<long>(n)) fail(name, no, "node count must be a positive integer");
      declared = static_cast<long>(n);
    } else if (t[0] == "edge") {
      if (t.size() < 3) fail(name, no, "expected `edge <tail> <head> [family params]`");
      f.net.add_edge(f.net.node(t[1]), f.net.node(t[2]));
      if (t.size() > 3) {
        try {
          f.edge_costs.emplace_back(CongestionSpec::parse(join(t, 3)));
        } catch (const Error& e) {
          fail(name, no, e.what());
        }
      } else {
        f.edge_costs.emplace_back();
      }
    } else if (t[0] == "source" || t[0] == "dest") {
      if (t.size() != 2) fail(name, no, "expected `" + t[0] + " <label>`");
      const int id = f.net.node(t[1]);
      if (t[0] == "source") f.net.add_source(id);
      else f.net.add_destination(id);
    } else {
      fail(name, no, "unknown keyword '" + t[0] + "'");
    }
  }
  if (declared < 0) throw Error(ErrorCode::ParseError, name + ": missing `nodes <n>`");
  if (static_cast<long>(f.net.node_count()) != declared)
    throw Error(ErrorCode::ParseError, name + ": declared " + std::to_string(declared) + " nodes but found " +
                                           std::to_string(f.net.node_count()) + " labels");
  validate_network(f.net);
  return f;
}

NetworkFile read_network(const std::string& path) {
  auto in = open(path);
  return parse_network(in, path);
}

DemandSpec parse_demand(std::istream& in, const Network& net, const std::string& name) {
  const auto& S = net.sources();
  const auto& D = net.destinations();
  auto position = [&](const std::vector<int>& ids, const std::string& label, std::size_t no, const char* role) {
    const int id = net.find(label);
    for (std::size_t k = 0; k < ids.size(); ++k)
      if (ids[k] == id) return k;
    fail(name, no, "'" + label + "' is not a " + role);
  };
  Matrix gamma(S.size(), D.size());
  std::vector<double> mu(S.size(), 0.0), nu(D.size(), 0.0);
  bool fixed = false, marginal = false;
  std::string line;
  for (std::size_t no = 1; std::getline(in, line); ++no) {
    const auto t = tokens(line);
    if (t.empty()) continue;
    if (t[0] == "demand") {
      if (t.size() != 4) fail(name, no, "expected `demand <s> <d> <value>`");
      const double v = number(t[3], name, no);
      if (!(v >= 0.0)) fail(name, no, "demand must be nonnegative");
      gamma(position(S, t[1], no, "source"), position(D, t[2], no, "destination")) += v;
      fixed = true;
    } else if (t[0] == "mu" || t[0] == "nu") {
      if (t.size() != 3) fail(name, no, "expected `" + t[0] + " <label> <value>`");
      const double v = number(t[2], name, no);
      if (!(v >= 0.0)) fail(name, no, "marginal must be nonnegative");
      if (t[0] == "mu") mu[position(S, t[1], no, "source")] += v;
      else nu[position(D, t[1], no, "destination")] += v;
      marginal = true;
    } else {
      fail(name, no, "unknown keyword '" + t[0] + "'");
    }
    if (fixed && marginal) fail(name, no, "`demand` and `mu`/`nu` lines cannot be mixed");
  }
  if (!fixed && !marginal) throw Error(ErrorCode::ParseError, name + ": no demand given");
  return fixed ? DemandSpec::fixed(std::move(gamma)) : DemandSpec::marginals(std::move(mu), std::move(nu));
}

DemandSpec read_demand(const std::string& path, const Network& net) {
  auto in = open(path);
  return parse_demand(in, net, path);
}

DiscreteMeasure parse_measure(std::istream& in, const std::string& name) {
  std::vector<std::vector<double>> pts;
  std::vector<double> w;
  std::string line;
  for (std::size_t no = 1; std::getline(in, line); ++no) {
    const auto t = tokens(line);
    if (t.empty()) continue;
    if (t[0] != "point") fail(name, no, "unknown keyword '" + t[0] + "'");
    if (t.size() < 3) fail(name, no, "expected `point <x> [<y> ...] <weight>`");
    std::vector<double> p;
    for (std::size_t k = 1; k + 1 < t.size(); ++k) p.push_back(number(t[k], name, no));
    if (!pts.empty() && p.size() != pts.front().size()) fail(name, no, "points differ in dimension");
    const double weight = number(t.back(), name, no);
    if (!(weight >= 0.0)) fail(name, no, "weight must be nonnegative");
    pts.push_back(std::move(p));
    w.push_back(weight);
  }
  if (pts.empty()) throw Error(ErrorCode::ParseError, name + ": no points");
  DiscreteMeasure m(pts.front().size());
  for (std::size_t k = 0; k < pts.size(); ++k) m.add(pts[k], w[k]);
  return m;
}

DiscreteMeasure read_measure(const std::string& path) {
  auto in = open(path);
  return parse_measure(in, path);
}

Matrix parse_matrix_csv(std::istream& in, const std::string& name) {
  std::vector<std::vector<double>> rows;
  std::string line;
  for (std::size_t no = 1; std::getline(in, line); ++no) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::stringstream ss(line);
    std::vector<double> row;
    for (std::string cell; std::getline(ss, cell, ',');) {
      const auto t = tokens(cell);
      if (t.size() != 1) fail(name, no, "empty or malformed cell");
      row.push_back(number(t[0], name, no));
    }
    if (!rows.empty() && row.size() != rows.front().size()) fail(name, no, "rows differ in length");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error(ErrorCode::ParseError, name + ": empty matrix");
  Matrix m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  return m;
}

Matrix read_matrix_csv(const std::string& path) {
  auto in = open(path);
  return parse_matrix_csv(in, path);
}

void write_matrix_csv(const std::string& path, const Matrix& m) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::InvalidInput, "cannot write '" + path + "'");
  char buf[32];
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", m(i, j));
      out << (j ? "," : "") << buf;
    }
    out << '\n';
  }
}

}  // namespace cot
