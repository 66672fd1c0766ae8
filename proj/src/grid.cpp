#include "cot/grid.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "cot/error.hpp"

namespace cot {

Grid Grid::make(int nx, int ny, double h) {
  if (nx < 1 || ny < 1 || static_cast<long long>(nx) * ny < 2)
    throw Error(ErrorCode::InvalidInput, "grid needs at least two cells");
  if (!(h > 0.0) || !std::isfinite(h)) throw Error(ErrorCode::InvalidInput, "grid spacing must be positive");
  return Grid{nx, ny, h};
}

bool Grid::contains(double x, double y) const {
  const double sx = 1e-12 * std::max(1.0, width());
  const double sy = 1e-12 * std::max(1.0, height());
  return x >= -sx && x <= width() + sx && y >= -sy && y <= height() + sy;
}

std::pair<int, int> Grid::locate(double x, double y) const {
  const int i = std::clamp(static_cast<int>(std::floor(x / h)), 0, nx - 1);
  const int j = std::clamp(static_cast<int>(std::floor(y / h)), 0, ny - 1);
  return {i, j};
}

double ScalarField::mass() const {
  return grid_.area() * std::accumulate(values_.begin(), values_.end(), 0.0);
}

double ScalarField::max() const {
  return values_.empty() ? 0.0 : *std::max_element(values_.begin(), values_.end());
}

double VectorField::boundary_flux() const {
  double m = 0.0;
  for (int j = 0; j < grid_.ny; ++j) m = std::max({m, std::abs(vx(0, j)), std::abs(vx(grid_.nx, j))});
  for (int i = 0; i < grid_.nx; ++i) m = std::max({m, std::abs(vy(i, 0)), std::abs(vy(i, grid_.ny))});
  return m;
}

void VectorField::clear_boundary() {
  for (int j = 0; j < grid_.ny; ++j) vx(0, j) = vx(grid_.nx, j) = 0.0;
  for (int i = 0; i < grid_.nx; ++i) vy(i, 0) = vy(i, grid_.ny) = 0.0;
}

ScalarField cell_magnitude(const VectorField& v) {
  const Grid& g = v.grid();
  ScalarField out(g);
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      const double a = v.vx(i, j), b = v.vx(i + 1, j), c = v.vy(i, j), d = v.vy(i, j + 1);
      out(i, j) = std::sqrt(0.5 * (a * a + b * b + c * c + d * d));
    }
  }
  return out;
}

std::pair<ScalarField, ScalarField> cell_average(const VectorField& v) {
  const Grid& g = v.grid();
  ScalarField cx(g), cy(g);
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      cx(i, j) = 0.5 * (v.vx(i, j) + v.vx(i + 1, j));
      cy(i, j) = 0.5 * (v.vy(i, j) + v.vy(i, j + 1));
    }
  }
  return {std::move(cx), std::move(cy)};
}

namespace {

void write_sidecar(const std::string& path, int nx, int ny, double h) {
  std::ofstream out(path + ".grid");
  if (!out) throw Error(ErrorCode::InvalidInput, "cannot write '" + path + ".grid'");
  out.precision(17);
  out << "grid " << nx << ' ' << ny << ' ' << h << '\n';
}

void write_table(const std::string& path, const std::vector<double>& values, int cols, int rows) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::InvalidInput, "cannot write '" + path + "'");
  out.precision(17);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (c) out << ',';
      out << values[static_cast<std::size_t>(r) * static_cast<std::size_t>(cols) + static_cast<std::size_t>(c)];
    }
    out << '\n';
  }
}

}  // namespace

void write_scalar_csv(const std::string& path, const ScalarField& f) {
  const Grid& g = f.grid();
  write_table(path, f.values(), g.nx, g.ny);
  write_sidecar(path, g.nx, g.ny, g.h);
}

ScalarField read_scalar_csv(const std::string& path) {
  std::ifstream side(path + ".grid");
  if (!side) throw Error(ErrorCode::InvalidInput, "missing sidecar '" + path + ".grid'");
  std::string tag;
  int nx = 0, ny = 0;
  double h = 0.0;
  if (!(side >> tag >> nx >> ny >> h) || tag != "grid")
    throw Error(ErrorCode::ParseError, "sidecar '" + path + ".grid' must read `grid <nx> <ny> <h>`");
  ScalarField f(Grid::make(nx, ny, h));

  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidInput, "cannot read '" + path + "'");
  std::string line;
  int row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (row >= ny) throw Error(ErrorCode::ShapeMismatch, "'" + path + "' has more than " + std::to_string(ny) + " rows");
    std::stringstream ss(line);
    std::string cell;
    int col = 0;
    while (std::getline(ss, cell, ',')) {
      if (col >= nx) throw Error(ErrorCode::ShapeMismatch, "row " + std::to_string(row) + " of '" + path + "' is too long");
      try {
        f(col, row) = std::stod(cell);
      } catch (const std::exception&) {
        throw Error(ErrorCode::ParseError, "bad number '" + cell + "' in '" + path + "'");
      }
      ++col;
    }
    if (col != nx) throw Error(ErrorCode::ShapeMismatch, "row " + std::to_string(row) + " of '" + path + "' is too short");
    ++row;
  }
  if (row != ny) throw Error(ErrorCode::ShapeMismatch, "'" + path + "' has " + std::to_string(row) + " rows, expected " + std::to_string(ny));
  return f;
}

void write_vector_csv(const std::string& stem, const VectorField& v) {
  const Grid& g = v.grid();
  write_table(stem + "_vx.csv", v.vx_data(), g.nx + 1, g.ny);
  write_sidecar(stem + "_vx.csv", g.nx, g.ny, g.h);
  write_table(stem + "_vy.csv", v.vy_data(), g.nx, g.ny + 1);
  write_sidecar(stem + "_vy.csv", g.nx, g.ny, g.h);
}

}  // namespace cot
