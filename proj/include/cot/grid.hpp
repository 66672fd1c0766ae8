#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace cot {

/// Regular grid of nx x ny square cells of side h covering [0, nx h] x [0, ny h].
/// Cell (i, j) has center ((i + 1/2) h, (j + 1/2) h) and flat index j * nx + i.
struct Grid {
  int nx = 0;
  int ny = 0;
  double h = 0.0;

  /// Throws InvalidInput unless nx, ny >= 1, nx * ny >= 2 and h > 0. A single
  /// row (ny = 1) is the 1-D special case.
  static Grid make(int nx, int ny, double h);

  std::size_t cells() const { return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny); }
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(j) * static_cast<std::size_t>(nx) + static_cast<std::size_t>(i);
  }
  double width() const { return nx * h; }
  double height() const { return ny * h; }
  double xc(int i) const { return (i + 0.5) * h; }
  double yc(int j) const { return (j + 0.5) * h; }
  double area() const { return h * h; }
  /// Closed-domain membership with a relative slack of 1e-12.
  bool contains(double x, double y) const;
  /// Cell holding (x, y); points on interior grid lines go to the upper cell,
  /// points on the outer boundary to the adjacent cell.
  std::pair<int, int> locate(double x, double y) const;

  friend bool operator==(const Grid&, const Grid&) = default;
};

/// Cell-centered values, e.g. a density in mass per unit area.
class ScalarField {
 public:
  ScalarField() = default;
  explicit ScalarField(const Grid& g, double fill = 0.0) : grid_(g), values_(g.cells(), fill) {}

  const Grid& grid() const { return grid_; }
  double& operator()(int i, int j) { return values_[grid_.index(i, j)]; }
  double operator()(int i, int j) const { return values_[grid_.index(i, j)]; }
  double& operator[](std::size_t k) { return values_[k]; }
  double operator[](std::size_t k) const { return values_[k]; }
  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }
  std::size_t size() const { return values_.size(); }

  /// h^2 * sum of values.
  double mass() const;
  double max() const;

 private:
  Grid grid_;
  std::vector<double> values_;
};

/// Staggered face fluxes: vx on the (nx + 1) x ny vertical faces, vy on the
/// nx x (ny + 1) horizontal faces. vx(i, j) sits at (i h, (j + 1/2) h) and
/// vy(i, j) at ((i + 1/2) h, j h). Zero flux through the outer boundary means
/// vx(0, j) = vx(nx, j) = vy(i, 0) = vy(i, ny) = 0.
class VectorField {
 public:
  VectorField() = default;
  explicit VectorField(const Grid& g)
      : grid_(g),
        vx_(static_cast<std::size_t>(g.nx + 1) * static_cast<std::size_t>(g.ny), 0.0),
        vy_(static_cast<std::size_t>(g.nx) * static_cast<std::size_t>(g.ny + 1), 0.0) {}

  const Grid& grid() const { return grid_; }
  double& vx(int i, int j) { return vx_[static_cast<std::size_t>(j) * static_cast<std::size_t>(grid_.nx + 1) + static_cast<std::size_t>(i)]; }
  double vx(int i, int j) const { return vx_[static_cast<std::size_t>(j) * static_cast<std::size_t>(grid_.nx + 1) + static_cast<std::size_t>(i)]; }
  double& vy(int i, int j) { return vy_[static_cast<std::size_t>(j) * static_cast<std::size_t>(grid_.nx) + static_cast<std::size_t>(i)]; }
  double vy(int i, int j) const { return vy_[static_cast<std::size_t>(j) * static_cast<std::size_t>(grid_.nx) + static_cast<std::size_t>(i)]; }
  std::vector<double>& vx_data() { return vx_; }
  const std::vector<double>& vx_data() const { return vx_; }
  std::vector<double>& vy_data() { return vy_; }
  const std::vector<double>& vy_data() const { return vy_; }

  /// Largest |flux| on a boundary face.
  double boundary_flux() const;
  /// Sets every boundary face to zero.
  void clear_boundary();

 private:
  Grid grid_;
  std::vector<double> vx_;
  std::vector<double> vy_;
};

/// Cell-RMS magnitude sqrt((vxL^2 + vxR^2 + vyB^2 + vyT^2) / 2) per cell.
ScalarField cell_magnitude(const VectorField& v);
/// Co-located components: averages of the two faces of each cell per axis.
std::pair<ScalarField, ScalarField> cell_average(const VectorField& v);

/// CSV with ny rows (row j = cell row j, bottom first) of nx values, plus a
/// `<path>.grid` sidecar holding `grid <nx> <ny> <h>`.
void write_scalar_csv(const std::string& path, const ScalarField& f);
ScalarField read_scalar_csv(const std::string& path);
/// Writes `<stem>_vx.csv` and `<stem>_vy.csv`, each with a sidecar.
void write_vector_csv(const std::string& stem, const VectorField& v);

}  // namespace cot
