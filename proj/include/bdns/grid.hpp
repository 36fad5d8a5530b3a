/// Periodic uniform grids, field storage and centered discrete calculus.
///
/// Storage is one flat contiguous array per field component. In 2D the cell
/// (i0, i1) lives at index i0 * n1 + i1 (axis 0 slowest); a 1D grid is stored
/// as n0 x 1. Cell centres sit at x = (i + 1/2) dx.
#pragma once

#include <array>
#include <cstddef>
#include <vector>

namespace bdns {

using ScalarField = std::vector<double>;
/// One ScalarField per velocity/momentum component (size == grid dim).
using VectorField = std::vector<ScalarField>;

struct PeriodicGrid {
  int dim = 1;
  std::array<int, 2> sizes{8, 1};
  std::array<double, 2> lengths{1.0, 1.0};

  static PeriodicGrid line(int n, double length = 1.0);
  static PeriodicGrid square(int n0, int n1, double length0 = 1.0, double length1 = 1.0);

  double spacing(int axis) const { return lengths[axis] / sizes[axis]; }
  double min_spacing() const;
  std::size_t cell_count() const { return static_cast<std::size_t>(sizes[0]) * sizes[1]; }
  double cell_volume() const;
  double volume() const { return dim == 1 ? lengths[0] : lengths[0] * lengths[1]; }

  std::size_t index(int i0, int i1) const { return static_cast<std::size_t>(i0) * sizes[1] + i1; }
  /// Flat offset of the periodic neighbour `shift` cells away along `axis`.
  std::size_t neighbor(std::size_t idx, int axis, int shift) const;
  /// Centre coordinate of the cell along `axis`.
  double center(std::size_t idx, int axis) const;

  /// Throws ArgumentError on dim outside {1,2}, sizes < 8 or non-positive lengths.
  void check() const;
  bool operator==(const PeriodicGrid&) const = default;
};

ScalarField make_scalar(const PeriodicGrid& grid, double value = 0.0);
VectorField make_vector(const PeriodicGrid& grid, double value = 0.0);

struct State {
  double t = 0.0;
  ScalarField rho;
  VectorField mom;
};

State make_state(const PeriodicGrid& grid);
/// Throws ArgumentError if the field sizes do not match the grid.
void check_state(const State& state, const PeriodicGrid& grid);

struct DerivedFields {
  VectorField u;           ///< m / rho on cells with rho > eps_vac, else 0
  ScalarField sqrt_rho;    ///< sqrt(max(rho, 0))
  VectorField sqrt_rho_u;  ///< m / sqrt(rho) on cells with rho > eps_vac, else 0
  /// Cells where rho <= eps_vac but the momentum was non-zero (cutoff engaged).
  std::size_t cutoff_cells = 0;
};

DerivedFields derived(const State& state, const PeriodicGrid& grid, double eps_vac);

// Second-order centered periodic differences. lap is the wide stencil so
// that div(grad f) == lap f holds exactly in exact arithmetic.
VectorField grad(const ScalarField& f, const PeriodicGrid& grid);
ScalarField div(const VectorField& v, const PeriodicGrid& grid);
ScalarField lap(const ScalarField& f, const PeriodicGrid& grid);
/// d f / d x_axis, centered.
ScalarField partial(const ScalarField& f, const PeriodicGrid& grid, int axis);

/// Midpoint quadrature sum f * cell volume.
double integrate(const ScalarField& f, const PeriodicGrid& grid);
/// (int |f|^p)^{1/p}; p = infinity gives max |f|. Throws ArgumentError for p < 1.
double lp_norm(const ScalarField& f, const PeriodicGrid& grid, double p);
/// Pointwise Euclidean magnitude of a vector field.
ScalarField magnitude(const VectorField& v);

}  // namespace bdns
