#include "bdns/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bdns/errors.hpp"

namespace bdns {

PeriodicGrid PeriodicGrid::line(int n, double length) {
  PeriodicGrid g;
  g.dim = 1;
  g.sizes = {n, 1};
  g.lengths = {length, 1.0};
  g.check();
  return g;
}

PeriodicGrid PeriodicGrid::square(int n0, int n1, double length0, double length1) {
  PeriodicGrid g;
  g.dim = 2;
  g.sizes = {n0, n1};
  g.lengths = {length0, length1};
  g.check();
  return g;
}

void PeriodicGrid::check() const {
  if (dim != 1 && dim != 2) throw ArgumentError("grid dimension must be 1 or 2");
  for (int a = 0; a < dim; ++a) {
    if (sizes[a] < 8) throw ArgumentError("grid needs at least 8 cells per axis");
    if (!(lengths[a] > 0.0)) throw ArgumentError("grid lengths must be > 0");
  }
  if (dim == 1 && sizes[1] != 1) throw ArgumentError("1D grid must have a unit second axis");
}

double PeriodicGrid::min_spacing() const {
  double h = spacing(0);
  if (dim == 2) h = std::min(h, spacing(1));
  return h;
}

double PeriodicGrid::cell_volume() const {
  return dim == 1 ? spacing(0) : spacing(0) * spacing(1);
}

std::size_t PeriodicGrid::neighbor(std::size_t idx, int axis, int shift) const {
  const int n1 = sizes[1];
  int i0 = static_cast<int>(idx / n1);
  int i1 = static_cast<int>(idx % n1);
  if (axis == 0)
    i0 = ((i0 + shift) % sizes[0] + sizes[0]) % sizes[0];
  else
    i1 = ((i1 + shift) % n1 + n1) % n1;
  return index(i0, i1);
}

double PeriodicGrid::center(std::size_t idx, int axis) const {
  const int i = axis == 0 ? static_cast<int>(idx / sizes[1]) : static_cast<int>(idx % sizes[1]);
  return (i + 0.5) * spacing(axis);
}

ScalarField make_scalar(const PeriodicGrid& grid, double value) {
  return ScalarField(grid.cell_count(), value);
}

VectorField make_vector(const PeriodicGrid& grid, double value) {
  return VectorField(grid.dim, make_scalar(grid, value));
}

State make_state(const PeriodicGrid& grid) {
  return State{0.0, make_scalar(grid), make_vector(grid)};
}

void check_state(const State& state, const PeriodicGrid& grid) {
  if (state.rho.size() != grid.cell_count()) throw ArgumentError("density field does not match grid");
  if (static_cast<int>(state.mom.size()) != grid.dim)
    throw ArgumentError("momentum component count does not match grid dimension");
  for (const auto& c : state.mom)
    if (c.size() != grid.cell_count()) throw ArgumentError("momentum field does not match grid");
}

DerivedFields derived(const State& state, const PeriodicGrid& grid, double eps_vac) {
  check_state(state, grid);
  DerivedFields d;
  const std::size_t n = grid.cell_count();
  d.u = make_vector(grid);
  d.sqrt_rho_u = make_vector(grid);
  d.sqrt_rho.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double r = state.rho[i];
    d.sqrt_rho[i] = std::sqrt(std::max(r, 0.0));
    if (r > eps_vac) {
      const double s = d.sqrt_rho[i];
      for (int a = 0; a < grid.dim; ++a) {
        d.u[a][i] = state.mom[a][i] / r;
        d.sqrt_rho_u[a][i] = state.mom[a][i] / s;
      }
    } else {
      bool moving = false;
      for (int a = 0; a < grid.dim; ++a) moving = moving || state.mom[a][i] != 0.0;
      if (moving) ++d.cutoff_cells;
    }
  }
  return d;
}

ScalarField partial(const ScalarField& f, const PeriodicGrid& grid, int axis) {
  if (f.size() != grid.cell_count()) throw ArgumentError("partial: field does not match grid");
  if (axis < 0 || axis >= grid.dim) throw ArgumentError("partial: axis out of range");
  ScalarField out(f.size());
  const double inv = 1.0 / (2.0 * grid.spacing(axis));
  for (std::size_t i = 0; i < f.size(); ++i)
    out[i] = (f[grid.neighbor(i, axis, 1)] - f[grid.neighbor(i, axis, -1)]) * inv;
  return out;
}

VectorField grad(const ScalarField& f, const PeriodicGrid& grid) {
  VectorField g(grid.dim);
  for (int a = 0; a < grid.dim; ++a) g[a] = partial(f, grid, a);
  return g;
}

ScalarField div(const VectorField& v, const PeriodicGrid& grid) {
  if (static_cast<int>(v.size()) != grid.dim) throw ArgumentError("div: component count mismatch");
  ScalarField out = make_scalar(grid);
  for (int a = 0; a < grid.dim; ++a) {
    const ScalarField d = partial(v[a], grid, a);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += d[i];
  }
  return out;
}

ScalarField lap(const ScalarField& f, const PeriodicGrid& grid) {
  if (f.size() != grid.cell_count()) throw ArgumentError("lap: field does not match grid");
  ScalarField out = make_scalar(grid);
  for (int a = 0; a < grid.dim; ++a) {
    const double inv = 1.0 / (4.0 * grid.spacing(a) * grid.spacing(a));
    for (std::size_t i = 0; i < f.size(); ++i)
      out[i] += (f[grid.neighbor(i, a, 2)] - 2.0 * f[i] + f[grid.neighbor(i, a, -2)]) * inv;
  }
  return out;
}

double integrate(const ScalarField& f, const PeriodicGrid& grid) {
  if (f.size() != grid.cell_count()) throw ArgumentError("integrate: field does not match grid");
  double s = 0.0;
  for (double v : f) s += v;
  return s * grid.cell_volume();
}

double lp_norm(const ScalarField& f, const PeriodicGrid& grid, double p) {
  if (!(p >= 1.0)) throw ArgumentError("lp_norm: p must be >= 1");
  if (f.size() != grid.cell_count()) throw ArgumentError("lp_norm: field does not match grid");
  if (std::isinf(p)) {
    double m = 0.0;
    for (double v : f) m = std::max(m, std::abs(v));
    return m;
  }
  double s = 0.0;
  if (p == 1.0) {
    for (double v : f) s += std::abs(v);
    return s * grid.cell_volume();
  }
  if (p == 2.0) {
    for (double v : f) s += v * v;
    return std::sqrt(s * grid.cell_volume());
  }
  for (double v : f) s += std::pow(std::abs(v), p);
  return std::pow(s * grid.cell_volume(), 1.0 / p);
}

ScalarField magnitude(const VectorField& v) {
  if (v.empty()) return {};
  ScalarField out(v[0].size(), 0.0);
  for (const auto& c : v)
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += c[i] * c[i];
  for (double& x : out) x = std::sqrt(x);
  return out;
}

}  // namespace bdns
