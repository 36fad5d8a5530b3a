#include "rhs_common.hpp"

namespace bdns {

void RhsWorkspace::resize(const PeriodicGrid& g) {
  grid = g;
  const std::size_t n = g.cell_count();
  rho.assign(n, 0.0);
  p.assign(n, 0.0);
  c.assign(n, 0.0);
  h.assign(n, 0.0);
  this->g.assign(n, 0.0);
  vacuum.assign(n, 0);
  u = make_vector(g);
  dudiag = make_vector(g);
  for (int a = 0; a < 2; ++a) {
    const bool used = a < g.dim;
    rho_minus[a].assign(used ? n : 0, 0.0);
    rho_plus[a].assign(used ? n : 0, 0.0);
    u_minus[a] = used ? make_vector(g) : VectorField{};
    u_plus[a] = used ? make_vector(g) : VectorField{};
    flux_rho[a].assign(used ? n : 0, 0.0);
    flux_mom[a] = used ? make_vector(g) : VectorField{};
  }
}

void rhs_serial(const PeriodicGrid& grid, const FlowParams& params, const State& state, State& out,
                RhsWorkspace& ws) {
  detail::prepare_output(grid, params, state, out, ws);
  const detail::Stencil st{grid.sizes[0], grid.sizes[1]};
  const std::size_t n = grid.cell_count();
  const int dim = grid.dim;

  for (std::size_t i = 0; i < n; ++i) detail::prepare_cell(i, dim, params, state, ws);
  for (std::size_t i = 0; i < n; ++i) detail::reconstruct_cell(i, dim, st, ws);
  for (int a = 0; a < dim; ++a)
    for (std::size_t i = 0; i < n; ++i) detail::face_flux(i, a, dim, st, params, ws);
  for (std::size_t i = 0; i < n; ++i) detail::assemble_cell(i, dim, st, ws, out);
}

}  // namespace bdns
