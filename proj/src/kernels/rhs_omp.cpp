#include <omp.h>

#include "rhs_common.hpp"

namespace bdns {

void rhs_omp(const PeriodicGrid& grid, const FlowParams& params, const State& state, State& out,
             RhsWorkspace& ws, int threads) {
  detail::prepare_output(grid, params, state, out, ws);
  const detail::Stencil st{grid.sizes[0], grid.sizes[1]};
  const auto n = static_cast<std::int64_t>(grid.cell_count());
  const int dim = grid.dim;
  const int team = threads > 0 ? threads : omp_get_max_threads();

#pragma omp parallel num_threads(team)
  {
#pragma omp for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) detail::prepare_cell(i, dim, params, state, ws);
#pragma omp for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) detail::reconstruct_cell(i, dim, st, ws);
    for (int a = 0; a < dim; ++a) {
#pragma omp for schedule(static)
      for (std::int64_t i = 0; i < n; ++i) detail::face_flux(i, a, dim, st, params, ws);
    }
#pragma omp for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) detail::assemble_cell(i, dim, st, ws, out);
  }
}

}  // namespace bdns
