/// Spatial right-hand side of the mass/momentum system.
///
/// Two implementations of the same per-face arithmetic: rhs_serial is the
/// reference loop nest, rhs_omp splits every cell/face loop across OpenMP
/// threads. Each face flux is computed exactly once and written to its own
/// slot, so both produce bit-identical output for any thread count.
///
/// Discretisation (finite volume, per axis a with spacing dx_a):
///  - density and velocity reconstructed linearly from centered slopes; the
///    density slope is scaled so both face values stay >= 0, the velocity
///    slope is dropped next to vacuum cells;
///  - local Lax-Friedrichs flux for rho u and rho u (x) u with speed
///    max(|u_n| + c), c = sqrt(gamma rho^{gamma-1});
///  - pressure as the face average of cell pressures (a centered difference);
///  - viscous fluxes h_f d_a u_k + delta_{ka} g_f (div u)_f, with h_f the
///    harmonic mean of the neighbouring h (zero next to h = 0) and g_f the
///    arithmetic mean of g (zero next to a vacuum cell).
#pragma once

#include "bdns/grid.hpp"
#include "bdns/viscosity_law.hpp"

namespace bdns {

struct FlowParams {
  const ViscosityLaw* law = nullptr;
  double gamma = 2.0;
  double eps_vac = 0.0;
};

/// Scratch buffers reused across evaluations on one grid.
struct RhsWorkspace {
  PeriodicGrid grid;
  ScalarField rho, p, c, h, g;
  std::vector<unsigned char> vacuum;
  VectorField u;
  VectorField dudiag;  ///< centered d_b u_b per cell (2D only)
  // Per axis: reconstructed face-side values, index = cell.
  std::array<ScalarField, 2> rho_minus, rho_plus;
  std::array<VectorField, 2> u_minus, u_plus;
  // Per axis: flux through the face between cell i and its + neighbour.
  std::array<ScalarField, 2> flux_rho;
  std::array<VectorField, 2> flux_mom;

  void resize(const PeriodicGrid& g);
};

/// out.rho = d rho/dt, out.mom = d m/dt. `out` is resized as needed.
void rhs_serial(const PeriodicGrid& grid, const FlowParams& params, const State& state, State& out,
                RhsWorkspace& ws);
/// threads <= 0 uses the OpenMP default.
void rhs_omp(const PeriodicGrid& grid, const FlowParams& params, const State& state, State& out,
             RhsWorkspace& ws, int threads = 0);

}  // namespace bdns
