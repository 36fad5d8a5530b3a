// Per-cell and per-face pieces shared by the serial and OpenMP right-hand sides.
// Every function writes only the slot(s) owned by its index argument.
#pragma once

#include <algorithm>
#include <cmath>

#include "bdns/errors.hpp"
#include "bdns/kernels.hpp"

namespace bdns::detail {

struct Stencil {
  int n0, n1;
  std::size_t at(std::size_t idx, int axis, int shift) const {
    int i0 = static_cast<int>(idx / n1);
    int i1 = static_cast<int>(idx % n1);
    if (axis == 0)
      i0 = (i0 + shift + 2 * n0) % n0;
    else
      i1 = (i1 + shift + 2 * n1) % n1;
    return static_cast<std::size_t>(i0) * n1 + i1;
  }
};

inline double pressure(double rho, double gamma) {
  return gamma == 2.0 ? rho * rho : std::pow(rho, gamma);
}

inline double sound_speed(double rho, double gamma) {
  if (rho <= 0.0) return 0.0;
  return gamma == 2.0 ? std::sqrt(2.0 * rho) : std::sqrt(gamma * std::pow(rho, gamma - 1.0));
}

inline void prepare_cell(std::size_t i, int dim, const FlowParams& fp, const State& s, RhsWorkspace& ws) {
  const double r = std::max(s.rho[i], 0.0);
  const bool vac = !(r > fp.eps_vac);
  ws.rho[i] = r;
  ws.vacuum[i] = vac ? 1 : 0;
  for (int a = 0; a < dim; ++a) ws.u[a][i] = vac ? 0.0 : s.mom[a][i] / r;
  ws.p[i] = pressure(r, fp.gamma);
  ws.c[i] = sound_speed(r, fp.gamma);
  ws.h[i] = eval_h(*fp.law, r);
  ws.g[i] = eval_g(*fp.law, r);
}

inline void reconstruct_cell(std::size_t i, int dim, const Stencil& st, RhsWorkspace& ws) {
  for (int a = 0; a < dim; ++a) {
    const std::size_t lo = st.at(i, a, -1);
    const std::size_t hi = st.at(i, a, 1);
    const double r = ws.rho[i];
    double half = 0.25 * (ws.rho[hi] - ws.rho[lo]);
    if (std::abs(half) > r) half = half > 0.0 ? r : -r;
    ws.rho_minus[a][i] = r - half;
    ws.rho_plus[a][i] = r + half;
    const bool flat = ws.vacuum[lo] || ws.vacuum[i] || ws.vacuum[hi];
    for (int k = 0; k < dim; ++k) {
      const double uh = flat ? 0.0 : 0.25 * (ws.u[k][hi] - ws.u[k][lo]);
      ws.u_minus[a][k][i] = ws.u[k][i] - uh;
      ws.u_plus[a][k][i] = ws.u[k][i] + uh;
    }
    if (dim == 2) ws.dudiag[a][i] = (ws.u[a][hi] - ws.u[a][lo]) / (2.0 * ws.grid.spacing(a));
  }
}

// Face between cell i and its + neighbour along `a`.
inline void face_flux(std::size_t i, int a, int dim, const Stencil& st, const FlowParams& fp, RhsWorkspace& ws) {
  const std::size_t j = st.at(i, a, 1);
  const double dx = ws.grid.spacing(a);

  const double rl = ws.rho_plus[a][i];
  const double rr = ws.rho_minus[a][j];
  const double unl = ws.u_plus[a][a][i];
  const double unr = ws.u_minus[a][a][j];
  const double alpha =
      std::max(std::abs(unl) + sound_speed(rl, fp.gamma), std::abs(unr) + sound_speed(rr, fp.gamma));

  ws.flux_rho[a][i] = 0.5 * (rl * unl + rr * unr) - 0.5 * alpha * (rr - rl);

  const double hi = ws.h[i], hj = ws.h[j];
  const double hf = (hi > 0.0 && hj > 0.0) ? 2.0 * hi * hj / (hi + hj) : 0.0;
  const bool wet = !ws.vacuum[i] && !ws.vacuum[j];
  const double gf = wet ? 0.5 * (ws.g[i] + ws.g[j]) : 0.0;

  double divf = (ws.u[a][j] - ws.u[a][i]) / dx;
  if (dim == 2) {
    const int b = 1 - a;
    divf += 0.5 * (ws.dudiag[b][i] + ws.dudiag[b][j]);
  }

  for (int k = 0; k < dim; ++k) {
    const double ukl = ws.u_plus[a][k][i];
    const double ukr = ws.u_minus[a][k][j];
    double f = 0.5 * (rl * unl * ukl + rr * unr * ukr) - 0.5 * alpha * (rr * ukr - rl * ukl);
    if (k == a) f += 0.5 * (ws.p[i] + ws.p[j]) - gf * divf;
    f -= hf * (ws.u[k][j] - ws.u[k][i]) / dx;
    ws.flux_mom[a][k][i] = f;
  }
}

inline void assemble_cell(std::size_t i, int dim, const Stencil& st, const RhsWorkspace& ws, State& out) {
  double dr = 0.0;
  double dm[2] = {0.0, 0.0};
  for (int a = 0; a < dim; ++a) {
    const std::size_t lo = st.at(i, a, -1);
    const double inv = 1.0 / ws.grid.spacing(a);
    dr -= (ws.flux_rho[a][i] - ws.flux_rho[a][lo]) * inv;
    for (int k = 0; k < dim; ++k) dm[k] -= (ws.flux_mom[a][k][i] - ws.flux_mom[a][k][lo]) * inv;
  }
  out.rho[i] = dr;
  for (int k = 0; k < dim; ++k) out.mom[k][i] = dm[k];
}

inline void prepare_output(const PeriodicGrid& grid, const FlowParams& fp, const State& s, State& out,
                           RhsWorkspace& ws) {
  if (fp.law == nullptr) throw ArgumentError("rhs: missing viscosity law");
  check_state(s, grid);
  if (!(ws.grid == grid) || ws.rho.size() != grid.cell_count()) ws.resize(grid);
  if (out.rho.size() != grid.cell_count() || static_cast<int>(out.mom.size()) != grid.dim) {
    out = make_state(grid);
  }
  out.t = s.t;
}

}  // namespace bdns::detail
