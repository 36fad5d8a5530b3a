/// Explicit time integration of the mass/momentum system on a periodic grid.
#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "bdns/diagnostics.hpp"
#include "bdns/grid.hpp"
#include "bdns/kernels.hpp"
#include "bdns/viscosity_law.hpp"

namespace bdns {

enum class Integrator { ssp_rk2, rk4 };

/// Adds a momentum source at time t into dmom (manufactured-solution runs only).
using MomentumForcing = std::function<void(double t, const PeriodicGrid& grid, VectorField& dmom)>;

struct SolverConfig {
  ViscosityLaw law = ViscosityLaw::linear();
  AdmissibilityParams params;
  PeriodicGrid grid;
  double cfl = 0.4;
  double t_end = 0.1;
  Integrator integrator = Integrator::ssp_rk2;
  /// Vacuum cutoff; <= 0 means 1e-10 * max(rho_0), fixed at the start of run().
  double eps_vac = 0.0;
  int ledger_stride = 1;
  /// Steps between stored checkpoints; 0 keeps only the first and last state.
  int checkpoint_stride = 1;
  /// Run a law that failed validation instead of refusing it.
  bool allow_non_admissible = false;
  /// Skip diagnostics entirely (the ledger stays empty).
  bool record_ledger = true;
  MomentParams moments;
  MomentumForcing forcing;
  /// OpenMP threads for the right-hand side; 1 selects the serial kernel.
  int threads = 0;
};

struct RunCounters {
  std::size_t clamp_events = 0;      ///< cells lifted from rho < 0 to 0
  std::size_t cutoff_events = 0;     ///< cells with rho <= eps_vac whose momentum was zeroed
  std::size_t initial_zeroed = 0;    ///< initial momentum discarded on vacuum cells
};

struct Trajectory {
  std::vector<State> checkpoints;
  State final_state;
  RunCounters counters;
  std::size_t steps = 0;
  double eps_vac = 0.0;
  bool admissible = true;
};

/// eps_vac the solver would use for this initial state.
double resolve_eps_vac(const SolverConfig& config, const State& initial);

/// d/dt of (rho, m), including the forcing hook. `out.t` is the state time.
State rhs(const State& state, const SolverConfig& config);

/// Largest step allowed by the advective and diffusive limits.
double stable_dt(const State& state, const SolverConfig& config);

/// One full Runge-Kutta step with clamping and vacuum cutoff after every stage.
/// Counters, when given, are incremented.
State step(const State& state, const SolverConfig& config, double dt, RunCounters* counters = nullptr);

/// Advance to t_end. Throws SolverAbort on non-finite fields or dt underflow and
/// ArgumentError on a non-admissible law without override.
std::pair<Trajectory, EntropyLedger> run(const SolverConfig& config, const State& initial);

FlowSetup flow_setup(const SolverConfig& config, double eps_vac);

}  // namespace bdns
