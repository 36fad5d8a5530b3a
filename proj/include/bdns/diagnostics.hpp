/// Entropy functionals, dissipation rates and a priori bound trackers.
///
/// Every quantity is evaluated without dividing by rho: velocity enters
/// through sqrt(rho) u, and sqrt(rho) grad phi(rho) is formed as
/// 2 h'(rho) grad sqrt(rho). Spatial derivatives are the centered ones from
/// grid.hpp; local norms are taken over the whole torus.
#pragma once

#include <array>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "bdns/grid.hpp"
#include "bdns/viscosity_law.hpp"

namespace bdns {

struct FlowSetup {
  PeriodicGrid grid;
  ViscosityLaw law;
  double gamma;
  double eps_vac;
};

struct MomentParams {
  double delta = 0.05;  ///< in (0, nu/4)
  double alpha = 0.02;  ///< in (0, delta/2)

  /// Throws ArgumentError when delta >= nu/4 or alpha >= delta/2.
  void check(double nu) const;
};

/// int rho|u|^2/2 + rho^gamma/(gamma-1).
double energy(const State& s, const FlowSetup& f);
/// int h |grad u|^2 + g (div u)^2, |grad u|^2 = sum_ij |d_i u_j|^2.
double dissipation(const State& s, const FlowSetup& f);
/// int 1/2 |sqrt(rho) u + 2 h' grad sqrt(rho)|^2 + rho^gamma/(gamma-1).
double bd_entropy(const State& s, const FlowSetup& f);
/// int grad phi(rho) . grad rho^gamma = 4 gamma int h' rho^{gamma-1} |grad sqrt(rho)|^2 >= 0.
double bd_cross(const State& s, const FlowSetup& f);
/// int rho |u|^{2+delta}/(2+delta). Throws ArgumentError unless delta in (0, 2).
double moment_functional(const State& s, const FlowSetup& f, double delta);
/// (int (rho^{2 gamma - delta/2}/h)^{2/(2-delta)})^{(2-delta)/2} (int rho |u|^2)^{delta/2}.
double moment_rhs(const State& s, const FlowSetup& f, double delta);

struct BoundRow {
  // energy level
  double sqrt_rho_u_l2 = 0;
  double rho_l1 = 0;
  double rho_lgamma = 0;
  double sqrt_h_grad_u_l2 = 0;
  // BD level
  double hprime_grad_sqrt_rho_l2 = 0;
  double pressure_gradient_weight_l2 = 0;  ///< || sqrt(h' rho^{gamma-2}) grad rho ||
  // consequences of h' >= nu
  double sqrt_rho_grad_u_l2 = 0;
  double grad_sqrt_rho_l2 = 0;
  double grad_rho_half_gamma_l2 = 0;
};

struct CompactnessRow {
  double pressure_l53_power = 0;    ///< int rho^{5 gamma/3}
  double sqrt_rho_u_l2p2a = 0;      ///< || sqrt(rho) u ||_{L^{2+2 alpha}}
  double h_over_sqrt_rho_l6 = 0;    ///< || h(rho)/sqrt(rho) ||_{L^6}, 0 on vacuum
  double psi_l6 = 0;                ///< || psi(rho) ||_{L^6}
};

BoundRow apriori_bounds(const State& s, const FlowSetup& f);
CompactnessRow compactness_quantities(const State& s, const FlowSetup& f, const MomentParams& mp);

struct LedgerRow {
  double t = 0;
  double energy = 0;
  double dissipation = 0;
  double bd_entropy = 0;
  double bd_cross = 0;
  double moment = 0;
  double moment_rhs = 0;
  BoundRow bounds;
  CompactnessRow compactness;
  std::size_t cutoff_count = 0;
  std::size_t clamp_count = 0;
};

struct EntropyLedger {
  double delta = 0.05;
  double alpha = 0.02;
  std::vector<LedgerRow> rows;
};

/// All ledger columns for one state (counters left at zero).
LedgerRow ledger_row(const State& s, const FlowSetup& f, const MomentParams& mp);

/// Column names in CSV order, and the matching values of a row.
std::vector<std::string> ledger_columns();
std::vector<double> ledger_values(const LedgerRow& row, const EntropyLedger& ledger);

void write_ledger_csv(std::ostream& os, const EntropyLedger& ledger);
void write_ledger_csv(const std::string& path, const EntropyLedger& ledger);
void write_ledger_jsonl(std::ostream& os, const EntropyLedger& ledger);
void write_ledger_jsonl(const std::string& path, const EntropyLedger& ledger);

// ---------------------------------------------------------------------------
// Weak-form residual of the momentum equation

/// A separable test field theta(t) Phi(x), Phi a finite Fourier sum.
struct TestField {
  struct Mode {
    int component;             ///< which vector component the mode feeds
    std::array<int, 2> wave;   ///< integer wave numbers per axis
    double cos_coeff;
    double sin_coeff;
  };
  std::vector<Mode> modes;
  std::function<double(double)> theta;
  std::function<double(double)> theta_dot;

  /// theta(t) = (1 - t/T)^2, vanishing at t = T.
  static TestField quadratic_decay(std::vector<Mode> modes, double horizon);
};

/// |sum of the weak momentum balance| along checkpointed states, trapezoid in
/// time. Throws ArgumentError when theta does not vanish at the last time.
double weak_form_residual(const std::vector<State>& checkpoints, const FlowSetup& f, const TestField& test);

}  // namespace bdns
