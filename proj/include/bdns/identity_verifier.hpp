/// Spectral certification of the entropy and moment identities on smooth fields.
///
/// Time derivatives never come from time stepping: d/dt of a functional is
/// evaluated by the chain rule with rho_t and (rho u)_t replaced by the PDE
/// right-hand sides, all spatial derivatives spectral. A residual that does
/// not decay spectrally therefore points at the algebra, not at a scheme.
#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "bdns/grid.hpp"
#include "bdns/viscosity_law.hpp"
#include "json.hpp"

namespace bdns {

struct FourierMode {
  std::array<int, 2> wave;
  double cos_coeff;
  double sin_coeff;
};

struct FourierSeries {
  double mean = 0.0;
  std::vector<FourierMode> modes;

  ScalarField sample(const PeriodicGrid& grid) const;
  /// Largest |wave number| along any axis.
  int band() const;
};

/// Band-limited density/velocity pair on the unit torus.
struct ManufacturedField {
  std::string name;
  int dim = 1;
  FourierSeries rho;
  std::array<FourierSeries, 2> u;
  double rho_min = 0.0;  ///< guaranteed lower bound of rho

  /// rho = 1 + sin(2 pi x)/2, u = cos(2 pi x).
  static ManufacturedField bump_1d();
  /// Three-mode density, velocity bounded away from zero.
  static ManufacturedField generic_1d();
  /// Oblique-mode density and velocity, |u| bounded away from zero.
  static ManufacturedField generic_2d();
  /// u = (-sin 2 pi y, sin 2 pi x) over a non-constant density.
  static ManufacturedField rotational_2d();
  /// u = grad chi, so the velocity gradient is symmetric.
  static ManufacturedField gradient_flow_2d();
  /// Non-constant density at rest.
  static ManufacturedField at_rest(int dim);
  static ManufacturedField constant(int dim, double rho, std::array<double, 2> u);
  /// Lookup by name; throws ArgumentError on an unknown name.
  static ManufacturedField by_name(const std::string& name);
  static std::vector<std::string> names();

  PeriodicGrid grid(int n) const;
  /// Throws ArgumentError if rho_min <= 0 or the band limit exceeds n/8.
  void check(int n) const;
};

/// A viscosity pair, optionally with g replaced by a constant (breaking g = rho h' - h).
struct ViscosityPair {
  ViscosityLaw law;
  std::optional<double> g_constant;

  explicit ViscosityPair(ViscosityLaw l, std::optional<double> g = std::nullopt) : law(std::move(l)), g_constant(g) {}
  double h(double rho) const { return eval_h(law, rho); }
  double h_prime(double rho) const { return eval_h_prime(law, rho); }
  double g(double rho) const { return g_constant ? *g_constant : eval_g(law, rho); }
  std::string describe() const;
};

enum class CheckKind { equality, inequality };

/// One residual (equality) or slack (inequality) evaluated on every grid,
/// normalised by the magnitude of the largest term involved.
struct CheckSeries {
  std::string name;
  CheckKind kind = CheckKind::equality;
  std::vector<double> values;
  double order = 0.0;          ///< fitted decay order (equality only)
  bool spectral_decay = true;  ///< each refinement gains 1e-2 or sits at the floor
  bool pass = true;
};

struct IdentityReport {
  std::string identity;
  std::string field;
  std::vector<int> grids;
  std::vector<CheckSeries> checks;
  bool verdict = true;

  /// Throws ArgumentError for an unknown check name.
  const CheckSeries& check(const std::string& name) const;
};

struct VerifierTolerances {
  double tol_abs = 1e-8;      ///< normalised residual / slack tolerance
  double order_min = 4.0;     ///< alternative pass rule for equalities
  double decay_factor = 1e-2; ///< required gain per grid doubling
  double floor = 1e-10;       ///< roundoff plateau; spectral second derivatives amplify eps by ~N^2
};

IdentityReport verify_energy_step(const ManufacturedField& field, const ViscosityPair& pair, double gamma,
                                  const std::vector<int>& grids, const VerifierTolerances& tol = {});
IdentityReport verify_step2(const ManufacturedField& field, const ViscosityPair& pair, const std::vector<int>& grids,
                            const VerifierTolerances& tol = {});
IdentityReport verify_step3_cross(const ManufacturedField& field, const ViscosityPair& pair, double gamma,
                                  const std::vector<int>& grids, const VerifierTolerances& tol = {});
IdentityReport verify_bd_combination(const ManufacturedField& field, const ViscosityPair& pair, double gamma,
                                     const std::vector<int>& grids, const VerifierTolerances& tol = {});
/// nu enters the absorption link and the end-to-end inequality.
IdentityReport verify_moment_derivation(const ManufacturedField& field, const ViscosityPair& pair, double gamma,
                                        double delta, double nu, const std::vector<int>& grids,
                                        const VerifierTolerances& tol = {});

/// Relative gap between the moment identity at small delta (with its pressure
/// term moved to the left) and the energy identity, on an n-cell grid.
double moment_energy_gap(const ManufacturedField& field, const ViscosityPair& pair, double gamma, double delta, int n);

nlohmann::ordered_json to_json(const IdentityReport& report);

}  // namespace bdns
