/// Density-dependent viscosity pairs (h, g) with g = rho h' - h.
///
/// A law is a finite positive combination of power terms
///     h(rho) = sum_k a_k rho^{b_k},
/// or a constant h(rho) = mu kept only as a negative example. The second
/// coefficient g is never stored; it is always derived from h.
#pragma once

#include <optional>
#include <string>
#include <vector>

namespace bdns {

struct PowerTerm {
  double coeff;     ///< a_k >= 0
  double exponent;  ///< b_k > 0
};

class ViscosityLaw {
 public:
  /// h = sum a_k rho^{b_k}. Throws ArgumentError on a_k < 0, b_k <= 0 or no terms.
  static ViscosityLaw power_sum(std::vector<PowerTerm> terms);
  /// h = mu for every density.
  static ViscosityLaw constant(double mu);

  /// Shorthands used throughout the tests and presets.
  static ViscosityLaw linear() { return power_sum({{1.0, 1.0}}); }

  bool is_constant() const { return constant_.has_value(); }
  double constant_value() const { return constant_.value_or(0.0); }
  const std::vector<PowerTerm>& terms() const { return terms_; }

  /// Largest exponent carrying a positive coefficient (0 for the constant law).
  double leading_exponent() const;
  /// Smallest exponent carrying a positive coefficient (0 for the constant law).
  double trailing_exponent() const;

  std::string describe() const;

 private:
  ViscosityLaw() = default;
  std::vector<PowerTerm> terms_;
  std::optional<double> constant_;
};

// Pointwise evaluation. All of them throw DomainError for rho < 0.
double eval_h(const ViscosityLaw& law, double rho);
double eval_h_prime(const ViscosityLaw& law, double rho);
double eval_h_second(const ViscosityLaw& law, double rho);
/// rho * h'(rho) - h(rho), computed through eval_h_prime and eval_h.
double eval_g(const ViscosityLaw& law, double rho);
/// g'(rho) = rho h''(rho).
double eval_g_prime(const ViscosityLaw& law, double rho);

/// phi(rho) = int_{rho_ref}^{rho} h'(s)/s ds. Requires rho, rho_ref > 0.
double eval_phi(const ViscosityLaw& law, double rho, double rho_ref = 1.0);
/// phi'(rho) = h'(rho)/rho. Requires rho > 0.
double eval_phi_prime(const ViscosityLaw& law, double rho);
/// psi(rho) = int_0^rho h'(s)/sqrt(s) ds, psi(0) = 0.
/// Throws LawError when an exponent makes the integral diverge at 0.
double eval_psi(const ViscosityLaw& law, double rho);

// ---------------------------------------------------------------------------
// Admissibility

struct AdmissibilityParams {
  double nu = 0.5;          ///< in (0, 1)
  double gamma = 2.0;       ///< > 1
  int dim = 2;              ///< N in {1, 2, 3}
  double eps_growth = 0.1;  ///< > 0, used only when gamma >= 3 and N = 3

  /// Throws ArgumentError when a field is out of range.
  void check() const;
};

enum class Condition {
  derivative_floor,  ///< h' >= nu and h(0) >= 0
  derivative_ratio,  ///< |g'| <= h'/nu
  envelope,          ///< nu h <= h + N g <= h/nu
  growth,            ///< liminf h / rho^{gamma/3 + eps} > 0 (N = 3, gamma >= 3)
};

/// Wire label of a condition ("(8)", "(9)", "(10)", "(12)").
std::string condition_label(Condition c);

struct ConditionRecord {
  Condition condition;
  bool applicable = true;
  bool pass = true;
  double worst_rho = 0.0;  ///< sample density with the smallest margin
  double margin = 0.0;     ///< smallest margin; negative means violated
};

struct ValidationReport {
  std::vector<ConditionRecord> records;
  bool overall = true;
  /// |g| <= C_nu h with C_nu = (1/nu - 1)/N, implied by the envelope condition.
  bool g_bounded_by_h = true;
  /// Fitted slope of log h against log rho over the top sample decade.
  double growth_slope = 0.0;
  std::vector<std::string> notes;

  const ConditionRecord& record(Condition c) const;
};

/// The default sample grid: 601 log-spaced densities on [1e-6, 1e6].
std::vector<double> log_spaced_densities(double lo = 1e-6, double hi = 1e6, int count = 601);

/// Check the derivative floor, upper bound and envelope conditions (plus the
/// growth condition when it applies) on the sample grid.
/// Throws ArgumentError on an empty sample grid.
ValidationReport validate(const ViscosityLaw& law, const AdmissibilityParams& params,
                          const std::vector<double>& rho_samples);

/// Largest nu in (0, 1) for which validate() passes on the sample grid,
/// found by bisection. Empty when no nu >= 1e-12 works.
std::optional<double> largest_feasible_nu(const ViscosityLaw& law, AdmissibilityParams params,
                                          const std::vector<double>& rho_samples);

struct Envelope {
  double lower;
  double upper;
};

/// Power-law envelope of h calibrated so that it is tight at rho = 1.
/// Throws DomainError for rho <= 0.
Envelope growth_envelope(const ViscosityLaw& law, const AdmissibilityParams& params, double rho);

}  // namespace bdns
