#include "bdns/viscosity_law.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "bdns/errors.hpp"

namespace bdns {

namespace {

void require_nonnegative(double rho, const char* what) {
  if (!(rho >= 0.0)) {
    std::ostringstream os;
    os << what << ": density must be >= 0, got " << rho;
    throw DomainError(os.str());
  }
}

void require_positive(double rho, const char* what) {
  if (!(rho > 0.0)) {
    std::ostringstream os;
    os << what << ": density must be > 0, got " << rho;
    throw DomainError(os.str());
  }
}

constexpr double kMarginTol = 1e-12;

}  // namespace

ViscosityLaw ViscosityLaw::power_sum(std::vector<PowerTerm> terms) {
  if (terms.empty()) throw ArgumentError("viscosity law needs at least one power term");
  for (const auto& t : terms) {
    if (!(t.coeff >= 0.0) || !std::isfinite(t.coeff))
      throw ArgumentError("viscosity law coefficients must be finite and >= 0");
    if (!(t.exponent > 0.0) || !std::isfinite(t.exponent))
      throw ArgumentError("viscosity law exponents must be finite and > 0");
  }
  ViscosityLaw law;
  law.terms_ = std::move(terms);
  return law;
}

ViscosityLaw ViscosityLaw::constant(double mu) {
  if (!std::isfinite(mu)) throw ArgumentError("constant viscosity must be finite");
  ViscosityLaw law;
  law.constant_ = mu;
  return law;
}

double ViscosityLaw::leading_exponent() const {
  double b = 0.0;
  for (const auto& t : terms_)
    if (t.coeff > 0.0) b = std::max(b, t.exponent);
  return b;
}

double ViscosityLaw::trailing_exponent() const {
  double b = std::numeric_limits<double>::infinity();
  for (const auto& t : terms_)
    if (t.coeff > 0.0) b = std::min(b, t.exponent);
  return std::isfinite(b) ? b : 0.0;
}

std::string ViscosityLaw::describe() const {
  std::ostringstream os;
  if (constant_) {
    os << "h=" << *constant_;
    return os.str();
  }
  os << "h=";
  for (std::size_t k = 0; k < terms_.size(); ++k) {
    if (k) os << "+";
    os << terms_[k].coeff << "*rho^" << terms_[k].exponent;
  }
  return os.str();
}

double eval_h(const ViscosityLaw& law, double rho) {
  require_nonnegative(rho, "eval_h");
  if (law.is_constant()) return law.constant_value();
  double h = 0.0;
  for (const auto& t : law.terms()) h += t.coeff * std::pow(rho, t.exponent);
  return h;
}

double eval_h_prime(const ViscosityLaw& law, double rho) {
  require_nonnegative(rho, "eval_h_prime");
  if (law.is_constant()) return 0.0;
  double hp = 0.0;
  for (const auto& t : law.terms()) {
    if (t.exponent == 1.0)
      hp += t.coeff;
    else
      hp += t.coeff * t.exponent * std::pow(rho, t.exponent - 1.0);
  }
  return hp;
}

double eval_h_second(const ViscosityLaw& law, double rho) {
  require_nonnegative(rho, "eval_h_second");
  if (law.is_constant()) return 0.0;
  double h2 = 0.0;
  for (const auto& t : law.terms()) {
    if (t.exponent == 1.0) continue;
    if (t.exponent == 2.0)
      h2 += 2.0 * t.coeff;
    else
      h2 += t.coeff * t.exponent * (t.exponent - 1.0) * std::pow(rho, t.exponent - 2.0);
  }
  return h2;
}

double eval_g(const ViscosityLaw& law, double rho) {
  require_nonnegative(rho, "eval_g");
  if (rho == 0.0) return -eval_h(law, 0.0);
  return rho * eval_h_prime(law, rho) - eval_h(law, rho);
}

double eval_g_prime(const ViscosityLaw& law, double rho) {
  require_nonnegative(rho, "eval_g_prime");
  if (rho == 0.0) return 0.0;
  return rho * eval_h_second(law, rho);
}

double eval_phi(const ViscosityLaw& law, double rho, double rho_ref) {
  require_positive(rho, "eval_phi");
  require_positive(rho_ref, "eval_phi (reference)");
  if (law.is_constant()) return 0.0;
  // Every power term integrates in closed form: a b s^{b-2} -> a b/(b-1) s^{b-1} or a ln s.
  double phi = 0.0;
  for (const auto& t : law.terms()) {
    if (t.exponent == 1.0)
      phi += t.coeff * std::log(rho / rho_ref);
    else
      phi += t.coeff * t.exponent / (t.exponent - 1.0) *
             (std::pow(rho, t.exponent - 1.0) - std::pow(rho_ref, t.exponent - 1.0));
  }
  return phi;
}

double eval_phi_prime(const ViscosityLaw& law, double rho) {
  require_positive(rho, "eval_phi_prime");
  return eval_h_prime(law, rho) / rho;
}

double eval_psi(const ViscosityLaw& law, double rho) {
  require_nonnegative(rho, "eval_psi");
  if (law.is_constant()) return 0.0;
  double psi = 0.0;
  for (const auto& t : law.terms()) {
    if (t.coeff == 0.0) continue;
    if (t.exponent <= 0.5) {
      std::ostringstream os;
      os << "psi diverges at vacuum for exponent " << t.exponent << " (needs > 1/2)";
      throw LawError(os.str());
    }
    if (rho == 0.0) continue;
    psi += t.coeff * t.exponent / (t.exponent - 0.5) * std::pow(rho, t.exponent - 0.5);
  }
  return psi;
}

// ---------------------------------------------------------------------------

void AdmissibilityParams::check() const {
  if (!(nu > 0.0 && nu < 1.0)) throw ArgumentError("nu must lie in (0, 1)");
  if (!(gamma > 1.0)) throw ArgumentError("gamma must be > 1");
  if (dim < 1 || dim > 3) throw ArgumentError("N must be 1, 2 or 3");
  if (!(eps_growth > 0.0)) throw ArgumentError("eps_growth must be > 0");
}

std::string condition_label(Condition c) {
  switch (c) {
    case Condition::derivative_floor: return "(8)";
    case Condition::derivative_ratio: return "(9)";
    case Condition::envelope: return "(10)";
    case Condition::growth: return "(12)";
  }
  return "?";
}

const ConditionRecord& ValidationReport::record(Condition c) const {
  for (const auto& r : records)
    if (r.condition == c) return r;
  throw ArgumentError("validation report has no record for " + condition_label(c));
}

std::vector<double> log_spaced_densities(double lo, double hi, int count) {
  if (!(lo > 0.0) || !(hi > lo) || count < 2) throw ArgumentError("bad density sample range");
  std::vector<double> out(count);
  const double a = std::log10(lo);
  const double b = std::log10(hi);
  for (int i = 0; i < count; ++i) out[i] = std::pow(10.0, a + (b - a) * i / (count - 1));
  out.front() = lo;
  out.back() = hi;
  return out;
}

namespace {

struct Worst {
  double margin = std::numeric_limits<double>::infinity();
  double rho = 0.0;
  void offer(double m, double r) {
    if (m < margin) {
      margin = m;
      rho = r;
    }
  }
};

ConditionRecord finish(Condition c, const Worst& w, double tol) {
  ConditionRecord rec;
  rec.condition = c;
  rec.margin = w.margin;
  rec.worst_rho = w.rho;
  rec.pass = w.margin >= -tol;
  return rec;
}

}  // namespace

ValidationReport validate(const ViscosityLaw& law, const AdmissibilityParams& params,
                          const std::vector<double>& rho_samples) {
  if (rho_samples.empty()) throw ArgumentError("validate: empty density sample grid");
  params.check();
  const double nu = params.nu;
  const double n_dim = params.dim;

  Worst floor_w, ratio_w, env_w;
  const double h0 = eval_h(law, 0.0);
  if (h0 < 0.0) floor_w.offer(h0, 0.0);

  bool g_bounded = true;
  const double c_nu = (1.0 / nu - 1.0) / n_dim;

  for (double rho : rho_samples) {
    if (!(rho > 0.0)) throw ArgumentError("validate: sample densities must be > 0");
    const double h = eval_h(law, rho);
    const double hp = eval_h_prime(law, rho);
    const double g = eval_g(law, rho);
    const double gp = eval_g_prime(law, rho);

    floor_w.offer(hp - nu, rho);

    const double cap = hp / nu;
    const double denom = cap + std::abs(gp);
    ratio_w.offer(denom > 0.0 ? (cap - std::abs(gp)) / denom : 0.0, rho);

    const double s = h + n_dim * g;
    const double lower = s - nu * h;
    const double upper = h / nu - s;
    const double scale = std::abs(h) > 0.0 ? std::abs(h) : 1.0;
    env_w.offer(std::min(lower, upper) / scale, rho);

    if (std::abs(g) > c_nu * std::abs(h) * (1.0 + 1e-12) + 1e-300) g_bounded = false;
  }

  ValidationReport rep;
  rep.records.push_back(finish(Condition::derivative_floor, floor_w, kMarginTol * nu));
  rep.records.push_back(finish(Condition::derivative_ratio, ratio_w, kMarginTol));
  rep.records.push_back(finish(Condition::envelope, env_w, kMarginTol));

  // Growth at infinity: least-squares slope of log h over the top sample decade,
  // backed by an exact exponent comparison for power laws.
  ConditionRecord growth;
  growth.condition = Condition::growth;
  growth.applicable = params.gamma >= 3.0 && params.dim == 3;
  {
    const double top = *std::max_element(rho_samples.begin(), rho_samples.end());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (double rho : rho_samples) {
      if (rho < top / 10.0) continue;
      const double h = eval_h(law, rho);
      if (!(h > 0.0)) continue;
      const double x = std::log(rho), y = std::log(h);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
      ++n;
    }
    const double det = n * sxx - sx * sx;
    rep.growth_slope = (n >= 2 && det > 0.0) ? (n * sxy - sx * sy) / det : 0.0;
    const double target = params.gamma / 3.0 + params.eps_growth;
    const bool slope_ok = rep.growth_slope >= target - 1e-3;
    const bool exact_ok = !law.is_constant() && law.leading_exponent() >= target;
    growth.margin = std::max(rep.growth_slope, law.is_constant() ? 0.0 : law.leading_exponent()) - target;
    growth.worst_rho = top;
    growth.pass = slope_ok || exact_ok;
  }
  rep.records.push_back(growth);

  rep.overall = true;
  for (const auto& r : rep.records)
    if (r.applicable && !r.pass) rep.overall = false;

  const bool envelope_ok = rep.record(Condition::envelope).pass;
  rep.g_bounded_by_h = g_bounded;
  if (envelope_ok && !g_bounded)
    rep.notes.push_back("internal inconsistency: envelope holds but |g| <= C_nu h does not");
  if (!rep.record(Condition::derivative_floor).pass && rep.record(Condition::derivative_ratio).pass &&
      envelope_ok)
    rep.notes.push_back(
        "h' >= nu fails while the envelope holds: the relaxed small-derivative regime is unsupported");
  if (law.is_constant() && !envelope_ok)
    rep.notes.push_back("constant viscosity forces g = -h, so h + N g = (1 - N) h degenerates");
  return rep;
}

std::optional<double> largest_feasible_nu(const ViscosityLaw& law, AdmissibilityParams params,
                                          const std::vector<double>& rho_samples) {
  auto feasible = [&](double nu) {
    params.nu = nu;
    return validate(law, params, rho_samples).overall;
  };
  double lo = 1e-12;
  if (!feasible(lo)) return std::nullopt;
  double hi = 1.0 - 1e-12;
  if (feasible(hi)) return hi;
  for (int it = 0; it < 100 && hi - lo > 1e-14; ++it) {
    const double mid = 0.5 * (lo + hi);
    (feasible(mid) ? lo : hi) = mid;
  }
  return lo;
}

Envelope growth_envelope(const ViscosityLaw& law, const AdmissibilityParams& params, double rho) {
  if (!(rho > 0.0)) throw DomainError("growth_envelope: density must be > 0");
  const double n = params.dim;
  const double c = eval_h(law, 1.0);
  const double slow = (n - 1.0) / n + params.nu / n;
  const double fast = (n - 1.0) / n + 1.0 / (n * params.nu);
  if (rho >= 1.0) return {c * std::pow(rho, slow), c * std::pow(rho, fast)};
  return {c * std::pow(rho, fast), c * std::pow(rho, slow)};
}

}  // namespace bdns
