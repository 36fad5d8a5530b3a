#include "bdns/diagnostics.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <ostream>

#include "json.hpp"

#include "bdns/errors.hpp"

namespace bdns {

namespace {

double pow_gamma(double r, double gamma) { return r > 0.0 ? std::pow(r, gamma) : 0.0; }

// h' can blow up at rho = 0 for sub-linear terms; those cells carry no
// weight in any functional below, so they are dropped rather than poisoning
// the sums with inf * 0.
double safe_h_prime(const ViscosityLaw& law, double r) {
  const double v = eval_h_prime(law, r);
  return std::isfinite(v) ? v : 0.0;
}

struct Snapshot {
  DerivedFields d;
  VectorField grad_sqrt_rho;
  std::vector<VectorField> grad_u;  ///< grad_u[i][j] = d_i u_j
  ScalarField div_u;
  ScalarField rho;                  ///< clamped at 0
};

Snapshot snapshot(const State& s, const FlowSetup& f, bool with_velocity_gradient) {
  const auto& grid = f.grid;
  Snapshot out;
  out.d = derived(s, grid, f.eps_vac);
  out.rho = s.rho;
  for (double& r : out.rho) r = std::max(r, 0.0);
  out.grad_sqrt_rho = grad(out.d.sqrt_rho, grid);
  if (with_velocity_gradient) {
    out.grad_u.resize(grid.dim);
    for (int i = 0; i < grid.dim; ++i) {
      out.grad_u[i].resize(grid.dim);
      for (int j = 0; j < grid.dim; ++j) out.grad_u[i][j] = partial(out.d.u[j], grid, i);
    }
    out.div_u = make_scalar(grid);
    for (int i = 0; i < grid.dim; ++i)
      for (std::size_t c = 0; c < out.div_u.size(); ++c) out.div_u[c] += out.grad_u[i][i][c];
  }
  return out;
}

double sq_norm_at(const VectorField& v, std::size_t c) {
  double s = 0.0;
  for (const auto& comp : v) s += comp[c] * comp[c];
  return s;
}

double grad_u_sq_at(const Snapshot& sn, std::size_t c) {
  double s = 0.0;
  for (const auto& row : sn.grad_u)
    for (const auto& comp : row) s += comp[c] * comp[c];
  return s;
}

double potential(double r, double gamma) { return pow_gamma(r, gamma) / (gamma - 1.0); }

void check_gamma(double gamma) {
  if (!(gamma > 1.0)) throw ArgumentError("diagnostics: gamma must be > 1");
}

}  // namespace

void MomentParams::check(double nu) const {
  if (!(delta > 0.0 && delta < nu / 4.0)) throw ArgumentError("moment parameters: delta must lie in (0, nu/4)");
  if (!(alpha > 0.0 && alpha < delta / 2.0)) throw ArgumentError("moment parameters: alpha must lie in (0, delta/2)");
}

double energy(const State& s, const FlowSetup& f) {
  check_gamma(f.gamma);
  const auto d = derived(s, f.grid, f.eps_vac);
  ScalarField e(s.rho.size());
  for (std::size_t c = 0; c < e.size(); ++c) e[c] = 0.5 * sq_norm_at(d.sqrt_rho_u, c) + potential(s.rho[c], f.gamma);
  return integrate(e, f.grid);
}

double dissipation(const State& s, const FlowSetup& f) {
  const auto sn = snapshot(s, f, true);
  ScalarField e(s.rho.size());
  for (std::size_t c = 0; c < e.size(); ++c) {
    const double r = sn.rho[c];
    e[c] = eval_h(f.law, r) * grad_u_sq_at(sn, c) + eval_g(f.law, r) * sn.div_u[c] * sn.div_u[c];
  }
  return integrate(e, f.grid);
}

double bd_entropy(const State& s, const FlowSetup& f) {
  check_gamma(f.gamma);
  const auto sn = snapshot(s, f, false);
  ScalarField e(s.rho.size());
  for (std::size_t c = 0; c < e.size(); ++c) {
    const double hp2 = 2.0 * safe_h_prime(f.law, sn.rho[c]);
    double q = 0.0;
    for (int a = 0; a < f.grid.dim; ++a) {
      const double w = sn.d.sqrt_rho_u[a][c] + hp2 * sn.grad_sqrt_rho[a][c];
      q += w * w;
    }
    e[c] = 0.5 * q + potential(sn.rho[c], f.gamma);
  }
  return integrate(e, f.grid);
}

double bd_cross(const State& s, const FlowSetup& f) {
  check_gamma(f.gamma);
  const auto sn = snapshot(s, f, false);
  ScalarField e(s.rho.size());
  for (std::size_t c = 0; c < e.size(); ++c) {
    const double r = sn.rho[c];
    e[c] = r > 0.0 ? 4.0 * f.gamma * safe_h_prime(f.law, r) * std::pow(r, f.gamma - 1.0) *
                         sq_norm_at(sn.grad_sqrt_rho, c)
                   : 0.0;
  }
  return integrate(e, f.grid);
}

double moment_functional(const State& s, const FlowSetup& f, double delta) {
  if (!(delta > 0.0 && delta < 2.0)) throw ArgumentError("moment_functional: delta must lie in (0, 2)");
  const auto d = derived(s, f.grid, f.eps_vac);
  ScalarField e(s.rho.size());
  for (std::size_t c = 0; c < e.size(); ++c) {
    const double speed = std::sqrt(sq_norm_at(d.u, c));
    e[c] = sq_norm_at(d.sqrt_rho_u, c) * std::pow(speed, delta) / (2.0 + delta);
  }
  return integrate(e, f.grid);
}

double moment_rhs(const State& s, const FlowSetup& f, double delta) {
  if (!(delta > 0.0 && delta < 2.0)) throw ArgumentError("moment_rhs: delta must lie in (0, 2)");
  check_gamma(f.gamma);
  const auto d = derived(s, f.grid, f.eps_vac);
  ScalarField w(s.rho.size()), k(s.rho.size());
  const double q = 2.0 / (2.0 - delta);
  for (std::size_t c = 0; c < w.size(); ++c) {
    const double r = s.rho[c];
    const double h = r > 0.0 ? eval_h(f.law, r) : 0.0;
    w[c] = (r > 0.0 && h > 0.0) ? std::pow(std::pow(r, 2.0 * f.gamma - 0.5 * delta) / h, q) : 0.0;
    k[c] = sq_norm_at(d.sqrt_rho_u, c);
  }
  return std::pow(integrate(w, f.grid), 1.0 / q) * std::pow(integrate(k, f.grid), 0.5 * delta);
}

BoundRow apriori_bounds(const State& s, const FlowSetup& f) {
  check_gamma(f.gamma);
  const auto sn = snapshot(s, f, true);
  const auto& grid = f.grid;
  const std::size_t n = s.rho.size();
  ScalarField kin(n), hdu(n), hpg(n), pw(n), rdu(n), gsr(n), phalf(n);
  for (std::size_t c = 0; c < n; ++c) {
    const double r = sn.rho[c];
    const double hp = safe_h_prime(f.law, r);
    const double gs = sq_norm_at(sn.grad_sqrt_rho, c);
    kin[c] = sq_norm_at(sn.d.sqrt_rho_u, c);
    hdu[c] = std::max(eval_h(f.law, r), 0.0) * grad_u_sq_at(sn, c);
    hpg[c] = hp * hp * gs;
    pw[c] = r > 0.0 ? 4.0 * hp * std::pow(r, f.gamma - 1.0) * gs : 0.0;
    rdu[c] = r * grad_u_sq_at(sn, c);
    gsr[c] = gs;
    phalf[c] = pow_gamma(r, 0.5 * f.gamma);
  }
  const auto gp = grad(phalf, grid);
  ScalarField gp2(n);
  for (std::size_t c = 0; c < n; ++c) gp2[c] = sq_norm_at(gp, c);

  BoundRow b;
  b.sqrt_rho_u_l2 = std::sqrt(integrate(kin, grid));
  b.rho_l1 = lp_norm(sn.rho, grid, 1.0);
  b.rho_lgamma = lp_norm(sn.rho, grid, f.gamma);
  b.sqrt_h_grad_u_l2 = std::sqrt(integrate(hdu, grid));
  b.hprime_grad_sqrt_rho_l2 = std::sqrt(integrate(hpg, grid));
  b.pressure_gradient_weight_l2 = std::sqrt(integrate(pw, grid));
  b.sqrt_rho_grad_u_l2 = std::sqrt(integrate(rdu, grid));
  b.grad_sqrt_rho_l2 = std::sqrt(integrate(gsr, grid));
  b.grad_rho_half_gamma_l2 = std::sqrt(integrate(gp2, grid));
  return b;
}

CompactnessRow compactness_quantities(const State& s, const FlowSetup& f, const MomentParams& mp) {
  check_gamma(f.gamma);
  if (!(mp.alpha > 0.0)) throw ArgumentError("compactness_quantities: alpha must be > 0");
  const auto d = derived(s, f.grid, f.eps_vac);
  const std::size_t n = s.rho.size();
  ScalarField p53(n), mag(n), hs(n), psi(n);
  for (std::size_t c = 0; c < n; ++c) {
    const double r = std::max(s.rho[c], 0.0);
    p53[c] = pow_gamma(r, 5.0 * f.gamma / 3.0);
    mag[c] = std::sqrt(sq_norm_at(d.sqrt_rho_u, c));
    hs[c] = r > 0.0 ? eval_h(f.law, r) / std::sqrt(r) : 0.0;
    psi[c] = eval_psi(f.law, r);
  }
  CompactnessRow row;
  row.pressure_l53_power = integrate(p53, f.grid);
  row.sqrt_rho_u_l2p2a = lp_norm(mag, f.grid, 2.0 + 2.0 * mp.alpha);
  row.h_over_sqrt_rho_l6 = lp_norm(hs, f.grid, 6.0);
  row.psi_l6 = lp_norm(psi, f.grid, 6.0);
  return row;
}

LedgerRow ledger_row(const State& s, const FlowSetup& f, const MomentParams& mp) {
  LedgerRow row;
  row.t = s.t;
  row.energy = energy(s, f);
  row.dissipation = dissipation(s, f);
  row.bd_entropy = bd_entropy(s, f);
  row.bd_cross = bd_cross(s, f);
  row.moment = moment_functional(s, f, mp.delta);
  row.moment_rhs = moment_rhs(s, f, mp.delta);
  row.bounds = apriori_bounds(s, f);
  row.compactness = compactness_quantities(s, f, mp);
  return row;
}

std::vector<std::string> ledger_columns() {
  return {"t",
          "energy",
          "dissipation",
          "bd_entropy",
          "bd_cross",
          "moment",
          "moment_rhs",
          "sqrt_rho_u_l2",
          "rho_l1",
          "rho_lgamma",
          "sqrt_h_grad_u_l2",
          "hprime_grad_sqrt_rho_l2",
          "pressure_gradient_weight_l2",
          "sqrt_rho_grad_u_l2",
          "grad_sqrt_rho_l2",
          "grad_rho_half_gamma_l2",
          "pressure_l53_power",
          "sqrt_rho_u_l2p2a",
          "h_over_sqrt_rho_l6",
          "psi_l6",
          "cutoff_count",
          "clamp_count",
          "delta",
          "alpha"};
}

std::vector<double> ledger_values(const LedgerRow& r, const EntropyLedger& ledger) {
  const auto& b = r.bounds;
  const auto& c = r.compactness;
  return {r.t,
          r.energy,
          r.dissipation,
          r.bd_entropy,
          r.bd_cross,
          r.moment,
          r.moment_rhs,
          b.sqrt_rho_u_l2,
          b.rho_l1,
          b.rho_lgamma,
          b.sqrt_h_grad_u_l2,
          b.hprime_grad_sqrt_rho_l2,
          b.pressure_gradient_weight_l2,
          b.sqrt_rho_grad_u_l2,
          b.grad_sqrt_rho_l2,
          b.grad_rho_half_gamma_l2,
          c.pressure_l53_power,
          c.sqrt_rho_u_l2p2a,
          c.h_over_sqrt_rho_l6,
          c.psi_l6,
          static_cast<double>(r.cutoff_count),
          static_cast<double>(r.clamp_count),
          ledger.delta,
          ledger.alpha};
}

void write_ledger_csv(std::ostream& os, const EntropyLedger& ledger) {
  const auto cols = ledger_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
  os << '\n';
  const auto old = os.precision(17);
  for (const auto& row : ledger.rows) {
    const auto v = ledger_values(row, ledger);
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
    os << '\n';
  }
  os.precision(old);
}

void write_ledger_csv(const std::string& path, const EntropyLedger& ledger) {
  std::ofstream os(path);
  if (!os) throw ArgumentError("cannot open ledger file: " + path);
  write_ledger_csv(os, ledger);
}

void write_ledger_jsonl(std::ostream& os, const EntropyLedger& ledger) {
  const auto cols = ledger_columns();
  for (const auto& row : ledger.rows) {
    const auto v = ledger_values(row, ledger);
    nlohmann::ordered_json j;
    for (std::size_t i = 0; i < cols.size(); ++i) j[cols[i]] = v[i];
    os << j.dump() << '\n';
  }
}

void write_ledger_jsonl(const std::string& path, const EntropyLedger& ledger) {
  std::ofstream os(path);
  if (!os) throw ArgumentError("cannot open ledger file: " + path);
  write_ledger_jsonl(os, ledger);
}

TestField TestField::quadratic_decay(std::vector<Mode> modes, double horizon) {
  if (!(horizon > 0.0)) throw ArgumentError("test field horizon must be > 0");
  TestField t;
  t.modes = std::move(modes);
  t.theta = [horizon](double s) {
    const double r = 1.0 - s / horizon;
    return r * r;
  };
  t.theta_dot = [horizon](double s) { return -2.0 * (1.0 - s / horizon) / horizon; };
  return t;
}

namespace {

// Phi, its gradient and Hessian sampled on the grid, per component.
struct SampledTest {
  VectorField phi;
  std::vector<VectorField> d1;                   ///< d1[j][i] = d_i Phi_j
  std::vector<std::vector<VectorField>> d2;      ///< d2[j][i][k] = d_i d_k Phi_j
};

SampledTest sample_test(const TestField& test, const PeriodicGrid& grid) {
  const int dim = grid.dim;
  SampledTest st;
  st.phi = make_vector(grid);
  st.d1.assign(dim, make_vector(grid));
  st.d2.assign(dim, std::vector<VectorField>(dim, make_vector(grid)));
  for (const auto& m : test.modes) {
    if (m.component < 0 || m.component >= dim) throw ArgumentError("test field mode component out of range");
    double k[2] = {0.0, 0.0};
    for (int a = 0; a < dim; ++a) k[a] = 2.0 * std::numbers::pi * m.wave[a] / grid.lengths[a];
    const int j = m.component;
    for (std::size_t c = 0; c < grid.cell_count(); ++c) {
      double th = 0.0;
      for (int a = 0; a < dim; ++a) th += k[a] * grid.center(c, a);
      const double cs = std::cos(th), sn = std::sin(th);
      const double val = m.cos_coeff * cs + m.sin_coeff * sn;
      const double dval = -m.cos_coeff * sn + m.sin_coeff * cs;
      st.phi[j][c] += val;
      for (int i = 0; i < dim; ++i) {
        st.d1[j][i][c] += k[i] * dval;
        for (int l = 0; l < dim; ++l) st.d2[j][i][l][c] -= k[i] * k[l] * val;
      }
    }
  }
  return st;
}

// Spatial integrand of the weak balance at one time, without theta factors:
// returns (int m . Phi, int [convection + pressure - diffusion pairings]).
std::pair<double, double> weak_terms(const State& s, const FlowSetup& f, const SampledTest& st) {
  const auto& grid = f.grid;
  const int dim = grid.dim;
  const auto sn = snapshot(s, f, false);
  const std::size_t n = grid.cell_count();
  ScalarField a(n), b(n);
  for (std::size_t c = 0; c < n; ++c) {
    const double r = sn.rho[c];
    const double sr = sn.d.sqrt_rho[c];
    double mphi = 0.0;
    for (int j = 0; j < dim; ++j) mphi += s.mom[j][c] * st.phi[j][c];
    a[c] = mphi;

    const auto& w = sn.d.sqrt_rho_u;
    double conv = 0.0, divphi = 0.0;
    for (int j = 0; j < dim; ++j) {
      divphi += st.d1[j][j][c];
      for (int i = 0; i < dim; ++i) conv += w[i][c] * w[j][c] * st.d1[i][j][c];
    }
    const double press = pow_gamma(r, f.gamma) * divphi;

    const double h_over = r > 0.0 ? eval_h(f.law, r) / sr : 0.0;
    const double g_over = r > 0.0 ? eval_g(f.law, r) / sr : 0.0;
    const double hp = safe_h_prime(f.law, r);
    double gp = r > 0.0 ? eval_g_prime(f.law, r) : 0.0;
    if (!std::isfinite(gp)) gp = 0.0;

    // <h grad u, grad Phi>
    double hpair = 0.0;
    for (int j = 0; j < dim; ++j)
      for (int i = 0; i < dim; ++i)
        hpair -= h_over * w[j][c] * st.d2[j][i][i][c] + w[j][c] * 2.0 * hp * sn.grad_sqrt_rho[i][c] * st.d1[j][i][c];
    // <g div u, div Phi>
    double gpair = 0.0;
    for (int i = 0; i < dim; ++i) {
      double dij = 0.0;
      for (int j = 0; j < dim; ++j) dij += st.d2[j][i][j][c];
      gpair -= g_over * w[i][c] * dij + w[i][c] * 2.0 * gp * sn.grad_sqrt_rho[i][c] * divphi;
    }
    b[c] = conv + press - hpair - gpair;
  }
  return {integrate(a, grid), integrate(b, grid)};
}

}  // namespace

double weak_form_residual(const std::vector<State>& checkpoints, const FlowSetup& f, const TestField& test) {
  check_gamma(f.gamma);
  if (checkpoints.empty()) throw ArgumentError("weak_form_residual: empty trajectory");
  if (!test.theta || !test.theta_dot) throw ArgumentError("weak_form_residual: test field lacks a time profile");
  const double t_last = checkpoints.back().t;
  if (std::abs(test.theta(t_last)) > 1e-12)
    throw ArgumentError("weak_form_residual: test field does not vanish at the final time");
  if (test.modes.empty()) return 0.0;

  const auto st = sample_test(test, f.grid);
  std::vector<double> integrand(checkpoints.size());
  double initial = 0.0;
  for (std::size_t k = 0; k < checkpoints.size(); ++k) {
    const auto [mphi, rest] = weak_terms(checkpoints[k], f, st);
    const double t = checkpoints[k].t;
    integrand[k] = test.theta_dot(t) * mphi + test.theta(t) * rest;
    if (k == 0) initial = test.theta(t) * mphi;
  }
  double total = initial;
  for (std::size_t k = 1; k < checkpoints.size(); ++k) {
    const double dt = checkpoints[k].t - checkpoints[k - 1].t;
    if (!(dt > 0.0)) throw ArgumentError("weak_form_residual: checkpoint times must increase");
    total += 0.5 * dt * (integrand[k] + integrand[k - 1]);
  }
  return std::abs(total);
}

}  // namespace bdns
