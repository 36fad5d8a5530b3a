#include "bdns/identity_verifier.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <sstream>

#include "bdns/errors.hpp"
#include "bdns/spectral.hpp"

namespace bdns {

// ---------------------------------------------------------------------------
// Manufactured fields

ScalarField FourierSeries::sample(const PeriodicGrid& grid) const {
  ScalarField f = make_scalar(grid, mean);
  for (const auto& m : modes) {
    for (std::size_t c = 0; c < f.size(); ++c) {
      double th = 0.0;
      for (int a = 0; a < grid.dim; ++a) th += 2.0 * std::numbers::pi * m.wave[a] * grid.center(c, a) / grid.lengths[a];
      f[c] += m.cos_coeff * std::cos(th) + m.sin_coeff * std::sin(th);
    }
  }
  return f;
}

int FourierSeries::band() const {
  int b = 0;
  for (const auto& m : modes) b = std::max({b, std::abs(m.wave[0]), std::abs(m.wave[1])});
  return b;
}

ManufacturedField ManufacturedField::bump_1d() {
  ManufacturedField f;
  f.name = "bump_1d";
  f.dim = 1;
  f.rho = {1.0, {{{1, 0}, 0.0, 0.5}}};
  f.u[0] = {0.0, {{{1, 0}, 1.0, 0.0}}};
  f.rho_min = 0.5;
  return f;
}

ManufacturedField ManufacturedField::generic_1d() {
  ManufacturedField f;
  f.name = "generic_1d";
  f.dim = 1;
  f.rho = {1.0, {{{1, 0}, 0.0, 0.3}, {{2, 0}, 0.1, 0.0}}};
  f.u[0] = {1.2, {{{1, 0}, 0.4, 0.0}, {{3, 0}, 0.0, 0.2}}};
  f.rho_min = 0.6;
  return f;
}

namespace {

FourierSeries oblique_density() {
  return {1.0, {{{1, 1}, 0.0, 0.2}, {{1, -1}, 0.15, 0.0}, {{2, 0}, 0.0, 0.1}}};
}

}  // namespace

ManufacturedField ManufacturedField::generic_2d() {
  ManufacturedField f;
  f.name = "generic_2d";
  f.dim = 2;
  f.rho = oblique_density();
  f.u[0] = {0.9, {{{0, 1}, 0.3, 0.0}, {{1, 1}, 0.0, 0.2}}};
  f.u[1] = {-0.7, {{{1, 0}, 0.0, 0.25}, {{1, -2}, 0.15, 0.0}}};
  f.rho_min = 0.55;
  return f;
}

ManufacturedField ManufacturedField::rotational_2d() {
  ManufacturedField f;
  f.name = "rotational_2d";
  f.dim = 2;
  f.rho = {1.0, {{{1, 1}, 0.25, 0.0}, {{0, 1}, 0.0, 0.1}}};
  f.u[0] = {0.0, {{{0, 1}, 0.0, -1.0}}};
  f.u[1] = {0.0, {{{1, 0}, 0.0, 1.0}}};
  f.rho_min = 0.65;
  return f;
}

ManufacturedField ManufacturedField::gradient_flow_2d() {
  ManufacturedField f;
  f.name = "gradient_flow_2d";
  f.dim = 2;
  f.rho = oblique_density();
  f.u[0] = {0.0, {{{1, 1}, 0.5, 0.0}, {{1, -1}, 0.5, 0.0}}};
  f.u[1] = {0.0, {{{1, 1}, 0.5, 0.0}, {{1, -1}, -0.5, 0.0}}};
  f.rho_min = 0.55;
  return f;
}

ManufacturedField ManufacturedField::at_rest(int dim) {
  ManufacturedField f = dim == 1 ? generic_1d() : generic_2d();
  f.name = dim == 1 ? "at_rest_1d" : "at_rest_2d";
  f.u = {};
  return f;
}

ManufacturedField ManufacturedField::constant(int dim, double rho, std::array<double, 2> u) {
  if (dim != 1 && dim != 2) throw ArgumentError("manufactured field dimension must be 1 or 2");
  ManufacturedField f;
  f.name = dim == 1 ? "constant_1d" : "constant_2d";
  f.dim = dim;
  f.rho.mean = rho;
  f.u[0].mean = u[0];
  f.u[1].mean = dim == 2 ? u[1] : 0.0;
  f.rho_min = rho;
  return f;
}

std::vector<std::string> ManufacturedField::names() {
  return {"bump_1d",       "generic_1d",       "generic_2d",  "rotational_2d",
          "gradient_flow_2d", "at_rest_1d", "at_rest_2d", "constant_1d", "constant_2d"};
}

ManufacturedField ManufacturedField::by_name(const std::string& name) {
  if (name == "bump_1d") return bump_1d();
  if (name == "generic_1d") return generic_1d();
  if (name == "generic_2d") return generic_2d();
  if (name == "rotational_2d") return rotational_2d();
  if (name == "gradient_flow_2d") return gradient_flow_2d();
  if (name == "at_rest_1d") return at_rest(1);
  if (name == "at_rest_2d") return at_rest(2);
  if (name == "constant_1d") return constant(1, 1.0, {0.5, 0.0});
  if (name == "constant_2d") return constant(2, 1.0, {0.5, -0.25});
  throw ArgumentError("unknown manufactured field: " + name);
}

PeriodicGrid ManufacturedField::grid(int n) const {
  return dim == 1 ? PeriodicGrid::line(n) : PeriodicGrid::square(n, n);
}

void ManufacturedField::check(int n) const {
  if (!(rho_min > 0.0)) throw ArgumentError("manufactured field " + name + " is not strictly positive");
  int band = rho.band();
  for (int a = 0; a < dim; ++a) band = std::max(band, u[a].band());
  if (8 * band > n) throw ArgumentError("manufactured field " + name + " exceeds a quarter of the Nyquist band");
}

std::string ViscosityPair::describe() const {
  std::string s = law.describe();
  if (g_constant) {
    std::ostringstream os;
    os << s << " with g = " << *g_constant;
    s = os.str();
  }
  return s;
}

const CheckSeries& IdentityReport::check(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return c;
  throw ArgumentError("identity report " + identity + " has no check named " + name);
}

// ---------------------------------------------------------------------------
// Field evaluation with PDE-substituted time derivatives

namespace {

using Field = ScalarField;

Field map_field(const Field& a, const std::function<double(double)>& f) {
  Field out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i]);
  return out;
}

struct Eval {
  PeriodicGrid grid;
  int dim;
  std::size_t n;
  double gamma;
  Field rho, h, hp, g, phi_p, p, div_u, lap_phi, rho_t;
  VectorField u, m, grad_rho, grad_phi, grad_h, m_t, u_t;
  std::vector<VectorField> du;  ///< du[i][j] = d_i u_j

  double integral(const Field& f) const { return integrate(f, grid); }
  template <typename Fn>
  double integral_of(Fn&& fn) const {
    Field f(n);
    for (std::size_t c = 0; c < n; ++c) f[c] = fn(c);
    return integrate(f, grid);
  }
  double grad_u_sq(std::size_t c) const {
    double s = 0.0;
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) s += du[i][j][c] * du[i][j][c];
    return s;
  }
  double transpose_contraction(std::size_t c) const {
    double s = 0.0;
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) s += du[i][j][c] * du[j][i][c];
    return s;
  }
  double speed(std::size_t c) const {
    double s = 0.0;
    for (int a = 0; a < dim; ++a) s += u[a][c] * u[a][c];
    return std::sqrt(s);
  }
  // Magnitude used to normalise residuals when every term is tiny.
  double field_scale() const {
    return integral_of([&](std::size_t c) {
      double k = 0.0;
      for (int a = 0; a < dim; ++a) k += u[a][c] * u[a][c];
      return rho[c] * (1.0 + 0.5 * k) + p[c] / (gamma - 1.0);
    });
  }
};

Eval evaluate(const ManufacturedField& field, const ViscosityPair& pair, double gamma, int ncells) {
  if (!(gamma > 1.0)) throw ArgumentError("verifier: gamma must be > 1");
  field.check(ncells);
  Eval e;
  e.grid = field.grid(ncells);
  e.dim = field.dim;
  e.n = e.grid.cell_count();
  e.gamma = gamma;
  const auto& grid = e.grid;
  const int dim = e.dim;

  e.rho = field.rho.sample(grid);
  for (double r : e.rho)
    if (!(r > 0.0)) throw ArgumentError("manufactured density is not positive on the grid");
  e.u.resize(dim);
  e.m.resize(dim);
  for (int a = 0; a < dim; ++a) {
    e.u[a] = field.u[a].sample(grid);
    e.m[a] = Field(e.n);
    for (std::size_t c = 0; c < e.n; ++c) e.m[a][c] = e.rho[c] * e.u[a][c];
  }
  e.h = map_field(e.rho, [&](double r) { return pair.h(r); });
  e.hp = map_field(e.rho, [&](double r) { return pair.h_prime(r); });
  e.g = map_field(e.rho, [&](double r) { return pair.g(r); });
  e.phi_p = Field(e.n);
  for (std::size_t c = 0; c < e.n; ++c) e.phi_p[c] = e.hp[c] / e.rho[c];
  e.p = map_field(e.rho, [gamma](double r) { return std::pow(r, gamma); });

  e.grad_rho = spectral_grad(e.rho, grid);
  e.grad_h = spectral_grad(e.h, grid);
  e.grad_phi = e.grad_rho;
  for (int a = 0; a < dim; ++a)
    for (std::size_t c = 0; c < e.n; ++c) e.grad_phi[a][c] *= e.phi_p[c];
  e.lap_phi = spectral_div(e.grad_phi, grid);

  e.du.resize(dim);
  for (int i = 0; i < dim; ++i) {
    e.du[i].resize(dim);
    for (int j = 0; j < dim; ++j) e.du[i][j] = spectral_partial(e.u[j], grid, i);
  }
  e.div_u = make_scalar(grid);
  for (int i = 0; i < dim; ++i)
    for (std::size_t c = 0; c < e.n; ++c) e.div_u[c] += e.du[i][i][c];

  // rho_t = -div(rho u)
  e.rho_t = spectral_div(e.m, grid);
  for (double& v : e.rho_t) v = -v;

  // m_t = -div(rho u (x) u) - grad p + div(h grad u) + grad(g div u)
  const auto grad_p = spectral_grad(e.p, grid);
  Field gdiv(e.n);
  for (std::size_t c = 0; c < e.n; ++c) gdiv[c] = e.g[c] * e.div_u[c];
  const auto grad_gdiv = spectral_grad(gdiv, grid);
  e.m_t.assign(dim, Field(e.n, 0.0));
  e.u_t.assign(dim, Field(e.n, 0.0));
  for (int j = 0; j < dim; ++j) {
    VectorField conv(dim, Field(e.n)), visc(dim, Field(e.n));
    for (int i = 0; i < dim; ++i)
      for (std::size_t c = 0; c < e.n; ++c) {
        conv[i][c] = e.m[j][c] * e.u[i][c];
        visc[i][c] = e.h[c] * e.du[i][j][c];
      }
    const Field dconv = spectral_div(conv, grid);
    const Field dvisc = spectral_div(visc, grid);
    for (std::size_t c = 0; c < e.n; ++c) {
      e.m_t[j][c] = -dconv[c] - grad_p[j][c] + dvisc[c] + grad_gdiv[j][c];
      e.u_t[j][c] = (e.m_t[j][c] - e.u[j][c] * e.rho_t[c]) / e.rho[c];
    }
  }
  return e;
}

// d/dt grad phi(rho) = grad(phi'(rho) rho_t)
VectorField grad_phi_t(const Eval& e) {
  Field f(e.n);
  for (std::size_t c = 0; c < e.n; ++c) f[c] = e.phi_p[c] * e.rho_t[c];
  return spectral_grad(f, e.grid);
}

double max_abs(std::initializer_list<double> xs) {
  double m = 0.0;
  for (double x : xs) m = std::max(m, std::abs(x));
  return m;
}

// Residual of lhs = sum(rhs), normalised by the largest single term.
double normalised_gap(const Eval& e, double lhs, std::initializer_list<double> rhs) {
  double sum = 0.0, scale = std::abs(lhs);
  for (double r : rhs) {
    sum += r;
    scale = std::max(scale, std::abs(r));
  }
  scale = std::max(scale, 1e-3 * e.field_scale());
  return std::abs(lhs - sum) / scale;
}

double normalised_slack(const Eval& e, double slack, double scale) {
  return slack / std::max(std::abs(scale), 1e-3 * e.field_scale());
}

double fitted_order(const std::vector<int>& grids, const std::vector<double>& values) {
  if (grids.size() < 2) return 0.0;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double k = static_cast<double>(grids.size());
  for (std::size_t i = 0; i < grids.size(); ++i) {
    const double x = std::log2(static_cast<double>(grids[i]));
    const double y = -std::log2(std::max(values[i], 1e-300));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double den = k * sxx - sx * sx;
  return den != 0.0 ? (k * sxy - sx * sy) / den : 0.0;
}

struct Collector {
  std::vector<int> grids;
  VerifierTolerances tol;
  std::vector<CheckSeries> series;

  void add(const std::string& name, CheckKind kind, double value) {
    for (auto& s : series)
      if (s.name == name) {
        s.values.push_back(value);
        return;
      }
    CheckSeries s;
    s.name = name;
    s.kind = kind;
    s.values.push_back(value);
    series.push_back(std::move(s));
  }

  IdentityReport finish(const std::string& identity, const std::string& field) {
    IdentityReport r;
    r.identity = identity;
    r.field = field;
    r.grids = grids;
    for (auto& s : series) {
      if (s.kind == CheckKind::equality) {
        s.order = fitted_order(grids, s.values);
        s.spectral_decay = true;
        for (std::size_t i = 1; i < s.values.size(); ++i) {
          const bool gained = s.values[i] <= tol.decay_factor * s.values[i - 1];
          const bool at_floor = s.values[i] <= tol.floor && s.values[i - 1] <= 1e3 * tol.floor;
          if (!gained && !at_floor) s.spectral_decay = false;
        }
        s.pass = s.values.back() < tol.tol_abs || s.order >= tol.order_min;
      } else {
        s.spectral_decay = true;
        s.pass = std::all_of(s.values.begin(), s.values.end(), [&](double v) { return v >= -tol.tol_abs; });
      }
      r.verdict = r.verdict && s.pass;
    }
    r.checks = std::move(series);
    return r;
  }
};

void check_grids(const std::vector<int>& grids) {
  if (grids.empty()) throw ArgumentError("verifier: no grids given");
  for (std::size_t i = 1; i < grids.size(); ++i)
    if (grids[i] <= grids[i - 1]) throw ArgumentError("verifier: grid sizes must be strictly increasing");
}

// ----- individual pieces ---------------------------------------------------

struct EnergyTerms {
  double dt_energy, visc_h, visc_g;
};

EnergyTerms energy_terms(const Eval& e) {
  const double gm1 = e.gamma - 1.0;
  EnergyTerms t{};
  // d/dt [|m|^2/(2 rho) + rho^gamma/(gamma-1)] = u.m_t - |u|^2 rho_t/2 + gamma/(gamma-1) rho^{gamma-1} rho_t
  t.dt_energy = e.integral_of([&](std::size_t c) {
    double um = 0.0, uu = 0.0;
    for (int a = 0; a < e.dim; ++a) {
      um += e.u[a][c] * e.m_t[a][c];
      uu += e.u[a][c] * e.u[a][c];
    }
    return um - 0.5 * uu * e.rho_t[c] + e.gamma / gm1 * e.p[c] / e.rho[c] * e.rho_t[c];
  });
  t.visc_h = -e.integral_of([&](std::size_t c) { return e.h[c] * e.grad_u_sq(c); });
  t.visc_g = -e.integral_of([&](std::size_t c) { return e.g[c] * e.div_u[c] * e.div_u[c]; });
  return t;
}

struct Step2Terms {
  double lhs, stretch, lap_term, div_term;
};

Step2Terms step2_terms(const Eval& e) {
  const auto gpt = grad_phi_t(e);
  Step2Terms t{};
  t.lhs = e.integral_of([&](std::size_t c) {
    double gg = 0.0, gd = 0.0;
    for (int a = 0; a < e.dim; ++a) {
      gg += e.grad_phi[a][c] * e.grad_phi[a][c];
      gd += e.grad_phi[a][c] * gpt[a][c];
    }
    return 0.5 * e.rho_t[c] * gg + e.rho[c] * gd;
  });
  t.stretch = -e.integral_of([&](std::size_t c) {
    double s = 0.0;
    for (int i = 0; i < e.dim; ++i)
      for (int j = 0; j < e.dim; ++j) s += e.du[i][j][c] * e.grad_phi[i][c] * e.grad_phi[j][c];
    return e.rho[c] * s;
  });
  t.lap_term = e.integral_of(
      [&](std::size_t c) { return e.rho[c] * e.rho[c] * e.phi_p[c] * e.lap_phi[c] * e.div_u[c]; });
  t.div_term = e.integral_of([&](std::size_t c) {
    double gg = 0.0;
    for (int a = 0; a < e.dim; ++a) gg += e.grad_phi[a][c] * e.grad_phi[a][c];
    return e.rho[c] * gg * e.div_u[c];
  });
  return t;
}

double grad_phi_dot_grad_p(const Eval& e) {
  const auto gp = spectral_grad(e.p, e.grid);
  return e.integral_of([&](std::size_t c) {
    double s = 0.0;
    for (int a = 0; a < e.dim; ++a) s += e.grad_phi[a][c] * gp[a][c];
    return s;
  });
}

// -int grad phi . div(rho u (x) u)
double convective_pairing(const Eval& e) {
  double total = 0.0;
  for (int j = 0; j < e.dim; ++j) {
    VectorField flux(e.dim, Field(e.n));
    for (int i = 0; i < e.dim; ++i)
      for (std::size_t c = 0; c < e.n; ++c) flux[i][c] = e.m[j][c] * e.u[i][c];
    const Field d = spectral_div(flux, e.grid);
    total -= e.integral_of([&](std::size_t c) { return e.grad_phi[j][c] * d[c]; });
  }
  return total;
}

double div_m_sq_phi_p(const Eval& e) {
  const Field dm = spectral_div(e.m, e.grid);
  return e.integral_of([&](std::size_t c) { return dm[c] * dm[c] * e.phi_p[c]; });
}

double cross_derivative(const Eval& e) {
  const auto gpt = grad_phi_t(e);
  return e.integral_of([&](std::size_t c) {
    double s = 0.0;
    for (int a = 0; a < e.dim; ++a) s += e.m_t[a][c] * e.grad_phi[a][c] + e.m[a][c] * gpt[a][c];
    return s;
  });
}

double grad_phi_dot_m_t(const Eval& e) {
  return e.integral_of([&](std::size_t c) {
    double s = 0.0;
    for (int a = 0; a < e.dim; ++a) s += e.m_t[a][c] * e.grad_phi[a][c];
    return s;
  });
}

// int d_i h d_j u_i d_j phi
double grad_u_h_phi(const Eval& e) {
  return e.integral_of([&](std::size_t c) {
    double s = 0.0;
    for (int i = 0; i < e.dim; ++i)
      for (int j = 0; j < e.dim; ++j) s += e.grad_h[i][c] * e.du[j][i][c] * e.grad_phi[j][c];
    return s;
  });
}

double grad_h_phi_div(const Eval& e) {
  return e.integral_of([&](std::size_t c) {
    double s = 0.0;
    for (int a = 0; a < e.dim; ++a) s += e.grad_h[a][c] * e.grad_phi[a][c];
    return s * e.div_u[c];
  });
}

}  // namespace

// ---------------------------------------------------------------------------

IdentityReport verify_energy_step(const ManufacturedField& field, const ViscosityPair& pair, double gamma,
                                  const std::vector<int>& grids, const VerifierTolerances& tol) {
  check_grids(grids);
  Collector col{grids, tol, {}};
  for (int n : grids) {
    const Eval e = evaluate(field, pair, gamma, n);
    const auto t = energy_terms(e);
    col.add("energy_equality", CheckKind::equality, normalised_gap(e, t.dt_energy, {t.visc_h, t.visc_g}));
  }
  return col.finish("energy_step", field.name);
}

IdentityReport verify_step2(const ManufacturedField& field, const ViscosityPair& pair, const std::vector<int>& grids,
                            const VerifierTolerances& tol) {
  check_grids(grids);
  Collector col{grids, tol, {}};
  for (int n : grids) {
    // gamma does not enter this identity; any admissible value will do.
    const Eval e = evaluate(field, pair, 2.0, n);
    const auto t = step2_terms(e);
    col.add("gradient_energy_equality", CheckKind::equality,
            normalised_gap(e, t.lhs, {t.stretch, t.lap_term, t.div_term}));
  }
  return col.finish("step2", field.name);
}

IdentityReport verify_step3_cross(const ManufacturedField& field, const ViscosityPair& pair, double gamma,
                                  const std::vector<int>& grids, const VerifierTolerances& tol) {
  check_grids(grids);
  Collector col{grids, tol, {}};
  for (int n : grids) {
    const Eval e = evaluate(field, pair, gamma, n);
    const double lhs = cross_derivative(e);
    const double gm = grad_phi_dot_m_t(e);
    const double dmsq = div_m_sq_phi_p(e);
    col.add("cross_derivative", CheckKind::equality, normalised_gap(e, lhs, {gm, dmsq}));

    // int div(h grad u) . grad phi, with div(h grad u)_i = d_j(h d_j u_i)
    double hpair = 0.0;
    for (int i = 0; i < e.dim; ++i) {
      VectorField flux(e.dim, Field(e.n));
      for (int j = 0; j < e.dim; ++j)
        for (std::size_t c = 0; c < e.n; ++c) flux[j][c] = e.h[c] * e.du[j][i][c];
      const Field d = spectral_div(flux, e.grid);
      hpair += e.integral_of([&](std::size_t c) { return d[c] * e.grad_phi[i][c]; });
    }
    const double t1 = grad_u_h_phi(e);
    const double t2 = -grad_h_phi_div(e);
    const double t3 = -e.integral_of([&](std::size_t c) { return e.h[c] * e.lap_phi[c] * e.div_u[c]; });
    col.add("h_pairing", CheckKind::equality, normalised_gap(e, hpair, {t1, t2, t3}));

    Field gdiv(e.n);
    for (std::size_t c = 0; c < e.n; ++c) gdiv[c] = e.g[c] * e.div_u[c];
    const auto grad_gdiv = spectral_grad(gdiv, e.grid);
    const double gpair = e.integral_of([&](std::size_t c) {
      double s = 0.0;
      for (int a = 0; a < e.dim; ++a) s += grad_gdiv[a][c] * e.grad_phi[a][c];
      return s;
    });
    const double g_rhs = -e.integral_of([&](std::size_t c) { return e.g[c] * e.lap_phi[c] * e.div_u[c]; });
    col.add("g_pairing", CheckKind::equality, normalised_gap(e, gpair, {g_rhs}));

    // Full expansion of int grad phi . (rho u)_t
    const double hg = -e.integral_of(
        [&](std::size_t c) { return (e.h[c] + e.g[c]) * e.lap_phi[c] * e.div_u[c]; });
    col.add("momentum_pairing", CheckKind::equality,
            normalised_gap(e, gm, {hg, t1, t2, -grad_phi_dot_grad_p(e), convective_pairing(e)}));
  }
  return col.finish("step3_cross", field.name);
}

IdentityReport verify_bd_combination(const ManufacturedField& field, const ViscosityPair& pair, double gamma,
                                     const std::vector<int>& grids, const VerifierTolerances& tol) {
  check_grids(grids);
  Collector col{grids, tol, {}};
  for (int n : grids) {
    const Eval e = evaluate(field, pair, gamma, n);
    const auto en = energy_terms(e);
    const auto s2 = step2_terms(e);
    const double cross = cross_derivative(e);
    const double xbd = grad_phi_dot_grad_p(e);
    const double conv = convective_pairing(e);
    const double dmsq = div_m_sq_phi_p(e);
    const double gdiv2 = -en.visc_g;
    const double htrans = e.integral_of([&](std::size_t c) { return e.h[c] * e.transpose_contraction(c); });
    const double hgrad = -en.visc_h;

    // Step-4 chain: -int grad phi . div(rho u (x) u) + int phi' (div rho u)^2 = int g (div u)^2 + int h d_i u_j d_j u_i
    col.add("convective_chain", CheckKind::equality, normalised_gap(e, conv + dmsq, {gdiv2, htrans}));
    // d/dt {cross + rho |grad phi|^2/2} + int grad phi . grad p = convective chain left side
    const double d_aux = cross + s2.lhs;
    col.add("diffusion_cancellation", CheckKind::equality, normalised_gap(e, d_aux + xbd, {conv, dmsq}));
    // d/dt E_BD + X_BD = -int h (|grad u|^2 - d_i u_j d_j u_i)
    const double d_bd = en.dt_energy + d_aux;
    col.add("bd_equality", CheckKind::equality, normalised_gap(e, d_bd + xbd, {-hgrad, htrans}));

    const double slack = hgrad - htrans;
    col.add("rotation_slack", CheckKind::inequality, normalised_slack(e, slack, std::max(hgrad, std::abs(htrans))));
    const double dvisc = hgrad + gdiv2;
    col.add("bd_inequality", CheckKind::inequality,
            normalised_slack(e, dvisc - (d_aux + xbd), max_abs({dvisc, d_aux, xbd})));
  }
  return col.finish("bd_combination", field.name);
}

namespace {

struct MomentTerms {
  double dt_moment;      ///< d/dt int rho |u|^{2+d}/(2+d)
  double h_main, h_delta, g_main, g_delta, pressure;
  double a_visc;         ///< int h |u|^d |grad u|^2
  double div_slack;      ///< int h |u|^d (N |grad u|^2 - (div u)^2)
  double p_split_lhs;    ///< |int |u|^d u . grad p|
  double p_split_rhs;    ///< (sqrt N + d) int p |u|^d |grad u|
  double p_parts;        ///< -int p |u|^d div u - d int p |u|^{d-2} u.(u.grad)u
  double cs_rhs;         ///< (sqrt N + d) sqrt(A) sqrt(B)
  double b_weight;       ///< int p^2/h |u|^d
  double holder_rhs;     ///< moment right-hand side as displayed
};

MomentTerms moment_terms(const Eval& e, double delta) {
  const int dim = e.dim;
  MomentTerms t{};
  const auto gp = spectral_grad(e.p, e.grid);
  // Direction cosines; zero where u vanishes (every term carrying them also carries |u|^delta).
  auto unit = [&](std::size_t c, int a) {
    const double s = e.speed(c);
    return s > 0.0 ? e.u[a][c] / s : 0.0;
  };
  auto pw = [&](std::size_t c) { return std::pow(e.speed(c), delta); };

  t.dt_moment = e.integral_of([&](std::size_t c) {
    const double s = e.speed(c);
    double uut = 0.0;
    for (int a = 0; a < dim; ++a) uut += e.u[a][c] * e.u_t[a][c];
    return e.rho_t[c] * std::pow(s, 2.0 + delta) / (2.0 + delta) + e.rho[c] * pw(c) * uut;
  });
  t.a_visc = e.integral_of([&](std::size_t c) { return e.h[c] * pw(c) * e.grad_u_sq(c); });
  t.h_main = t.a_visc;
  t.h_delta = delta * e.integral_of([&](std::size_t c) {
    double s = 0.0;
    for (int j = 0; j < dim; ++j) {
      double q = 0.0;
      for (int i = 0; i < dim; ++i) q += unit(c, i) * e.du[j][i][c];
      s += q * q;
    }
    return e.h[c] * pw(c) * s;
  });
  t.g_main = e.integral_of([&](std::size_t c) { return e.g[c] * pw(c) * e.div_u[c] * e.div_u[c]; });
  // u_k u_j d_j u_k / |u|^2 = w . (w . grad) u with w = u/|u|
  auto advective = [&](std::size_t c) {
    double s = 0.0;
    for (int j = 0; j < dim; ++j)
      for (int k = 0; k < dim; ++k) s += unit(c, k) * unit(c, j) * e.du[j][k][c];
    return s;
  };
  t.g_delta = delta * e.integral_of([&](std::size_t c) { return e.g[c] * pw(c) * e.div_u[c] * advective(c); });
  t.pressure = e.integral_of([&](std::size_t c) {
    double s = 0.0;
    for (int a = 0; a < dim; ++a) s += e.u[a][c] * gp[a][c];
    return pw(c) * s;
  });
  t.div_slack = e.integral_of([&](std::size_t c) {
    return e.h[c] * pw(c) * (dim * e.grad_u_sq(c) - e.div_u[c] * e.div_u[c]);
  });
  t.p_split_lhs = std::abs(t.pressure);
  const double lead = std::sqrt(static_cast<double>(dim)) + delta;
  t.p_split_rhs = lead * e.integral_of([&](std::size_t c) { return e.p[c] * pw(c) * std::sqrt(e.grad_u_sq(c)); });
  t.p_parts = -e.integral_of([&](std::size_t c) {
    return e.p[c] * pw(c) * (e.div_u[c] + delta * advective(c));
  });
  t.b_weight = e.integral_of([&](std::size_t c) { return e.p[c] * e.p[c] / e.h[c] * pw(c); });
  t.cs_rhs = lead * std::sqrt(t.a_visc) * std::sqrt(t.b_weight);

  const double q = 2.0 / (2.0 - delta);
  const double w = e.integral_of(
      [&](std::size_t c) { return std::pow(std::pow(e.rho[c], 2.0 * e.gamma - 0.5 * delta) / e.h[c], q); });
  const double k = e.integral_of([&](std::size_t c) {
    double s = 0.0;
    for (int a = 0; a < dim; ++a) s += e.u[a][c] * e.u[a][c];
    return e.rho[c] * s;
  });
  t.holder_rhs = std::pow(w, 1.0 / q) * std::pow(k, 0.5 * delta);
  return t;
}

}  // namespace

IdentityReport verify_moment_derivation(const ManufacturedField& field, const ViscosityPair& pair, double gamma,
                                        double delta, double nu, const std::vector<int>& grids,
                                        const VerifierTolerances& tol) {
  check_grids(grids);
  if (!(nu > 0.0 && nu < 1.0)) throw ArgumentError("verify_moment_derivation: nu must lie in (0, 1)");
  if (!(delta > 0.0 && delta < nu / 4.0)) throw ArgumentError("verify_moment_derivation: delta must lie in (0, nu/4)");
  Collector col{grids, tol, {}};
  const double lead = std::sqrt(static_cast<double>(field.dim)) + delta;
  const double c_nu = lead * lead / nu;
  for (int n : grids) {
    const Eval e = evaluate(field, pair, gamma, n);
    const auto t = moment_terms(e, delta);

    col.add("moment_equality", CheckKind::equality,
            normalised_gap(e, t.dt_moment, {-t.h_main, -t.h_delta, -t.g_main, -t.g_delta, -t.pressure}));
    col.add("pressure_by_parts", CheckKind::equality, normalised_gap(e, t.pressure, {t.p_parts}));

    col.add("divergence_bound", CheckKind::inequality, normalised_slack(e, t.div_slack, e.dim * t.a_visc));
    const double visc = t.h_main + t.h_delta + t.g_main + t.g_delta;
    col.add("viscous_absorption", CheckKind::inequality,
            normalised_slack(e, visc - 0.5 * nu * t.a_visc, max_abs({t.h_main, t.h_delta, t.g_main, t.g_delta})));
    col.add("pressure_split", CheckKind::inequality,
            normalised_slack(e, t.p_split_rhs - t.p_split_lhs, max_abs({t.p_split_rhs, t.p_split_lhs})));
    col.add("cauchy_schwarz", CheckKind::inequality,
            normalised_slack(e, t.cs_rhs - t.p_split_rhs, max_abs({t.cs_rhs, t.p_split_rhs})));
    const double young = 0.25 * nu * t.a_visc + c_nu * t.b_weight;
    col.add("young_split", CheckKind::inequality,
            normalised_slack(e, young - t.cs_rhs, max_abs({young, t.cs_rhs})));
    col.add("holder_split", CheckKind::inequality,
            normalised_slack(e, t.holder_rhs - t.b_weight, max_abs({t.holder_rhs, t.b_weight})));

    const double lhs = t.dt_moment + 0.25 * nu * t.a_visc;
    const double rhs = c_nu * t.holder_rhs;
    col.add("end_to_end", CheckKind::inequality, normalised_slack(e, rhs - lhs, max_abs({lhs, rhs, t.dt_moment})));
  }
  return col.finish("moment_derivation", field.name);
}

double moment_energy_gap(const ManufacturedField& field, const ViscosityPair& pair, double gamma, double delta,
                         int n) {
  if (!(delta > 0.0 && delta < 2.0)) throw ArgumentError("moment_energy_gap: delta must lie in (0, 2)");
  const Eval e = evaluate(field, pair, gamma, n);
  const auto t = moment_terms(e, delta);
  const auto en = energy_terms(e);
  // Moment identity with the pressure work moved left; at delta -> 0 this is
  // d/dt int rho|u|^2/2 + int u.grad p = -int h|grad u|^2 - int g (div u)^2.
  const double moment_side = t.dt_moment + t.pressure;
  const double scale = std::max(max_abs({en.dt_energy, en.visc_h, en.visc_g}), 1e-3 * e.field_scale());
  return std::abs(moment_side - en.dt_energy) / scale;
}

nlohmann::ordered_json to_json(const IdentityReport& report) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& c : report.checks) {
    nlohmann::ordered_json j;
    j["identity"] = report.identity + ":" + c.name;
    j["field"] = report.field;
    j["kind"] = c.kind == CheckKind::equality ? "equality" : "inequality";
    j["grids"] = report.grids;
    j["residuals"] = c.values;
    j["order"] = c.order;
    j["spectral_decay"] = c.spectral_decay;
    j["verdict"] = c.pass ? "pass" : "fail";
    arr.push_back(std::move(j));
  }
  return arr;
}

}  // namespace bdns
