#include "bdns/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "bdns/checkpoint.hpp"
#include "bdns/errors.hpp"
#include "bdns/identity_verifier.hpp"
#include "bdns/spectral.hpp"

namespace bdns {

namespace {

using nlohmann::json;
using ojson = nlohmann::ordered_json;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

double num(const json& p, const char* key, double fallback) {
  if (!p.contains(key)) return fallback;
  if (!p.at(key).is_number()) throw ArgumentError(std::string("parameter '") + key + "' must be a number");
  return p.at(key).get<double>();
}

std::array<double, 2> pair_param(const json& p, const char* key, std::array<double, 2> fallback) {
  if (!p.contains(key)) return fallback;
  const json& v = p.at(key);
  if (v.is_number()) return {v.get<double>(), v.get<double>()};
  if (v.is_array() && !v.empty() && v.size() <= 2) {
    std::array<double, 2> out = fallback;
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = v.at(i).get<double>();
    if (v.size() == 1) out[1] = out[0];
    return out;
  }
  throw ArgumentError(std::string("parameter '") + key + "' must be a number or an array of 1-2 numbers");
}

// Periodic squared distance to the centre, in units of the box length.
double wrapped_r2(const PeriodicGrid& g, std::size_t i, const std::array<double, 2>& c) {
  double r2 = 0.0;
  for (int a = 0; a < g.dim; ++a) {
    double d = (g.center(i, a) - c[a] * g.lengths[a]) / g.lengths[a];
    d -= std::round(d);
    r2 += d * d;
  }
  return r2;
}

// u_a = amp * sin(2 pi x_a / L_a): a smooth shear-free velocity for every preset.
VectorField sine_velocity(const PeriodicGrid& g, double amp) {
  VectorField u = make_vector(g);
  if (amp == 0.0) return u;
  for (int a = 0; a < g.dim; ++a)
    for (std::size_t i = 0; i < g.cell_count(); ++i) u[a][i] = amp * std::sin(kTwoPi * g.center(i, a) / g.lengths[a]);
  return u;
}

Profile smooth_bump(const json& p, const PeriodicGrid& g, double amp_default, double u_default) {
  const double base = num(p, "base", 1.0);
  const double amp = num(p, "amplitude", amp_default);
  const double kappa = num(p, "kappa", 4.0);
  const auto c = pair_param(p, "center", {0.5, 0.5});
  if (!(base > 0.0) || amp < 0.0 || !(kappa > 0.0)) throw ArgumentError("smooth_bump: need base > 0, amplitude >= 0, kappa > 0");
  Profile out{make_scalar(g), sine_velocity(g, num(p, "velocity", u_default))};
  for (std::size_t i = 0; i < g.cell_count(); ++i) {
    double e = 0.0;
    for (int a = 0; a < g.dim; ++a) e += std::cos(kTwoPi * (g.center(i, a) / g.lengths[a] - c[a])) - 1.0;
    out.rho[i] = base + amp * std::exp(kappa * e);
  }
  return out;
}

Profile vacuum_bump(const json& p, const PeriodicGrid& g) {
  const double amp = num(p, "amplitude", 1.0);
  const double radius = num(p, "radius", 0.25);
  const auto c = pair_param(p, "center", {0.5, 0.5});
  if (!(amp > 0.0) || !(radius > 0.0 && radius < 0.5)) throw ArgumentError("vacuum_bump: need amplitude > 0, radius in (0, 0.5)");
  Profile out{make_scalar(g), sine_velocity(g, num(p, "velocity", 0.0))};
  for (std::size_t i = 0; i < g.cell_count(); ++i) {
    const double s = 1.0 - wrapped_r2(g, i, c) / (radius * radius);
    out.rho[i] = s > 0.0 ? amp * s * s : 0.0;
  }
  return out;
}

ScalarField random_series(const PeriodicGrid& g, int band, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> coeff(-1.0, 1.0);
  ScalarField f = make_scalar(g);
  const int band1 = g.dim == 2 ? band : 0;
  for (int k0 = 0; k0 <= band; ++k0)
    for (int k1 = -band1; k1 <= band1; ++k1) {
      if (k0 == 0 && k1 <= 0) continue;
      const double a = coeff(rng), b = coeff(rng);
      const double decay = 1.0 / (1.0 + k0 * k0 + k1 * k1);
      for (std::size_t i = 0; i < g.cell_count(); ++i) {
        double phase = k0 * g.center(i, 0) / g.lengths[0];
        if (g.dim == 2) phase += k1 * g.center(i, 1) / g.lengths[1];
        f[i] += decay * (a * std::cos(kTwoPi * phase) + b * std::sin(kTwoPi * phase));
      }
    }
  return f;
}

double max_abs(const ScalarField& f) {
  double m = 0.0;
  for (double v : f) m = std::max(m, std::abs(v));
  return m;
}

Profile random_band_limited(const json& p, const PeriodicGrid& g) {
  const double base = num(p, "base", 1.0);
  const double amp = num(p, "amplitude", 0.3);
  const double vamp = num(p, "velocity", 0.3);
  const int band = static_cast<int>(num(p, "band", 4));
  const auto seed = static_cast<std::uint64_t>(num(p, "seed", 12345));
  if (!(base > 0.0) || amp < 0.0 || !(amp < 1.0) || band < 1) throw ArgumentError("random_band_limited: need base > 0, amplitude in [0, 1), band >= 1");
  std::mt19937_64 rng(seed);
  Profile out{random_series(g, band, rng), make_vector(g)};
  const double m = max_abs(out.rho);
  for (double& r : out.rho) r = base * (1.0 + (m > 0.0 ? amp * r / m : 0.0));
  for (int a = 0; a < g.dim; ++a) {
    out.u[a] = random_series(g, band, rng);
    const double ma = max_abs(out.u[a]);
    for (double& v : out.u[a]) v = ma > 0.0 ? vamp * v / ma : 0.0;
  }
  return out;
}

bool is_constant_field(const ScalarField& f) {
  return std::all_of(f.begin(), f.end(), [&](double v) { return v == f.front(); });
}

ScalarField mollify_unless_constant(const ScalarField& f, const PeriodicGrid& g, double sigma) {
  if (f.empty() || is_constant_field(f)) return f;
  return gaussian_mollify(f, g, sigma);
}

// sum over cells of |a - b|^p, times the cell volume, to the power 1/p.
double lp_distance(const ScalarField& a, const ScalarField& b, const PeriodicGrid& g, double p) {
  ScalarField d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  return lp_norm(d, g, p);
}

double vector_l2_squared(const VectorField& a, const VectorField& b, const PeriodicGrid& g) {
  double s = 0.0;
  for (std::size_t c = 0; c < a.size(); ++c)
    for (std::size_t i = 0; i < a[c].size(); ++i) s += (a[c][i] - b[c][i]) * (a[c][i] - b[c][i]);
  return s * g.cell_volume();
}

double vector_l1(const VectorField& a, const VectorField& b, const PeriodicGrid& g) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.front().size(); ++i) {
    double d2 = 0.0;
    for (std::size_t c = 0; c < a.size(); ++c) d2 += (a[c][i] - b[c][i]) * (a[c][i] - b[c][i]);
    s += std::sqrt(d2);
  }
  return s * g.cell_volume();
}

double trapezoid(const std::vector<double>& t, const std::vector<double>& f) {
  double s = 0.0;
  for (std::size_t k = 1; k < t.size(); ++k) s += 0.5 * (t[k] - t[k - 1]) * (f[k] + f[k - 1]);
  return s;
}

// Ledger members bounded in L2 of time: report (int_0^T |.|^2)^{1/2}; the rest: sup over time.
struct BoundSpec {
  const char* name;
  double BoundRow::*field;
  bool time_l2;
};

constexpr BoundSpec kBounds[] = {
    {"sqrt_rho_u_l2", &BoundRow::sqrt_rho_u_l2, false},
    {"rho_l1", &BoundRow::rho_l1, false},
    {"rho_lgamma", &BoundRow::rho_lgamma, false},
    {"sqrt_h_grad_u_l2", &BoundRow::sqrt_h_grad_u_l2, true},
    {"hprime_grad_sqrt_rho_l2", &BoundRow::hprime_grad_sqrt_rho_l2, false},
    {"pressure_gradient_weight_l2", &BoundRow::pressure_gradient_weight_l2, true},
    {"sqrt_rho_grad_u_l2", &BoundRow::sqrt_rho_grad_u_l2, true},
    {"grad_sqrt_rho_l2", &BoundRow::grad_sqrt_rho_l2, false},
    {"grad_rho_half_gamma_l2", &BoundRow::grad_rho_half_gamma_l2, true},
};

double bound_level(const EntropyLedger& ledger, const BoundSpec& b) {
  if (ledger.rows.empty()) return 0.0;
  if (!b.time_l2) {
    double m = 0.0;
    for (const auto& r : ledger.rows) m = std::max(m, r.bounds.*(b.field));
    return m;
  }
  std::vector<double> t, f;
  for (const auto& r : ledger.rows) {
    t.push_back(r.t);
    f.push_back(r.bounds.*(b.field) * r.bounds.*(b.field));
  }
  return std::sqrt(trapezoid(t, f));
}

int worker_cap() {
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("BDNS_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v >= 1) return static_cast<int>(std::min<long>(v, 1024));
  }
  return static_cast<int>(hw);
}

}  // namespace

// ---------------------------------------------------------------------------
// Profiles

std::vector<std::string> preset_names() {
  return {"constant", "smooth_bump", "vacuum_bump", "saint_venant_demo", "random_band_limited"};
}

Profile make_profile(const std::string& preset, const json& params, const PeriodicGrid& grid) {
  grid.check();
  const json& p = params.is_null() ? json::object() : params;
  if (!p.is_object()) throw ArgumentError("preset parameters must be a JSON object");
  if (preset == "constant") {
    const double rho = num(p, "rho", 1.0);
    if (!(rho >= 0.0)) throw ArgumentError("constant: rho must be >= 0");
    const auto u = pair_param(p, "u", {0.0, 0.0});
    Profile out{make_scalar(grid, rho), make_vector(grid)};
    for (int a = 0; a < grid.dim; ++a) std::fill(out.u[a].begin(), out.u[a].end(), u[a]);
    return out;
  }
  if (preset == "smooth_bump") return smooth_bump(p, grid, 0.5, 0.0);
  if (preset == "saint_venant_demo") {
    if (grid.dim != 2) throw ArgumentError("saint_venant_demo is a two-dimensional preset");
    return smooth_bump(p, grid, 0.5, 0.0);
  }
  if (preset == "vacuum_bump") return vacuum_bump(p, grid);
  if (preset == "random_band_limited") return random_band_limited(p, grid);
  throw ArgumentError("unknown preset '" + preset + "'");
}

State state_from_profile(const Profile& p, const PeriodicGrid& grid) {
  State s = make_state(grid);
  if (p.rho.size() != grid.cell_count() || p.u.size() != static_cast<std::size_t>(grid.dim))
    throw ArgumentError("profile does not match the grid");
  s.rho = p.rho;
  for (int a = 0; a < grid.dim; ++a)
    for (std::size_t i = 0; i < grid.cell_count(); ++i) s.mom[a][i] = p.rho[i] * p.u[a][i];
  return s;
}

// ---------------------------------------------------------------------------
// Mollified sequences

double InitialDataSpec::sigma(int n) const { return sigma0 * std::ldexp(1.0, -n); }

GeneratedSequence generate_sequence(const InitialDataSpec& spec, const PeriodicGrid& grid, const ViscosityLaw& law,
                                    double gamma, double delta, double eps_vac) {
  if (!(spec.sigma0 > 0.0)) throw ArgumentError("sigma0 must be > 0");
  if (spec.n_max < 0) throw ArgumentError("n_max must be >= 0");
  if (!(delta > 0.0)) throw ArgumentError("delta must be > 0");
  const Profile base = make_profile(spec.preset, spec.params, grid);
  ScalarField sqrt_base(base.rho.size());
  for (std::size_t i = 0; i < base.rho.size(); ++i) sqrt_base[i] = std::sqrt(std::max(base.rho[i], 0.0));

  const FlowSetup setup{grid, law, gamma, eps_vac};
  GeneratedSequence out;
  for (int n = 0; n <= spec.n_max; ++n) {
    const double sigma = spec.sigma(n);
    const ScalarField sr = mollify_unless_constant(sqrt_base, grid, sigma);
    State s = make_state(grid);
    for (std::size_t i = 0; i < sr.size(); ++i) s.rho[i] = sr[i] * sr[i];
    for (int a = 0; a < grid.dim; ++a) {
      const ScalarField ua = mollify_unless_constant(base.u[a], grid, sigma);
      for (std::size_t i = 0; i < ua.size(); ++i) s.mom[a][i] = s.rho[i] < eps_vac ? 0.0 : s.rho[i] * ua[i];
    }

    HypothesisRow h;
    h.energy = energy(s, setup);
    {
      ScalarField sq(s.rho.size());
      for (std::size_t i = 0; i < sq.size(); ++i) sq[i] = std::sqrt(s.rho[i]);
      const VectorField gs = grad(sq, grid);
      ScalarField w(sq.size(), 0.0);
      for (std::size_t i = 0; i < w.size(); ++i) {
        const double hp = eval_h_prime(law, s.rho[i]);
        for (int a = 0; a < grid.dim; ++a) w[i] += 4.0 * hp * hp * gs[a][i] * gs[a][i];
      }
      h.bd_gradient = integrate(w, grid);
    }
    {
      const DerivedFields d = derived(s, grid, eps_vac);
      const ScalarField speed = magnitude(d.u);
      ScalarField w(speed.size());
      for (std::size_t i = 0; i < w.size(); ++i) w[i] = 0.5 * s.rho[i] * std::pow(speed[i], 2.0 + delta);
      h.moment = integrate(w, grid);
    }
    h.l1_to_base = lp_distance(s.rho, base.rho, grid, 1.0);

    const std::pair<const char*, double> checks[] = {{"energy", h.energy},
                                                     {"bd_gradient", h.bd_gradient},
                                                     {"moment", h.moment},
                                                     {"l1_to_base", h.l1_to_base}};
    for (const auto& [name, v] : checks)
      if (!std::isfinite(v)) {
        std::ostringstream os;
        os << "hypothesis '" << name << "' is not finite for member " << n << " (sigma = " << sigma << ")";
        throw GenerationError(os.str());
      }
    if (n > 0) {
      const HypothesisRow& h0 = out.hypotheses.front();
      auto flag = [&](const char* name, double v, double v0) {
        if (v > 10.0 * v0) out.flags.push_back(std::string(name) + " exceeds 10x its first value at member " + std::to_string(n));
      };
      flag("energy", h.energy, h0.energy);
      flag("bd_gradient", h.bd_gradient, h0.bd_gradient);
      flag("moment", h.moment, h0.moment);
    }
    out.states.push_back(std::move(s));
    out.hypotheses.push_back(h);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Studies

State interpolate_state(const std::vector<State>& cps, double t) {
  if (cps.empty()) throw ArgumentError("interpolate_state: no checkpoints");
  if (t <= cps.front().t) return cps.front();
  if (t >= cps.back().t) return cps.back();
  auto it = std::lower_bound(cps.begin(), cps.end(), t, [](const State& s, double v) { return s.t < v; });
  if (it->t == t) return *it;
  const State& b = *it;
  const State& a = *(it - 1);
  const double w = (t - a.t) / (b.t - a.t);
  State out = a;
  out.t = t;
  for (std::size_t i = 0; i < a.rho.size(); ++i) out.rho[i] = (1.0 - w) * a.rho[i] + w * b.rho[i];
  for (std::size_t c = 0; c < a.mom.size(); ++c)
    for (std::size_t i = 0; i < a.rho.size(); ++i) out.mom[c][i] = (1.0 - w) * a.mom[c][i] + w * b.mom[c][i];
  return out;
}

bool metric_axioms_hold(const DistanceMatrix& d, double tol) {
  const std::size_t n = d.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (d[i].size() != n || std::abs(d[i][i]) > tol) return false;
    for (std::size_t j = 0; j < n; ++j) {
      if (!(d[i][j] >= -tol) || std::abs(d[i][j] - d[j][i]) > tol) return false;
      for (std::size_t k = 0; k < n; ++k)
        if (d[i][k] > d[i][j] + d[j][k] + tol) return false;
    }
  }
  return true;
}

StabilityStudy run_study(const InitialDataSpec& spec, const SolverConfig& config) {
  SolverConfig cfg = config;
  cfg.threads = 1;
  // One cutoff for every member, taken from the unmollified base.
  if (!(cfg.eps_vac > 0.0)) {
    const Profile base = make_profile(spec.preset, spec.params, cfg.grid);
    cfg.eps_vac = resolve_eps_vac(cfg, state_from_profile(base, cfg.grid));
  }
  const GeneratedSequence seq =
      generate_sequence(spec, cfg.grid, cfg.law, cfg.params.gamma, cfg.moments.delta, cfg.eps_vac);

  StabilityStudy study;
  study.hypothesis_delta = cfg.moments.delta;
  study.hypothesis_flags = seq.flags;
  const int members = static_cast<int>(seq.states.size());
  study.members.resize(members);
  for (int n = 0; n < members; ++n) study.members[n].n = n;

  std::atomic<int> next{0};
  auto worker = [&] {
    for (int n = next++; n < members; n = next++) {
      StudyMember& m = study.members[n];
      try {
        auto [traj, ledger] = run(cfg, seq.states[n]);
        m.trajectory = std::move(traj);
        m.ledger = std::move(ledger);
        m.completed = true;
      } catch (const std::exception& e) {
        m.error = e.what();
      }
    }
  };
  const int workers = std::min(worker_cap(), members);
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  for (int n = 0; n < members; ++n) {
    StudyMember& m = study.members[n];
    if (!m.completed) {
      study.partial = true;
      continue;
    }
    study.surviving.push_back(n);
    for (const State& s : m.trajectory.checkpoints) {
      double vac = 0.0, total = 0.0;
      for (std::size_t i = 0; i < s.rho.size(); ++i) {
        double mag2 = 0.0;
        for (const auto& c : s.mom) mag2 += c[i] * c[i];
        const double mag = std::sqrt(mag2);
        total += mag;
        if (s.rho[i] < m.trajectory.eps_vac) vac += mag;
      }
      vac *= cfg.grid.cell_volume();
      total *= cfg.grid.cell_volume();
      m.vacuum = std::max(m.vacuum, vac);
      if (total > 0.0) m.vacuum_ratio = std::max(m.vacuum_ratio, vac / total);
    }
  }

  const std::size_t k = study.surviving.size();
  study.d_rho.assign(k, std::vector<double>(k, 0.0));
  study.d_u = study.d_rho;
  study.d_m = study.d_rho;
  if (k == 0) return study;

  int ref = study.surviving.front();
  for (int n : study.surviving)
    if (study.members[n].trajectory.steps < study.members[ref].trajectory.steps) ref = n;
  for (const State& s : study.members[ref].trajectory.checkpoints) study.common_times.push_back(s.t);

  // Resample every survivor once, then assemble the matrices serially.
  struct Sampled {
    std::vector<ScalarField> rho;
    std::vector<VectorField> sqrt_rho_u, mom;
  };
  std::vector<Sampled> sampled(k);
  for (std::size_t a = 0; a < k; ++a) {
    const StudyMember& m = study.members[study.surviving[a]];
    for (double t : study.common_times) {
      const State s = interpolate_state(m.trajectory.checkpoints, t);
      sampled[a].rho.push_back(s.rho);
      sampled[a].sqrt_rho_u.push_back(derived(s, cfg.grid, m.trajectory.eps_vac).sqrt_rho_u);
      sampled[a].mom.push_back(s.mom);
    }
  }
  const std::size_t nt = study.common_times.size();
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = a + 1; b < k; ++b) {
      double sup = 0.0;
      std::vector<double> l2sq(nt), l1(nt);
      for (std::size_t q = 0; q < nt; ++q) {
        sup = std::max(sup, lp_distance(sampled[a].rho[q], sampled[b].rho[q], cfg.grid, 1.5));
        l2sq[q] = vector_l2_squared(sampled[a].sqrt_rho_u[q], sampled[b].sqrt_rho_u[q], cfg.grid);
        l1[q] = vector_l1(sampled[a].mom[q], sampled[b].mom[q], cfg.grid);
      }
      study.d_rho[a][b] = study.d_rho[b][a] = sup;
      study.d_u[a][b] = study.d_u[b][a] = std::sqrt(trapezoid(study.common_times, l2sq));
      study.d_m[a][b] = study.d_m[b][a] = trapezoid(study.common_times, l1);
    }

  for (const auto& b : kBounds) {
    auto& col = study.bound_suprema[b.name];
    for (int n : study.surviving) col.push_back(bound_level(study.members[n].ledger, b));
  }
  study.metric_axioms =
      metric_axioms_hold(study.d_rho) && metric_axioms_hold(study.d_u) && metric_axioms_hold(study.d_m);
  return study;
}

// ---------------------------------------------------------------------------
// Configuration

ViscosityLaw parse_law(const json& j) {
  if (!j.is_object()) throw ArgumentError("law must be an object with 'terms' or 'constant'");
  if (j.contains("constant")) {
    if (j.contains("terms") || !j.at("constant").is_number()) throw ArgumentError("law: 'constant' must be a lone number");
    return ViscosityLaw::constant(j.at("constant").get<double>());
  }
  if (!j.contains("terms") || !j.at("terms").is_array()) throw ArgumentError("law: expected 'terms': [[a, b], ...]");
  std::vector<PowerTerm> terms;
  for (const auto& t : j.at("terms")) {
    if (!t.is_array() || t.size() != 2 || !t[0].is_number() || !t[1].is_number())
      throw ArgumentError("law: every term must be [coefficient, exponent]");
    terms.push_back({t[0].get<double>(), t[1].get<double>()});
  }
  return ViscosityLaw::power_sum(std::move(terms));
}

json law_to_json(const ViscosityLaw& law) {
  if (law.is_constant()) return json{{"constant", law.constant_value()}};
  json terms = json::array();
  for (const auto& t : law.terms()) terms.push_back({t.coeff, t.exponent});
  return json{{"terms", terms}};
}

RunConfig parse_config(const json& j) {
  static const std::vector<std::string> known = {
      "law",        "nu",           "gamma", "dim",   "cells",         "lengths",           "cfl",
      "t_end",      "integrator",   "eps_vac", "ledger_stride", "checkpoint_stride", "eps_growth", "delta",
      "alpha",      "allow_non_admissible", "initial", "study", "threads"};
  if (!j.is_object()) throw ArgumentError("config must be a JSON object");
  for (const auto& [key, _] : j.items())
    if (std::find(known.begin(), known.end(), key) == known.end()) throw ArgumentError("unknown config key '" + key + "'");

  RunConfig rc;
  SolverConfig& s = rc.solver;
  try {
    if (j.contains("law")) s.law = parse_law(j.at("law"));
    s.params.nu = j.value("nu", s.params.nu);
    s.params.gamma = j.value("gamma", s.params.gamma);
    s.params.dim = j.value("dim", 1);
    s.params.eps_growth = j.value("eps_growth", s.params.eps_growth);
    s.cfl = j.value("cfl", s.cfl);
    s.t_end = j.value("t_end", s.t_end);
    s.eps_vac = j.value("eps_vac", s.eps_vac);
    s.ledger_stride = j.value("ledger_stride", s.ledger_stride);
    s.checkpoint_stride = j.value("checkpoint_stride", s.checkpoint_stride);
    s.moments.delta = j.value("delta", s.moments.delta);
    s.moments.alpha = j.value("alpha", s.moments.alpha);
    s.allow_non_admissible = j.value("allow_non_admissible", false);
    s.threads = j.value("threads", 0);

    const std::string integ = j.value("integrator", std::string("ssp_rk2"));
    if (integ == "ssp_rk2")
      s.integrator = Integrator::ssp_rk2;
    else if (integ == "rk4")
      s.integrator = Integrator::rk4;
    else
      throw ArgumentError("integrator must be 'ssp_rk2' or 'rk4'");

    const int dim = s.params.dim;
    if (dim != 1 && dim != 2) throw ArgumentError("dim must be 1 or 2 for simulation");
    std::array<int, 2> cells{64, 64};
    if (j.contains("cells")) {
      const json& c = j.at("cells");
      if (c.is_number_integer()) {
        cells = {c.get<int>(), c.get<int>()};
      } else if (c.is_array() && static_cast<int>(c.size()) == dim) {
        for (int a = 0; a < dim; ++a) cells[a] = c.at(a).get<int>();
      } else {
        throw ArgumentError("cells must be an integer or an array of length dim");
      }
    }
    std::array<double, 2> lengths{1.0, 1.0};
    if (j.contains("lengths")) {
      const json& l = j.at("lengths");
      if (l.is_number()) {
        lengths = {l.get<double>(), l.get<double>()};
      } else if (l.is_array() && static_cast<int>(l.size()) == dim) {
        for (int a = 0; a < dim; ++a) lengths[a] = l.at(a).get<double>();
      } else {
        throw ArgumentError("lengths must be a number or an array of length dim");
      }
    }
    s.grid = dim == 1 ? PeriodicGrid::line(cells[0], lengths[0])
                      : PeriodicGrid::square(cells[0], cells[1], lengths[0], lengths[1]);
    s.grid.check();
    s.params.check();

    if (j.contains("initial")) {
      const json& init = j.at("initial");
      if (!init.is_object()) throw ArgumentError("initial must be an object");
      if (init.contains("checkpoint")) {
        rc.initial_checkpoint = init.at("checkpoint").get<std::string>();
      } else {
        rc.initial.preset = init.value("preset", rc.initial.preset);
        rc.initial.params = init.contains("params") ? init.at("params") : json::object();
        for (const auto& [key, v] : init.items())
          if (key != "preset" && key != "params") rc.initial.params[key] = v;
      }
    }
    if (j.contains("study")) {
      const json& st = j.at("study");
      rc.initial.sigma0 = st.value("sigma0", rc.initial.sigma0);
      rc.initial.n_max = st.value("n_max", rc.initial.n_max);
    }
  } catch (const json::exception& e) {
    throw ArgumentError(std::string("config: ") + e.what());
  }
  return rc;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot open config '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ArgumentError("config '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

State initial_state(const RunConfig& config) {
  if (config.initial_checkpoint) {
    Checkpoint cp = read_checkpoint(*config.initial_checkpoint);
    if (!(cp.grid == config.solver.grid)) throw ArgumentError("checkpoint grid does not match the configured grid");
    return cp.state;
  }
  return state_from_profile(make_profile(config.initial.preset, config.initial.params, config.solver.grid),
                            config.solver.grid);
}

ojson to_json(const ValidationReport& report, const ViscosityLaw& law, const AdmissibilityParams& params) {
  ojson out;
  out["law"] = law.describe();
  out["nu"] = params.nu;
  out["gamma"] = params.gamma;
  out["dim"] = params.dim;
  out["eps_growth"] = params.eps_growth;
  out["overall"] = report.overall;
  ojson conds = ojson::array();
  for (const auto& r : report.records) {
    ojson c;
    c["condition"] = condition_label(r.condition);
    c["applicable"] = r.applicable;
    c["pass"] = r.pass;
    c["worst_rho"] = r.worst_rho;
    c["margin"] = r.margin;
    conds.push_back(c);
  }
  out["conditions"] = conds;
  out["g_bounded_by_h"] = report.g_bounded_by_h;
  out["growth_slope"] = report.growth_slope;
  out["notes"] = report.notes;
  return out;
}

ojson to_json(const StabilityStudy& study, const std::vector<std::string>& ledger_paths) {
  ojson out;
  out["members"] = ledger_paths;
  ojson status = ojson::array();
  for (const auto& m : study.members) {
    ojson e;
    e["n"] = m.n;
    e["completed"] = m.completed;
    e["steps"] = m.trajectory.steps;
    if (!m.error.empty()) e["error"] = m.error;
    status.push_back(e);
  }
  out["member_status"] = status;
  out["surviving"] = study.surviving;
  out["partial"] = study.partial;
  out["d_rho"] = study.d_rho;
  out["d_u"] = study.d_u;
  out["d_m"] = study.d_m;
  std::vector<double> vac, ratio;
  for (int n : study.surviving) {
    vac.push_back(study.members[n].vacuum);
    ratio.push_back(study.members[n].vacuum_ratio);
  }
  out["vacuum"] = vac;
  out["vacuum_ratio"] = ratio;
  ojson bounds, spread;
  for (const auto& b : kBounds) {
    const auto it = study.bound_suprema.find(b.name);
    if (it == study.bound_suprema.end() || it->second.empty()) continue;
    const auto [lo, hi] = std::minmax_element(it->second.begin(), it->second.end());
    bounds[b.name] = *hi;
    spread[b.name] = *lo > 0.0 ? *hi / *lo : (*hi > 0.0 ? std::numeric_limits<double>::infinity() : 1.0);
  }
  out["uniform_bounds"] = bounds;
  out["uniform_bounds_ratio"] = spread;
  out["metric_axioms"] = study.metric_axioms;
  out["hypothesis_delta"] = study.hypothesis_delta;
  out["hypothesis_flags"] = study.hypothesis_flags;
  return out;
}

// ---------------------------------------------------------------------------
// CLI

namespace {

void emit(const ojson& j, const std::string& path) {
  if (path.empty()) {
    std::cout << j.dump(2) << '\n';
    return;
  }
  std::ofstream out(path);
  if (!out) throw ArgumentError("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
}

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(item, &used);
    } catch (const std::exception&) {
      throw ArgumentError("bad integer list '" + s + "'");
    }
    if (used != item.size()) throw ArgumentError("bad integer list '" + s + "'");
    out.push_back(v);
  }
  if (out.empty()) throw ArgumentError("empty list");
  return out;
}

std::vector<double> parse_double_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      throw ArgumentError("bad number list '" + s + "'");
    }
    if (used != item.size()) throw ArgumentError("bad number list '" + s + "'");
    out.push_back(v);
  }
  if (out.empty()) throw ArgumentError("empty list");
  return out;
}

ViscosityLaw law_from_string(const std::string& s) {
  if (s == "linear") return ViscosityLaw::linear();
  try {
    return parse_law(json::parse(s));
  } catch (const json::exception&) {
    throw ArgumentError("--law expects 'linear' or a JSON law object, got '" + s + "'");
  }
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ArgumentError("'" + path + "' is not valid JSON: " + e.what());
  }
}

struct ValidateOpts {
  std::string config, law, out;
  double nu = 0.5, gamma = 2.0, eps_growth = 0.1;
  int dim = 2;
};

int cmd_validate(const ValidateOpts& o, CLI::App& sub) {
  ViscosityLaw law = ViscosityLaw::linear();
  AdmissibilityParams params;
  if (!o.config.empty()) {
    const json j = read_json_file(o.config);
    if (j.contains("law")) law = parse_law(j.at("law"));
    params.nu = j.value("nu", params.nu);
    params.gamma = j.value("gamma", params.gamma);
    params.dim = j.value("dim", params.dim);
    params.eps_growth = j.value("eps_growth", params.eps_growth);
  }
  if (!o.law.empty()) law = law_from_string(o.law);
  if (sub.count("--nu")) params.nu = o.nu;
  if (sub.count("--gamma")) params.gamma = o.gamma;
  if (sub.count("--dim")) params.dim = o.dim;
  if (sub.count("--eps-growth")) params.eps_growth = o.eps_growth;
  params.check();

  const auto samples = log_spaced_densities();
  const ValidationReport report = validate(law, params, samples);
  ojson j = to_json(report, law, params);
  const auto best = largest_feasible_nu(law, params, samples);
  j["largest_feasible_nu"] = best ? ojson(*best) : ojson(nullptr);
  emit(j, o.out);
  return report.overall ? 0 : 1;
}

struct SimulateOpts {
  std::string config, checkpoint, ledger, jsonl;
};

int cmd_simulate(const SimulateOpts& o) {
  const RunConfig rc = load_config(o.config);
  const State init = initial_state(rc);
  auto [traj, ledger] = run(rc.solver, init);
  if (!o.checkpoint.empty()) write_checkpoint(o.checkpoint, rc.solver.grid, traj.final_state);
  if (!o.ledger.empty()) write_ledger_csv(o.ledger, ledger);
  if (!o.jsonl.empty()) write_ledger_jsonl(o.jsonl, ledger);
  std::cerr << "steps " << traj.steps << ", t = " << traj.final_state.t << ", clamps " << traj.counters.clamp_events
            << ", cutoffs " << traj.counters.cutoff_events << '\n';
  return 0;
}

struct VerifyOpts {
  std::string config, law, dims = "1,2", grids = "32,64,128", deltas = "0.01,0.05", out;
  double gamma = 2.0, nu = 0.5, g_constant = 0.0;
};

int cmd_verify(const VerifyOpts& o, CLI::App& sub) {
  ViscosityLaw law = ViscosityLaw::linear();
  double gamma = o.gamma, nu = o.nu;
  if (!o.config.empty()) {
    const json j = read_json_file(o.config);
    if (j.contains("law")) law = parse_law(j.at("law"));
    if (!sub.count("--gamma")) gamma = j.value("gamma", gamma);
    if (!sub.count("--nu")) nu = j.value("nu", nu);
  }
  if (!o.law.empty()) law = law_from_string(o.law);
  const ViscosityPair pair(law, sub.count("--g-constant") ? std::optional<double>(o.g_constant) : std::nullopt);
  const auto dims = parse_int_list(o.dims);
  const auto grids = parse_int_list(o.grids);
  const auto deltas = parse_double_list(o.deltas);
  if (!(gamma > 1.0)) throw ArgumentError("--gamma must be > 1");

  std::vector<IdentityReport> reports;
  for (int dim : dims) {
    std::vector<ManufacturedField> fields;
    std::vector<ManufacturedField> moment_fields;
    if (dim == 1) {
      fields = {ManufacturedField::bump_1d(), ManufacturedField::generic_1d()};
      moment_fields = {ManufacturedField::generic_1d()};
    } else if (dim == 2) {
      fields = {ManufacturedField::generic_2d(), ManufacturedField::rotational_2d(),
                ManufacturedField::gradient_flow_2d()};
      moment_fields = {ManufacturedField::generic_2d()};
    } else {
      throw ArgumentError("--dims accepts 1 and 2");
    }
    for (const auto& f : fields) {
      for (int n : grids) f.check(n);
      reports.push_back(verify_energy_step(f, pair, gamma, grids));
      reports.push_back(verify_step2(f, pair, grids));
      reports.push_back(verify_step3_cross(f, pair, gamma, grids));
      reports.push_back(verify_bd_combination(f, pair, gamma, grids));
    }
    for (const auto& f : moment_fields)
      for (double d : deltas) reports.push_back(verify_moment_derivation(f, pair, gamma, d, nu, grids));
  }

  ojson all = ojson::array();
  bool ok = true;
  for (const auto& r : reports) {
    ok = ok && r.verdict;
    for (const auto& row : to_json(r)) all.push_back(row);
  }
  emit(all, o.out);
  return ok ? 0 : 1;
}

struct StudyOpts {
  std::string config, out, ledger_dir;
};

int cmd_study(const StudyOpts& o) {
  const RunConfig rc = load_config(o.config);
  if (rc.initial_checkpoint) throw ArgumentError("stability-study needs a preset base profile, not a checkpoint");
  const StabilityStudy study = run_study(rc.initial, rc.solver);
  std::vector<std::string> paths;
  if (!o.ledger_dir.empty()) {
    std::filesystem::create_directories(o.ledger_dir);
    for (const auto& m : study.members) {
      if (!m.completed) continue;
      const std::string p = (std::filesystem::path(o.ledger_dir) / ("ledger_" + std::to_string(m.n) + ".csv")).string();
      write_ledger_csv(p, m.ledger);
      paths.push_back(p);
    }
  }
  emit(to_json(study, paths), o.out);
  return study.partial || !study.metric_axioms ? 1 : 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"Compressible Navier-Stokes with degenerate viscosity: simulation and verification"};
  app.require_subcommand(1);

  ValidateOpts vo;
  auto* validate_cmd = app.add_subcommand("validate-law", "Check a viscosity law against the admissibility conditions");
  validate_cmd->add_option("--config", vo.config, "Run configuration JSON (law, nu, gamma, dim, eps_growth)");
  validate_cmd->add_option("--law", vo.law, "Law as JSON, e.g. '{\"terms\": [[1, 1]]}', or 'linear'");
  validate_cmd->add_option("--nu", vo.nu, "Admissibility constant in (0, 1)");
  validate_cmd->add_option("--gamma", vo.gamma, "Adiabatic exponent");
  validate_cmd->add_option("--dim", vo.dim, "Space dimension N");
  validate_cmd->add_option("--eps-growth", vo.eps_growth, "Growth margin for the N = 3 condition");
  validate_cmd->add_option("--out", vo.out, "Report path (stdout when omitted)");

  SimulateOpts so;
  auto* sim_cmd = app.add_subcommand("simulate", "Run the solver from a configuration file");
  sim_cmd->add_option("--config", so.config, "Run configuration JSON")->required();
  sim_cmd->add_option("--checkpoint", so.checkpoint, "Write the final state here");
  sim_cmd->add_option("--ledger", so.ledger, "Write the entropy ledger as CSV");
  sim_cmd->add_option("--jsonl", so.jsonl, "Write the entropy ledger as JSON lines");

  VerifyOpts io;
  auto* verify_cmd = app.add_subcommand("verify-identities", "Spectral certification of the entropy identities");
  verify_cmd->add_option("--config", io.config, "Take law, gamma and nu from a configuration file");
  verify_cmd->add_option("--law", io.law, "Law as JSON or 'linear'");
  verify_cmd->add_option("--gamma", io.gamma, "Adiabatic exponent");
  verify_cmd->add_option("--nu", io.nu, "Admissibility constant used by the moment chain");
  verify_cmd->add_option("--dims", io.dims, "Comma-separated dimensions (1, 2)");
  verify_cmd->add_option("--grids", io.grids, "Comma-separated grid sizes");
  verify_cmd->add_option("--delta", io.deltas, "Comma-separated moment exponents");
  verify_cmd->add_option("--g-constant", io.g_constant, "Replace g by this constant (breaks the structural relation)");
  verify_cmd->add_option("--out", io.out, "Report path (stdout when omitted)");

  StudyOpts sto;
  auto* study_cmd = app.add_subcommand("stability-study", "Run a mollified initial-data sequence and compare members");
  study_cmd->add_option("--config", sto.config, "Run configuration JSON with a 'study' block")->required();
  study_cmd->add_option("--out", sto.out, "Study report path (stdout when omitted)");
  study_cmd->add_option("--ledger-dir", sto.ledger_dir, "Directory for per-member ledgers");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*validate_cmd) return cmd_validate(vo, *validate_cmd);
    if (*sim_cmd) return cmd_simulate(so);
    if (*verify_cmd) return cmd_verify(io, *verify_cmd);
    if (*study_cmd) return cmd_study(sto);
  } catch (const ArgumentError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "failed: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace bdns
