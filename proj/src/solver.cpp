#include "bdns/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "bdns/errors.hpp"

namespace bdns {

namespace {

class Stepper {
 public:
  Stepper(const SolverConfig& config, double eps_vac)
      : config_(config), params_{&config.law, config.params.gamma, eps_vac} {}

  void eval(const State& s, State& out) {
    if (config_.threads == 1)
      rhs_serial(config_.grid, params_, s, out, ws_);
    else
      rhs_omp(config_.grid, params_, s, out, ws_, config_.threads);
    if (config_.forcing) config_.forcing(s.t, config_.grid, out.mom);
  }

  // Clamp negative density and drop momentum on vacuum cells.
  void post(State& s, RunCounters* counters) const {
    const int dim = config_.grid.dim;
    for (std::size_t i = 0; i < s.rho.size(); ++i) {
      if (s.rho[i] < 0.0) {
        s.rho[i] = 0.0;
        if (counters) ++counters->clamp_events;
      }
      if (s.rho[i] <= params_.eps_vac) {
        bool moving = false;
        for (int a = 0; a < dim; ++a) {
          moving = moving || s.mom[a][i] != 0.0;
          s.mom[a][i] = 0.0;
        }
        if (moving && counters) ++counters->cutoff_events;
      }
    }
  }

  State step(const State& u0, double dt, RunCounters* counters) {
    return config_.integrator == Integrator::rk4 ? step_rk4(u0, dt, counters) : step_ssp2(u0, dt, counters);
  }

 private:
  // out = a*x + b*(y + c*k), componentwise.
  static void combine(State& out, double a, const State& x, double b, const State& y, double c, const State& k) {
    const std::size_t n = x.rho.size();
    for (std::size_t i = 0; i < n; ++i) out.rho[i] = a * x.rho[i] + b * (y.rho[i] + c * k.rho[i]);
    for (std::size_t d = 0; d < x.mom.size(); ++d)
      for (std::size_t i = 0; i < n; ++i) out.mom[d][i] = a * x.mom[d][i] + b * (y.mom[d][i] + c * k.mom[d][i]);
  }

  State step_ssp2(const State& u0, double dt, RunCounters* counters) {
    eval(u0, k_[0]);
    State u1 = u0;
    combine(u1, 0.0, u0, 1.0, u0, dt, k_[0]);
    u1.t = u0.t + dt;
    post(u1, counters);
    eval(u1, k_[1]);
    State u2 = u0;
    combine(u2, 0.5, u0, 0.5, u1, dt, k_[1]);
    u2.t = u0.t + dt;
    post(u2, counters);
    return u2;
  }

  State step_rk4(const State& u0, double dt, RunCounters* counters) {
    State tmp = u0;
    eval(u0, k_[0]);
    combine(tmp, 0.0, u0, 1.0, u0, 0.5 * dt, k_[0]);
    tmp.t = u0.t + 0.5 * dt;
    post(tmp, counters);
    eval(tmp, k_[1]);
    combine(tmp, 0.0, u0, 1.0, u0, 0.5 * dt, k_[1]);
    post(tmp, counters);
    eval(tmp, k_[2]);
    combine(tmp, 0.0, u0, 1.0, u0, dt, k_[2]);
    tmp.t = u0.t + dt;
    post(tmp, counters);
    eval(tmp, k_[3]);

    State out = u0;
    const double w = dt / 6.0;
    const std::size_t n = u0.rho.size();
    for (std::size_t i = 0; i < n; ++i)
      out.rho[i] = u0.rho[i] + w * (k_[0].rho[i] + 2.0 * k_[1].rho[i] + 2.0 * k_[2].rho[i] + k_[3].rho[i]);
    for (std::size_t d = 0; d < u0.mom.size(); ++d)
      for (std::size_t i = 0; i < n; ++i)
        out.mom[d][i] = u0.mom[d][i] + w * (k_[0].mom[d][i] + 2.0 * k_[1].mom[d][i] + 2.0 * k_[2].mom[d][i] +
                                            k_[3].mom[d][i]);
    out.t = u0.t + dt;
    post(out, counters);
    return out;
  }

  const SolverConfig& config_;
  FlowParams params_;
  RhsWorkspace ws_;
  State k_[4];
};

double max_density(const State& s) {
  double m = 0.0;
  for (double r : s.rho) m = std::max(m, r);
  return m;
}

void check_config(const SolverConfig& config) {
  config.grid.check();
  config.params.check();
  if (!(config.cfl > 0.0 && config.cfl < 1.0)) throw ArgumentError("cfl must lie in (0, 1)");
  if (!(config.t_end > 0.0)) throw ArgumentError("t_end must be > 0");
  if (config.ledger_stride < 1) throw ArgumentError("ledger_stride must be >= 1");
  if (config.checkpoint_stride < 0) throw ArgumentError("checkpoint_stride must be >= 0");
}

void require_finite(const State& s, std::size_t step_count) {
  auto bad = [&](const char* what, std::size_t i, double v) {
    std::ostringstream os;
    os << "non-finite " << what << " at cell " << i << " (value " << v << ") after step " << step_count
       << ", t = " << s.t;
    throw SolverAbort(os.str());
  };
  for (std::size_t i = 0; i < s.rho.size(); ++i)
    if (!std::isfinite(s.rho[i])) bad("density", i, s.rho[i]);
  for (const auto& c : s.mom)
    for (std::size_t i = 0; i < c.size(); ++i)
      if (!std::isfinite(c[i])) bad("momentum", i, c[i]);
}

}  // namespace

double resolve_eps_vac(const SolverConfig& config, const State& initial) {
  if (config.eps_vac > 0.0) return config.eps_vac;
  const double m = max_density(initial);
  return m > 0.0 ? 1e-10 * m : 1e-10;
}

FlowSetup flow_setup(const SolverConfig& config, double eps_vac) {
  return FlowSetup{config.grid, config.law, config.params.gamma, eps_vac};
}

State rhs(const State& state, const SolverConfig& config) {
  Stepper stepper(config, resolve_eps_vac(config, state));
  State out;
  stepper.eval(state, out);
  return out;
}

double stable_dt(const State& state, const SolverConfig& config) {
  check_state(state, config.grid);
  const double eps = resolve_eps_vac(config, state);
  const double gamma = config.params.gamma;
  const int dim = config.grid.dim;
  const double dx = config.grid.min_spacing();

  double umax = 0.0, cmax = 0.0, dmax = 0.0;
  bool any_fluid = false;
  for (std::size_t i = 0; i < state.rho.size(); ++i) {
    const double r = state.rho[i];
    if (!(r > eps)) continue;
    any_fluid = true;
    double u2 = 0.0;
    for (int a = 0; a < dim; ++a) u2 += (state.mom[a][i] / r) * (state.mom[a][i] / r);
    umax = std::max(umax, std::sqrt(u2));
    cmax = std::max(cmax, std::sqrt(gamma * std::pow(r, gamma - 1.0)));
    dmax = std::max(dmax, (eval_h(config.law, r) + std::abs(eval_g(config.law, r))) / r);
  }
  if (!any_fluid) dmax = eval_h(config.law, eps) / eps;

  const double inf = std::numeric_limits<double>::infinity();
  const double adv = (umax + cmax) > 0.0 ? dx / (umax + cmax) : inf;
  const double diff = dmax > 0.0 ? dx * dx / (2.0 * dim * dmax) : inf;
  const double lim = std::min(adv, diff);
  return config.cfl * (std::isfinite(lim) ? lim : dx * dx);
}

State step(const State& state, const SolverConfig& config, double dt, RunCounters* counters) {
  if (!(dt > 0.0)) throw ArgumentError("step: dt must be > 0");
  check_state(state, config.grid);
  Stepper stepper(config, resolve_eps_vac(config, state));
  return stepper.step(state, dt, counters);
}

std::pair<Trajectory, EntropyLedger> run(const SolverConfig& config, const State& initial) {
  check_config(config);
  check_state(initial, config.grid);
  for (double r : initial.rho)
    if (!(r >= 0.0) || !std::isfinite(r)) throw ArgumentError("initial density must be finite and >= 0");
  require_finite(initial, 0);

  Trajectory traj;
  traj.admissible = validate(config.law, config.params, log_spaced_densities()).overall;
  if (!traj.admissible && !config.allow_non_admissible)
    throw ArgumentError("non-admissible law: " + config.law.describe() + " (set the override to run anyway)");

  const double eps = resolve_eps_vac(config, initial);
  traj.eps_vac = eps;
  SolverConfig cfg = config;
  cfg.eps_vac = eps;

  EntropyLedger ledger;
  ledger.delta = cfg.moments.delta;
  ledger.alpha = cfg.moments.alpha;
  if (cfg.record_ledger && traj.admissible) cfg.moments.check(cfg.params.nu);
  const FlowSetup setup = flow_setup(cfg, eps);

  State s = initial;
  for (std::size_t i = 0; i < s.rho.size(); ++i) {
    if (s.rho[i] > eps) continue;
    bool moving = false;
    for (auto& c : s.mom) {
      moving = moving || c[i] != 0.0;
      c[i] = 0.0;
    }
    if (moving) ++traj.counters.initial_zeroed;
  }

  auto record = [&](const State& st) {
    if (!cfg.record_ledger) return;
    LedgerRow row = ledger_row(st, setup, cfg.moments);
    row.cutoff_count = traj.counters.cutoff_events + traj.counters.initial_zeroed;
    row.clamp_count = traj.counters.clamp_events;
    ledger.rows.push_back(row);
  };

  Stepper stepper(cfg, eps);
  const double dt_floor = 1e-12 * cfg.t_end;
  traj.checkpoints.push_back(s);
  record(s);

  while (s.t < cfg.t_end) {
    double dt = stable_dt(s, cfg);
    bool last = false;
    if (s.t + dt >= cfg.t_end) {
      dt = cfg.t_end - s.t;
      last = true;
    } else if (dt < dt_floor) {
      std::ostringstream os;
      os << "time step underflow: dt = " << dt << " at t = " << s.t << " after " << traj.steps << " steps";
      throw SolverAbort(os.str());
    }
    if (!(dt > 0.0)) break;
    s = stepper.step(s, dt, &traj.counters);
    if (last) s.t = cfg.t_end;
    ++traj.steps;
    require_finite(s, traj.steps);

    if (last || traj.steps % static_cast<std::size_t>(cfg.ledger_stride) == 0) record(s);
    const bool keep = cfg.checkpoint_stride > 0 && traj.steps % static_cast<std::size_t>(cfg.checkpoint_stride) == 0;
    if (keep || last) traj.checkpoints.push_back(s);
  }
  traj.final_state = s;
  return {std::move(traj), std::move(ledger)};
}

}  // namespace bdns
