#include <cmath>
#include <limits>

#include "bdns/errors.hpp"
#include "bdns/kernels.hpp"
#include "bdns/solver.hpp"
#include "doctest.h"
#include "support/oracles.hpp"

using namespace bdns;
using oracle::pi;

namespace {

SolverConfig base_config(const PeriodicGrid& g, double t_end = 0.01) {
  SolverConfig c;
  c.grid = g;
  c.params = {0.5, 2.0, g.dim, 0.1};
  c.t_end = t_end;
  c.threads = 1;
  return c;
}

State bump_state(const PeriodicGrid& g, double u_amp = 0.3) {
  State s = make_state(g);
  for (std::size_t i = 0; i < g.cell_count(); ++i) {
    double e = 0.0;
    for (int a = 0; a < g.dim; ++a) e += std::cos(2 * pi * (g.center(i, a) - 0.5)) - 1.0;
    s.rho[i] = 1.0 + 0.5 * std::exp(4.0 * e);
    for (int a = 0; a < g.dim; ++a) s.mom[a][i] = s.rho[i] * u_amp * std::sin(2 * pi * g.center(i, a));
  }
  return s;
}

double total(const ScalarField& f, const PeriodicGrid& g) { return integrate(f, g); }

}  // namespace

TEST_SUITE("solver") {
  TEST_CASE("constant state has zero right-hand side") {
    for (const auto& g : {PeriodicGrid::line(16), PeriodicGrid::square(16, 16)}) {
      State s = make_state(g);
      std::fill(s.rho.begin(), s.rho.end(), 1.3);
      for (int a = 0; a < g.dim; ++a) std::fill(s.mom[a].begin(), s.mom[a].end(), 1.3 * (0.7 - a));
      const State r = rhs(s, base_config(g));
      for (double v : r.rho) CHECK(std::abs(v) < 1e-13);
      for (const auto& c : r.mom)
        for (double v : c) CHECK(std::abs(v) < 1e-13);
    }
  }

  TEST_CASE("right-hand side matches the analytic expression for rho = 1, u = sin") {
    std::vector<double> hs, er, em;
    for (int n : {64, 128, 256}) {
      const auto g = PeriodicGrid::line(n);
      State s = make_state(g);
      for (std::size_t i = 0; i < g.cell_count(); ++i) {
        s.rho[i] = 1.0;
        s.mom[0][i] = std::sin(2 * pi * g.center(i, 0));
      }
      const State r = rhs(s, base_config(g));
      double e_rho = 0.0, e_mom = 0.0;
      for (std::size_t i = 0; i < g.cell_count(); ++i) {
        const double x = g.center(i, 0);
        // -(u^2)' - (rho^2)' + u'' with rho = 1
        const double dm = -2 * pi * std::sin(4 * pi * x) - 4 * pi * pi * std::sin(2 * pi * x);
        e_rho = std::max(e_rho, std::abs(r.rho[i] + 2 * pi * std::cos(2 * pi * x)));
        e_mom = std::max(e_mom, std::abs(r.mom[0][i] - dm));
      }
      hs.push_back(g.spacing(0));
      er.push_back(e_rho);
      em.push_back(e_mom);
    }
    CHECK(em.back() < 0.05);
    CHECK(oracle::observed_order(hs, er) >= 1.9);
    CHECK(oracle::observed_order(hs, em) >= 1.9);
  }

  TEST_CASE("momentum tendency has zero mean") {
    const auto g = PeriodicGrid::square(32, 32);
    const State r = rhs(bump_state(g), base_config(g));
    for (const auto& c : r.mom) CHECK(std::abs(total(c, g)) < 1e-12);
    CHECK(std::abs(total(r.rho, g)) < 1e-12);
  }

  TEST_CASE("stable_dt plug-in value") {
    const auto g = PeriodicGrid::square(128, 128);
    State s = make_state(g);
    std::fill(s.rho.begin(), s.rho.end(), 1.0);
    const double dx = 1.0 / 128;
    const double expect = 0.4 * std::min(dx / std::sqrt(2.0), dx * dx / (2.0 * 2));
    CHECK(stable_dt(s, base_config(g)) == doctest::Approx(expect).epsilon(1e-15));
  }

  TEST_CASE("stable_dt quarters under refinement at the diffusive limit") {
    auto dt_for = [](int n) {
      const auto g = PeriodicGrid::line(n);
      State s = make_state(g);
      std::fill(s.rho.begin(), s.rho.end(), 1.0);
      return stable_dt(s, base_config(g));
    };
    CHECK(dt_for(512) / dt_for(1024) == doctest::Approx(4.0));
  }

  TEST_CASE("stable_dt shrinks with velocity in the advective limit") {
    const auto g = PeriodicGrid::line(8);
    auto cfg = base_config(g);
    cfg.law = ViscosityLaw::power_sum({{1e-3, 1.0}});
    State s = make_state(g);
    std::fill(s.rho.begin(), s.rho.end(), 0.01);
    std::fill(s.mom[0].begin(), s.mom[0].end(), 0.01 * 1.0);
    const double dt1 = stable_dt(s, cfg);
    for (double& m : s.mom[0]) m *= 10.0;
    const double dt10 = stable_dt(s, cfg);
    const double c = std::sqrt(2.0 * 0.01);
    CHECK(dt1 / dt10 == doctest::Approx((10.0 + c) / (1.0 + c)));
    CHECK(dt1 / dt10 >= 8.0);
  }

  TEST_CASE("stable_dt on an all-vacuum state uses h(eps)/eps") {
    const auto g = PeriodicGrid::line(64);
    auto cfg = base_config(g);
    cfg.eps_vac = 1e-10;
    const State s = make_state(g);
    const double dx = 1.0 / 64;
    CHECK(stable_dt(s, cfg) == doctest::Approx(0.4 * dx * dx / 2.0));
  }

  TEST_CASE("constant state gives a constant trajectory") {
    const auto g = PeriodicGrid::square(16, 16);
    State s = make_state(g);
    std::fill(s.rho.begin(), s.rho.end(), 2.0);
    std::fill(s.mom[0].begin(), s.mom[0].end(), 1.0);
    auto [traj, ledger] = run(base_config(g, 0.005), s);
    CHECK(traj.steps > 0);
    CHECK(traj.final_state.t == 0.005);
    for (std::size_t i = 0; i < s.rho.size(); ++i) {
      CHECK(std::abs(traj.final_state.rho[i] - 2.0) < 1e-14);
      CHECK(std::abs(traj.final_state.mom[0][i] - 1.0) < 1e-14);
      CHECK(traj.final_state.mom[1][i] == 0.0);
    }
    CHECK(ledger.rows.front().energy == doctest::Approx(ledger.rows.back().energy).epsilon(1e-14));
  }

  TEST_CASE("property: conservation, positivity and determinism on a smooth run") {
    for (auto integ : {Integrator::ssp_rk2, Integrator::rk4}) {
      const auto g = PeriodicGrid::square(32, 32);
      auto cfg = base_config(g, 0.01);
      cfg.integrator = integ;
      const State s0 = bump_state(g);
      auto [a, la] = run(cfg, s0);
      auto [b, lb] = run(cfg, s0);
      CHECK(a.final_state.rho == b.final_state.rho);
      CHECK(a.final_state.mom == b.final_state.mom);
      CHECK(a.steps == b.steps);
      const double m0 = total(s0.rho, g);
      CHECK(std::abs(total(a.final_state.rho, g) - m0) <= 1e-12 * m0);
      for (int k = 0; k < 2; ++k) CHECK(std::abs(total(a.final_state.mom[k], g) - total(s0.mom[k], g)) < 1e-12);
      CHECK(a.counters.clamp_events == 0);
      for (std::size_t q = 1; q < a.checkpoints.size(); ++q) CHECK(a.checkpoints[q].t > a.checkpoints[q - 1].t);
      for (double r : a.final_state.rho) CHECK(r > 0.0);
    }
  }

  TEST_CASE("property: serial and OpenMP right-hand sides agree bit for bit") {
    for (const auto& g : {PeriodicGrid::line(97 + 31), PeriodicGrid::square(24, 40)}) {
      State s = bump_state(g);
      for (std::size_t i = 0; i < s.rho.size(); i += 7) {
        s.rho[i] = 0.0;
        for (auto& c : s.mom) c[i] = 0.0;
      }
      const auto law = ViscosityLaw::power_sum({{1.0, 1.0}, {0.5, 2.0}});
      FlowParams p{&law, 2.0, 1e-10};
      RhsWorkspace ws;
      State ref, out;
      rhs_serial(g, p, s, ref, ws);
      for (int threads : {1, 2, 3, 4, 8}) {
        RhsWorkspace ws2;
        rhs_omp(g, p, s, out, ws2, threads);
        CHECK(out.rho == ref.rho);
        CHECK(out.mom == ref.mom);
      }
    }
  }

  TEST_CASE("ledger and checkpoint strides") {
    const auto g = PeriodicGrid::line(32);
    auto cfg = base_config(g, 0.01);
    cfg.ledger_stride = 5;
    cfg.checkpoint_stride = 0;
    auto [traj, ledger] = run(cfg, bump_state(g));
    CHECK(traj.checkpoints.size() == 2);
    CHECK(traj.checkpoints.back().t == 0.01);
    const std::size_t expected = 1 + traj.steps / 5 + (traj.steps % 5 ? 1 : 0);
    CHECK(ledger.rows.size() == expected);
    CHECK(ledger.rows.back().t == 0.01);
  }

  TEST_CASE("non-admissible laws need the override") {
    const auto g = PeriodicGrid::line(32);
    auto cfg = base_config(g, 0.002);
    cfg.law = ViscosityLaw::constant(0.1);
    State s = make_state(g);
    std::fill(s.rho.begin(), s.rho.end(), 1.0);
    CHECK_THROWS_AS(run(cfg, s), ArgumentError);
    cfg.allow_non_admissible = true;
    auto [traj, ledger] = run(cfg, s);
    CHECK_FALSE(traj.admissible);
  }

  TEST_CASE("non-finite data aborts, and dt underflow aborts") {
    const auto g = PeriodicGrid::line(32);
    State s = bump_state(g);
    s.mom[0][4] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(run(base_config(g), s), SolverAbort);
    s = bump_state(g);
    s.rho[2] = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(run(base_config(g), s), ArgumentError);

    auto stiff = base_config(g, 1.0);
    stiff.law = ViscosityLaw::power_sum({{1e12, 1.0}});
    CHECK_THROWS_AS(run(stiff, bump_state(g)), SolverAbort);
  }

  TEST_CASE("momentum on initial vacuum is discarded and counted") {
    const auto g = PeriodicGrid::line(32);
    State s = bump_state(g);
    s.rho[10] = 0.0;
    s.mom[0][10] = 0.5;
    auto cfg = base_config(g, 1e-4);
    auto [traj, ledger] = run(cfg, s);
    CHECK(traj.counters.initial_zeroed == 1);
    CHECK(ledger.rows.front().cutoff_count >= 1);
    for (const auto& cp : traj.checkpoints)
      for (std::size_t i = 0; i < cp.rho.size(); ++i)
        if (cp.rho[i] <= traj.eps_vac) CHECK(cp.mom[0][i] == 0.0);
  }

  TEST_CASE("forcing hook enters the tendency") {
    const auto g = PeriodicGrid::line(16);
    auto cfg = base_config(g);
    cfg.forcing = [](double, const PeriodicGrid&, VectorField& dm) {
      for (double& v : dm[0]) v += 3.0;
    };
    State s = make_state(g);
    std::fill(s.rho.begin(), s.rho.end(), 1.0);
    const State r = rhs(s, cfg);
    for (double v : r.mom[0]) CHECK(v == doctest::Approx(3.0));
  }
}
