#include <cmath>
#include <filesystem>
#include <fstream>

#include "bdns/checkpoint.hpp"
#include "bdns/errors.hpp"
#include "bdns/harness.hpp"
#include "doctest.h"

using namespace bdns;
using nlohmann::json;

namespace {

SolverConfig study_config(int n, double t_end) {
  SolverConfig c;
  c.grid = PeriodicGrid::line(n);
  c.params = {0.5, 2.0, 1, 0.1};
  c.t_end = t_end;
  c.ledger_stride = 10;
  c.checkpoint_stride = 10;
  return c;
}

double l32(const State& a, const State& b, const PeriodicGrid& g) {
  ScalarField d(a.rho.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = a.rho[i] - b.rho[i];
  return lp_norm(d, g, 1.5);
}

}  // namespace

TEST_SUITE("harness") {
  TEST_CASE("presets") {
    const auto g1 = PeriodicGrid::line(64);
    const auto g2 = PeriodicGrid::square(32, 32);
    for (const auto& name : preset_names()) {
      const auto& g = name == "saint_venant_demo" ? g2 : g1;
      const Profile p = make_profile(name, json::object(), g);
      CHECK(p.rho.size() == g.cell_count());
      for (double r : p.rho) CHECK(r >= 0.0);
    }
    const Profile vac = make_profile("vacuum_bump", json::object(), g1);
    CHECK(std::count(vac.rho.begin(), vac.rho.end(), 0.0) > 0);
    const Profile c = make_profile("constant", json{{"rho", 2.0}, {"u", {0.5, -1.0}}}, g2);
    CHECK(c.rho[5] == 2.0);
    CHECK(c.u[1][7] == -1.0);
    const State s = state_from_profile(c, g2);
    CHECK(s.mom[0][3] == 1.0);
    CHECK_THROWS_AS(make_profile("nope", json::object(), g1), ArgumentError);
    CHECK_THROWS_AS(make_profile("saint_venant_demo", json::object(), g1), ArgumentError);
    CHECK_THROWS_AS(make_profile("smooth_bump", json{{"base", "x"}}, g1), ArgumentError);
    const Profile r1 = make_profile("random_band_limited", json{{"seed", 4}}, g2);
    const Profile r2 = make_profile("random_band_limited", json{{"seed", 4}}, g2);
    CHECK(r1.rho == r2.rho);
    CHECK(r1.u == r2.u);
  }

  TEST_CASE("constant base gives identical members") {
    const auto g = PeriodicGrid::line(64);
    InitialDataSpec spec{"constant", json{{"rho", 1.0}}, 0.05, 3};
    const auto seq = generate_sequence(spec, g, ViscosityLaw::linear(), 2.0, 0.05, 1e-10);
    REQUIRE(seq.states.size() == 4);
    for (const auto& s : seq.states) {
      CHECK(s.rho == seq.states[0].rho);
      CHECK(s.mom == seq.states[0].mom);
    }
    CHECK(seq.hypotheses[3].l1_to_base == 0.0);
  }

  TEST_CASE("vacuum bump sequence keeps rho >= 0 and a finite BD integral") {
    const auto g = PeriodicGrid::line(256);
    InitialDataSpec spec{"vacuum_bump", json{{"velocity", 0.2}}, 0.02, 4};
    const auto seq = generate_sequence(spec, g, ViscosityLaw::linear(), 2.0, 0.05, 1e-10);
    for (std::size_t n = 0; n < seq.states.size(); ++n) {
      for (double r : seq.states[n].rho) CHECK(r >= 0.0);
      CHECK(std::isfinite(seq.hypotheses[n].bd_gradient));
      for (std::size_t i = 0; i < g.cell_count(); ++i)
        if (seq.states[n].rho[i] < 1e-10) CHECK(seq.states[n].mom[0][i] == 0.0);
    }
    CHECK(seq.flags.empty());
  }

  TEST_CASE("initial distances between consecutive members decrease") {
    const auto g = PeriodicGrid::line(256);
    InitialDataSpec spec{"smooth_bump", json{{"velocity", 0.3}}, 0.02, 4};
    const auto seq = generate_sequence(spec, g, ViscosityLaw::linear(), 2.0, 0.05, 1e-10);
    for (int n = 0; n + 2 < 5; ++n)
      CHECK(l32(seq.states[n + 1], seq.states[n + 2], g) < l32(seq.states[n], seq.states[n + 1], g));
    for (int n = 0; n + 1 < 5; ++n) CHECK(seq.hypotheses[n + 1].l1_to_base < seq.hypotheses[n].l1_to_base);
  }

  TEST_CASE("hypothesis gate rejects non-finite functionals") {
    const auto g = PeriodicGrid::line(64);
    // An exact vacuum is left untouched by the mollifier, and h' blows up there.
    InitialDataSpec spec{"constant", json{{"rho", 0.0}}, 0.02, 1};
    const auto law = ViscosityLaw::power_sum({{1.0, 0.6}});
    CHECK_THROWS_AS(generate_sequence(spec, g, law, 2.0, 0.05, 1e-10), GenerationError);
    try {
      generate_sequence(spec, g, law, 2.0, 0.05, 1e-10);
    } catch (const GenerationError& e) {
      CHECK(std::string(e.what()).find("bd_gradient") != std::string::npos);
    }
    CHECK_THROWS_AS(generate_sequence({"smooth_bump", json::object(), 0.0, 1}, g, ViscosityLaw::linear(), 2.0, 0.05, 1e-10), ArgumentError);
  }

  TEST_CASE("single-member study has a 1x1 zero matrix") {
    const auto st = run_study({"smooth_bump", json::object(), 0.02, 0}, study_config(32, 0.002));
    REQUIRE(st.d_rho.size() == 1);
    CHECK(st.d_rho[0][0] == 0.0);
    CHECK(st.d_u[0][0] == 0.0);
    CHECK(st.d_m[0][0] == 0.0);
    CHECK_FALSE(st.partial);
  }

  TEST_CASE("property: studies are deterministic and satisfy the metric axioms") {
    const InitialDataSpec spec{"smooth_bump", json{{"velocity", 0.3}}, 0.03, 3};
    const auto a = run_study(spec, study_config(64, 0.005));
    const auto b = run_study(spec, study_config(64, 0.005));
    CHECK(a.d_rho == b.d_rho);
    CHECK(a.d_u == b.d_u);
    CHECK(a.d_m == b.d_m);
    CHECK(a.metric_axioms);
    CHECK(a.surviving.size() == 4);
    CHECK(a.bound_suprema.size() == 9);
  }

  TEST_CASE("vacuum study keeps momentum off the vacuum set") {
    const auto st = run_study({"vacuum_bump", json{{"velocity", 0.2}}, 0.02, 2}, study_config(128, 0.002));
    REQUIRE(st.surviving.size() == 3);
    for (int n : st.surviving) CHECK(st.members[n].vacuum_ratio <= 1e-8);
  }

  TEST_CASE("aborting members make the study partial") {
    auto cfg = study_config(32, 1.0);
    cfg.law = ViscosityLaw::power_sum({{1e12, 1.0}});
    const auto st = run_study({"smooth_bump", json::object(), 0.02, 1}, cfg);
    CHECK(st.partial);
    CHECK(st.surviving.empty());
    for (const auto& m : st.members) CHECK_FALSE(m.error.empty());
    const auto j = to_json(st, {});
    CHECK(j["partial"].get<bool>());
  }

  TEST_CASE("metric axiom checker") {
    CHECK(metric_axioms_hold({{0, 1, 2}, {1, 0, 1}, {2, 1, 0}}));
    CHECK_FALSE(metric_axioms_hold({{0, 1, 3}, {1, 0, 1}, {3, 1, 0}}));
    CHECK_FALSE(metric_axioms_hold({{0, 1}, {2, 0}}));
    CHECK_FALSE(metric_axioms_hold({{1e-3, 1}, {1, 0}}));
  }

  TEST_CASE("linear interpolation between checkpoints") {
    const auto g = PeriodicGrid::line(8);
    State a = make_state(g), b = make_state(g);
    b.t = 1.0;
    std::fill(b.rho.begin(), b.rho.end(), 4.0);
    const State m = interpolate_state({a, b}, 0.25);
    CHECK(m.rho[3] == doctest::Approx(1.0));
    CHECK(interpolate_state({a, b}, 2.0).rho[0] == 4.0);
  }

  TEST_CASE("config parsing") {
    const json j = {{"law", {{"terms", {{1.0, 1.0}, {0.5, 2.0}}}}},
                    {"nu", 0.4},
                    {"gamma", 1.4},
                    {"dim", 2},
                    {"cells", {32, 16}},
                    {"lengths", 2.0},
                    {"integrator", "rk4"},
                    {"ledger_stride", 3},
                    {"initial", {{"preset", "smooth_bump"}, {"amplitude", 0.2}}},
                    {"study", {{"sigma0", 0.01}, {"n_max", 2}}}};
    const RunConfig rc = parse_config(j);
    CHECK(rc.solver.law.terms().size() == 2);
    CHECK(rc.solver.params.nu == 0.4);
    CHECK(rc.solver.grid.sizes[0] == 32);
    CHECK(rc.solver.grid.sizes[1] == 16);
    CHECK(rc.solver.grid.lengths[1] == 2.0);
    CHECK(rc.solver.integrator == Integrator::rk4);
    CHECK(rc.initial.params["amplitude"] == 0.2);
    CHECK(rc.initial.n_max == 2);
    CHECK(law_to_json(rc.solver.law) == j["law"]);
    CHECK(parse_law(json{{"constant", 2.0}}).is_constant());

    CHECK_THROWS_AS(parse_config(json{{"bogus", 1}}), ArgumentError);
    CHECK_THROWS_AS(parse_config(json{{"integrator", "euler"}}), ArgumentError);
    CHECK_THROWS_AS(parse_config(json{{"dim", 3}}), ArgumentError);
    CHECK_THROWS_AS(parse_config(json{{"cells", "x"}}), ArgumentError);
    CHECK_THROWS_AS(parse_law(json{{"terms", {{1.0}}}}), ArgumentError);
    CHECK_THROWS_AS(load_config("/nonexistent/cfg.json"), ArgumentError);
  }

  TEST_CASE("initial state from a checkpoint") {
    const auto dir = std::filesystem::temp_directory_path() / "bdns_harness_ckpt";
    std::filesystem::create_directories(dir);
    RunConfig rc = parse_config(json{{"dim", 1}, {"cells", 16}, {"initial", {{"preset", "smooth_bump"}}}});
    const State s = initial_state(rc);
    write_checkpoint((dir / "a.bdns").string(), rc.solver.grid, s);
    RunConfig rc2 = parse_config(json{{"dim", 1}, {"cells", 16}, {"initial", {{"checkpoint", (dir / "a.bdns").string()}}}});
    CHECK(initial_state(rc2).rho == s.rho);
    RunConfig rc3 = parse_config(json{{"dim", 1}, {"cells", 32}, {"initial", {{"checkpoint", (dir / "a.bdns").string()}}}});
    CHECK_THROWS_AS(initial_state(rc3), ArgumentError);
  }
}
