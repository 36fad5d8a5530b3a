#include <cmath>
#include <random>

#include "bdns/errors.hpp"
#include "bdns/viscosity_law.hpp"
#include "doctest.h"
#include "support/oracles.hpp"

using namespace bdns;

namespace {
ViscosityLaw quad() { return ViscosityLaw::power_sum({{1.0, 2.0}}); }
ViscosityLaw lin_quad() { return ViscosityLaw::power_sum({{1.0, 1.0}, {1.0, 2.0}}); }
ViscosityLaw lin_cubic() { return ViscosityLaw::power_sum({{1.0, 1.0}, {1.0, 3.0}}); }
}  // namespace

TEST_SUITE("viscosity_law") {
  TEST_CASE("g vanishes for the linear law") {
    for (double r : {0.0, 0.5, 2.0, 1e5}) CHECK(eval_g(ViscosityLaw::linear(), r) == 0.0);
  }

  TEST_CASE("constant law has g = -mu") {
    const auto law = ViscosityLaw::constant(1.7);
    for (double r : {0.0, 0.3, 4.0}) CHECK(eval_g(law, r) == doctest::Approx(-1.7));
    CHECK(eval_h_prime(law, 2.0) == 0.0);
  }

  TEST_CASE("quadratic law: g(3) = 9, cross-checked by finite differences") {
    CHECK(eval_g(quad(), 3.0) == doctest::Approx(9.0).epsilon(1e-15));
    const double fd = oracle::derivative([](double r) { return r * r; }, 3.0);
    CHECK(eval_h_prime(quad(), 3.0) == doctest::Approx(fd).epsilon(1e-10));
    CHECK(3.0 * fd - 9.0 == doctest::Approx(eval_g(quad(), 3.0)).epsilon(1e-10));
  }

  TEST_CASE("negative density is a domain error") {
    CHECK_THROWS_AS(eval_h(ViscosityLaw::linear(), -1e-3), DomainError);
    CHECK_THROWS_AS(eval_h_prime(ViscosityLaw::linear(), -1.0), DomainError);
    CHECK_THROWS_AS(eval_g(ViscosityLaw::linear(), -1.0), DomainError);
    CHECK_THROWS_AS(eval_psi(ViscosityLaw::linear(), -1.0), DomainError);
  }

  TEST_CASE("malformed laws are rejected") {
    CHECK_THROWS_AS(ViscosityLaw::power_sum({}), ArgumentError);
    CHECK_THROWS_AS(ViscosityLaw::power_sum({{-1.0, 1.0}}), ArgumentError);
    CHECK_THROWS_AS(ViscosityLaw::power_sum({{1.0, 0.0}}), ArgumentError);
  }

  TEST_CASE("phi examples") {
    CHECK(eval_phi(ViscosityLaw::linear(), std::exp(1.0), 1.0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(eval_phi(quad(), 3.0, 1.0) == doctest::Approx(4.0).epsilon(1e-15));
    const auto law = lin_quad();
    const double quadrature = oracle::simpson([&](double s) { return (1.0 + 2.0 * s) / s; }, 1.0, 2.0);
    CHECK(quadrature == doctest::Approx(std::log(2.0) + 2.0).epsilon(1e-11));
    CHECK(eval_phi(law, 2.0, 1.0) == doctest::Approx(quadrature).epsilon(1e-11));
    CHECK_THROWS_AS(eval_phi(law, 0.0, 1.0), DomainError);
    CHECK_THROWS_AS(eval_phi(law, 1.0, 0.0), DomainError);
  }

  TEST_CASE("phi is additive and its reference offset cancels in differences") {
    const auto law = lin_cubic();
    const double a = 0.2, b = 1.7, c = 9.0;
    CHECK(eval_phi(law, c, a) == doctest::Approx(eval_phi(law, b, a) + eval_phi(law, c, b)).epsilon(1e-13));
    CHECK(eval_phi(law, c) - eval_phi(law, a) ==
          doctest::Approx(eval_phi(law, c, 3.0) - eval_phi(law, a, 3.0)).epsilon(1e-13));
  }

  TEST_CASE("psi examples") {
    CHECK(eval_psi(ViscosityLaw::linear(), 4.0) == doctest::Approx(4.0).epsilon(1e-15));
    CHECK(eval_psi(ViscosityLaw::linear(), 0.0) == 0.0);
    const double q = oracle::simpson([](double s) { return 2.0 * std::sqrt(s); }, 0.0, 1.0, 1e-13);
    CHECK(q == doctest::Approx(4.0 / 3.0).epsilon(1e-10));
    CHECK(eval_psi(quad(), 1.0) == doctest::Approx(q).epsilon(1e-10));
    CHECK_THROWS_AS(eval_psi(ViscosityLaw::power_sum({{1.0, 0.4}}), 1.0), LawError);
    CHECK(eval_psi(ViscosityLaw::constant(2.0), 3.0) == 0.0);
  }

  TEST_CASE("validator examples") {
    const auto samples = log_spaced_densities();
    CHECK(samples.size() == 601);
    CHECK(samples.front() == doctest::Approx(1e-6));
    CHECK(samples.back() == doctest::Approx(1e6));

    const auto lin = validate(ViscosityLaw::linear(), {0.9, 2.0, 2, 0.1}, samples);
    CHECK(lin.overall);
    CHECK(lin.g_bounded_by_h);

    const auto con = validate(ViscosityLaw::constant(1.0), {0.5, 2.0, 2, 0.1}, samples);
    CHECK_FALSE(con.overall);
    CHECK_FALSE(con.record(Condition::envelope).pass);
    CHECK(con.record(Condition::envelope).margin < 0.0);
    REQUIRE_FALSE(con.notes.empty());
    CHECK(con.notes.back().find("degenerates") != std::string::npos);

    const auto sub = validate(ViscosityLaw::power_sum({{1.0, 2.0 / 3.0}}), {0.1, 2.0, 3, 0.1}, samples);
    CHECK_FALSE(sub.overall);
    CHECK_FALSE(sub.record(Condition::derivative_floor).pass);
    CHECK(sub.record(Condition::derivative_floor).worst_rho == doctest::Approx(1e6));
    // h'(1e6) = (2/3) 1e6^{-1/3} < 0.1
    CHECK(2.0 / 3.0 * std::pow(1e6, -1.0 / 3.0) < 0.1);

    CHECK_THROWS_AS(validate(ViscosityLaw::linear(), {}, {}), ArgumentError);
  }

  TEST_CASE("growth condition applies only for N = 3 and gamma >= 3") {
    const auto samples = log_spaced_densities();
    const auto off = validate(ViscosityLaw::linear(), {0.5, 2.0, 3, 0.2}, samples);
    CHECK_FALSE(off.record(Condition::growth).applicable);
    const auto on = validate(ViscosityLaw::linear(), {0.5, 3.5, 3, 0.2}, samples);
    CHECK(on.record(Condition::growth).applicable);
    CHECK_FALSE(on.record(Condition::growth).pass);
    CHECK_FALSE(on.overall);
    CHECK(on.growth_slope == doctest::Approx(1.0).epsilon(1e-9));
    const auto cubic = validate(lin_cubic(), {0.2, 3.5, 3, 0.2}, samples);
    CHECK(cubic.record(Condition::growth).pass);
  }

  TEST_CASE("condition labels") {
    CHECK(condition_label(Condition::derivative_floor) == "(8)");
    CHECK(condition_label(Condition::derivative_ratio) == "(9)");
    CHECK(condition_label(Condition::envelope) == "(10)");
    CHECK(condition_label(Condition::growth) == "(12)");
  }

  TEST_CASE("bisection finds a feasible nu for power-sum laws") {
    const auto samples = log_spaced_densities();
    for (const auto& law : {ViscosityLaw::linear(), lin_quad(), lin_cubic(), quad()}) {
      AdmissibilityParams p{0.5, 2.0, 2, 0.1};
      const auto nu = largest_feasible_nu(law, p, samples);
      REQUIRE(nu.has_value());
      p.nu = *nu;
      CHECK(validate(law, p, samples).overall);
      if (*nu < 0.999) {
        p.nu = std::min(0.999999, *nu * 1.01);
        CHECK_FALSE(validate(law, p, samples).overall);
      }
    }
    CHECK_FALSE(largest_feasible_nu(ViscosityLaw::constant(1.0), {0.5, 2.0, 2, 0.1}, samples).has_value());
  }

  TEST_CASE("growth envelope examples") {
    const AdmissibilityParams p2{0.9, 2.0, 2, 0.1};
    auto e = growth_envelope(ViscosityLaw::linear(), p2, 1.0);
    CHECK(e.lower == doctest::Approx(1.0));
    CHECK(e.upper == doctest::Approx(1.0));
    e = growth_envelope(ViscosityLaw::linear(), p2, 4.0);
    CHECK(e.lower == doctest::Approx(std::pow(4.0, 0.95)));
    CHECK(e.upper == doctest::Approx(std::pow(4.0, 0.5 + 1.0 / 1.8)));
    CHECK(e.lower <= 4.0);
    CHECK(4.0 <= e.upper);
    const AdmissibilityParams p3{0.5, 2.0, 3, 0.1};
    e = growth_envelope(ViscosityLaw::linear(), p3, 0.25);
    CHECK(e.lower == doctest::Approx(std::pow(0.25, 2.0 / 3.0 + 2.0 / 3.0)));
    CHECK(e.upper == doctest::Approx(std::pow(0.25, 2.0 / 3.0 + 1.0 / 6.0)));
    CHECK(e.lower <= 0.25);
    CHECK(0.25 <= e.upper);
    CHECK_THROWS_AS(growth_envelope(ViscosityLaw::linear(), p3, 0.0), DomainError);
  }

  TEST_CASE("property: structural relation g + h = rho h' to machine precision") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> logr(-6.0, 6.0);
    for (const auto& law : {ViscosityLaw::linear(), lin_quad(), lin_cubic(), ViscosityLaw::power_sum({{0.3, 1.5}, {2.0, 2.5}})})
      for (int k = 0; k < 200; ++k) {
        const double r = std::pow(10.0, logr(rng));
        const double lhs = eval_g(law, r) + eval_h(law, r);
        const double rhs = r * eval_h_prime(law, r);
        CHECK(std::abs(lhs - rhs) <= 4e-16 * std::max(1.0, std::abs(rhs)));
      }
  }

  TEST_CASE("property: phi' = h'/rho and psi' = h'/sqrt(rho) at random densities") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> dist(0.05, 20.0);
    const auto law = ViscosityLaw::power_sum({{1.0, 1.0}, {0.5, 2.5}});
    for (int k = 0; k < 100; ++k) {
      const double r = dist(rng);
      const double hstep = 1e-3 * r;
      const double dphi = oracle::derivative([&](double s) { return eval_phi(law, s); }, r, hstep);
      const double dpsi = oracle::derivative([&](double s) { return eval_psi(law, s); }, r, hstep);
      CHECK(dphi == doctest::Approx(eval_h_prime(law, r) / r).epsilon(1e-9));
      CHECK(dpsi == doctest::Approx(eval_h_prime(law, r) / std::sqrt(r)).epsilon(1e-9));
    }
  }

  TEST_CASE("property: logarithmic derivative bracket for validated laws") {
    const auto samples = log_spaced_densities();
    for (const auto& law : {ViscosityLaw::linear(), lin_quad(), lin_cubic()})
      for (int n_dim : {1, 2, 3}) {
        AdmissibilityParams p{0.5, 2.0, n_dim, 0.1};
        const auto nu = largest_feasible_nu(law, p, samples);
        REQUIRE(nu.has_value());
        p.nu = *nu;
        for (double r : samples) {
          const double ratio = eval_h_prime(law, r) / eval_h(law, r);
          CHECK(ratio >= (n_dim - 1 + p.nu) / (n_dim * r) * (1 - 1e-6));
          CHECK(ratio <= (n_dim - 1 + 1 / p.nu) / (n_dim * r) * (1 + 1e-6));
        }
      }
  }

  TEST_CASE("property: envelope brackets h for validated laws") {
    const auto samples = log_spaced_densities(1e-4, 1e4, 81);
    for (const auto& law : {ViscosityLaw::linear(), lin_quad(), lin_cubic()}) {
      AdmissibilityParams p{0.5, 2.0, 2, 0.1};
      p.nu = *largest_feasible_nu(law, p, log_spaced_densities());
      for (double r : samples) {
        const auto e = growth_envelope(law, p, r);
        CHECK(e.lower <= eval_h(law, r) * (1 + 1e-9));
        CHECK(eval_h(law, r) <= e.upper * (1 + 1e-9));
      }
    }
  }
}
