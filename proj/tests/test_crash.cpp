#include <doctest.h>

#include <cmath>

#include "breakaway/crash.hpp"
#include "breakaway/errors.hpp"

using namespace breakaway;

TEST_SUITE("crash") {

TEST_CASE("geometric involvement factor") {
    CHECK(involvement_ratio(5.0, 0.5) == doctest::Approx(2.3328755442691183).epsilon(1e-14));
    CHECK(involvement_ratio(1.0, 0.5) == doctest::Approx(1.0));
    CHECK(involvement_given_crash(5.0, 0.5, 75) ==
          doctest::Approx(2.3328755442691183 / 75.0).epsilon(1e-14));
    // Tiny omega: every rider ahead drags you in.
    CHECK(involvement_ratio(5.0, 1e-12) == doctest::Approx(5.0).epsilon(1e-9));
}

TEST_CASE("propagation probability") {
    CHECK(propagation_prob(5.0, 3.0, 0.5) == doctest::Approx(std::exp(-1.0)));
    CHECK(propagation_prob(3.0, 5.0, 0.5) == 0.0);
}

TEST_CASE("exposure of a simple attack") {
    const CrashModel m{};
    const double expected = 2.0 / 75.0 * (0.5 * 2.3328755442691183 + 0.5);
    CHECK(exposure_simple(0.5, 5.0, m) == doctest::Approx(expected).epsilon(1e-14));
    CHECK(exposure_simple(0.0, 5.0, m) == doctest::Approx(2.0 / 75.0));
    const auto trace = PositionTrace::simple_attack(5.0, 0.5);
    CHECK(exposure(trace, m) == doctest::Approx(expected).epsilon(1e-14));
    CHECK(exposure_general(trace, m) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("general exposure accepts a custom start distribution and kernel") {
    CrashModel m{};
    m.n_riders = 3;
    m.start_distribution = {1.0, 0.0, 0.0};  // crashes always start at the front
    m.kernel = [](double i, int k) { return i == k ? 1.0 : (i > k ? 0.5 : 0.0); };
    const auto trace = PositionTrace::constant(2.0);
    CHECK(exposure_general(trace, m) == doctest::Approx(2.0 * 0.5));
}

TEST_CASE("position trace lookups") {
    const PositionTrace t({{0.0, 5.0}, {0.3, 2.0}, {0.8, 1.0}});
    CHECK(t.at(0.1) == 5.0);
    CHECK(t.at(0.3) == 2.0);
    CHECK(t.at(0.95) == 1.0);
    CHECK(t.length(1) == doctest::Approx(0.5));
    CHECK_THROWS_AS(PositionTrace({{0.1, 5.0}}), DomainError);
}

TEST_CASE("Monte Carlo is reproducible and thread-count independent") {
    const CrashModel m{};
    const auto trace = PositionTrace::simple_attack(5.0, 0.4);
    const auto a = monte_carlo_exposure(trace, m, 200000, 99, 1);
    const auto b = monte_carlo_exposure(trace, m, 200000, 99, 4);
    CHECK(a.estimate == b.estimate);
    CHECK(a.standard_error == b.standard_error);
    const double exact = exposure_simple(0.4, 5.0, m);
    CHECK(std::fabs(a.estimate - exact) < 4.0 * a.standard_error);
}

TEST_CASE("Monte Carlo limits") {
    CrashModel none{};
    none.intensity = 0.0;
    const auto trace = PositionTrace::simple_attack(5.0, 0.5);
    const auto z = monte_carlo_exposure(trace, none, 1000, 1);
    CHECK(z.estimate == 0.0);
    CHECK(z.standard_error == 0.0);
    CrashModel local{};
    local.omega = 10.0;
    CHECK(exposure_simple(0.5, 5.0, local) == doctest::Approx(2.0 / 75.0).epsilon(1e-4));
}

}
