#include <doctest.h>

#include <cmath>

#include "breakaway/errors.hpp"
#include "breakaway/fatigue.hpp"

using namespace breakaway;

namespace {

StrategyProblem problem(double energy, double beta) {
    StrategyProblem p;
    p.energy_budget = energy;
    p.risk_index = beta;
    return p;
}

}  // namespace

// Optima below come from an independent scipy implementation (quad + brentq +
// bounded scalar minimization).
TEST_SUITE("fatigue") {

TEST_CASE("budget inversion and kinematics") {
    CHECK(p_max_from_budget(1.25, 0.6, 0.93, 0.46, 0.46, 2.0) ==
          doctest::Approx(3.8635072792139336).epsilon(1e-12));
    FatigueParams f;
    f.p_max = 5.0;
    f.mu = 2.0;
    f.attack_time = 0.6;
    CHECK(position_after_attack(0.9, f, 1.43) == doctest::Approx(1.0171370939344593).epsilon(1e-11));
    CHECK(power_at(0.3, f) == 0.46);
    CHECK(power_at(0.6, f) == doctest::Approx(5.0));
}

TEST_CASE("energy round trip") {
    for (double mu : {1e-3, 0.5, 4.0, 20.0}) {
        FatigueParams f;
        f.mu = mu;
        f.attack_time = 0.55;
        f.p_max = p_max_from_budget(1.3, 0.55, 0.92, f.p_lurk, f.p_sustain, mu);
        CHECK(total_energy(0.55, 0.92, f) == doctest::Approx(1.3).epsilon(1e-12));
    }
    CHECK(p_max_from_budget(0.46 * 0.9, 0.5, 0.9, 0.46, 0.46, 1.0) == doctest::Approx(0.46));
    CHECK_THROWS_AS(p_max_from_budget(0.3, 0.5, 0.9, 0.46, 0.46, 1.0), InfeasibleError);
}

TEST_CASE("attack solve satisfies both equations") {
    const auto p = problem(1.25, 0.5);
    const auto s = solve_attack(0.6, p, 2.0, 0.46);
    REQUIRE(s.has_value());
    FatigueParams f;
    f.p_max = s->peak_power;
    f.mu = 2.0;
    f.attack_time = 0.6;
    CHECK(total_energy(0.6, s->finish_time, f) == doctest::Approx(1.25).epsilon(1e-11));
    CHECK(position_after_attack(s->finish_time, f, 1.43) == doctest::Approx(1.0).epsilon(1e-11));
    CHECK(!solve_attack(0.01, problem(0.5, 0.5), 2.0, 0.46).has_value());
}

TEST_CASE("optimal fatigue attacks") {
    const auto a = optimize_fatigue(problem(1.25, 0.5), 1.0);
    CHECK(a.branch == Branch::interior);
    CHECK(a.converged);
    CHECK(a.attack_position == doctest::Approx(0.6436831216183073).epsilon(1e-6));
    CHECK(a.peak_power == doctest::Approx(4.0954578770920556).epsilon(1e-6));
    CHECK(a.finish_time == doctest::Approx(0.9042880511450659).epsilon(1e-6));
    CHECK(a.objective == doctest::Approx(-0.02308331454661574).epsilon(1e-9));

    const auto b = optimize_fatigue(problem(1.25, 0.5), 10.0);
    CHECK(b.attack_position == doctest::Approx(0.7263187720958033).epsilon(1e-6));
    CHECK(b.peak_power == doctest::Approx(10.302235877140777).epsilon(1e-6));

    const auto c = optimize_fatigue(problem(1.2, 0.8), 3.0);
    CHECK(c.attack_position == doctest::Approx(0.6975929807206764).epsilon(1e-6));
    CHECK(c.peak_power == doctest::Approx(5.422074958422927).epsilon(1e-6));
}

TEST_CASE("vanishing fatigue recovers the flat optimum") {
    for (double beta : {0.05, 0.3, 0.8}) {
        const auto flat = optimal_attack(problem(1.2, beta));
        const auto tired = optimize_fatigue(problem(1.2, beta), 1e-4);
        CHECK(tired.attack_position == doctest::Approx(flat.attack_position).epsilon(2e-3));
    }
}

TEST_CASE("budget below the lurking cost never wins") {
    const auto r = optimize_fatigue(problem(0.4, 0.5), 1.0);
    CHECK(r.branch == Branch::no_win);
    CHECK(r.time_gap == 0.0);
}

TEST_CASE("validation") {
    FatigueParams f;
    f.mu = -1.0;
    CHECK_THROWS_AS(f.validate(), DomainError);
}

}
