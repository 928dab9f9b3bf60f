#include <doctest.h>

#include <cmath>

#include "breakaway/errors.hpp"
#include "breakaway/flat_strategy.hpp"

using namespace breakaway;

namespace {

StrategyProblem problem(double energy, double beta) {
    StrategyProblem p;
    p.energy_budget = energy;
    p.risk_index = beta;
    return p;
}

}  // namespace

// Oracle values from an independent scipy implementation of the same model.
TEST_SUITE("flat_strategy") {

TEST_CASE("critical risk index") {
    CHECK(critical_risk(problem(1.2, 0.5)) == doctest::Approx(0.09485708748276184).epsilon(1e-12));
}

TEST_CASE("attack geometry") {
    const auto p = problem(1.2, 0.5);
    CHECK(min_attack_position(p) == doctest::Approx((1.43 - 1.2) / (1.43 - 0.46)).epsilon(1e-14));
    CHECK(earliest_attack_position(1.43 * (1.0 + 1e-12), p) ==
          doctest::Approx(min_attack_position(p)).epsilon(1e-9));
    CHECK_THROWS_AS(earliest_attack_position(1.43, p), InfeasibleError);
    const double x = 0.6;
    const double pa = attack_power(x, p);
    CHECK(0.46 * x + pa * (1.0 - x) * std::cbrt(1.43 / pa) == doctest::Approx(1.2).epsilon(1e-13));
    CHECK_THROWS_AS(attack_power(0.1, p), InfeasibleError);
}

TEST_CASE("time gap matches the closed form") {
    const auto p = problem(1.2, 0.5);
    for (double x : {0.3, 0.5, 0.7, 0.9}) {
        const double expected =
            1.0 - x - std::pow(1.0 - x, 1.5) * std::sqrt(1.43) / std::sqrt(1.2 - 0.46 * x);
        CHECK(time_gap_from_position(x, p) == doctest::Approx(expected).epsilon(1e-12));
    }
    CHECK(time_gap_from_position(0.1, p) == 0.0);
    CHECK(time_gap_from_position(1.0, p) == 0.0);
}

TEST_CASE("optimal attacks at E = 1.2") {
    const auto low = optimal_attack(problem(1.2, 0.05));
    CHECK(low.branch == Branch::boundary);
    CHECK(low.attack_position == doctest::Approx(0.23711340206185566).epsilon(1e-10));

    const auto mid = optimal_attack(problem(1.2, 0.5));
    CHECK(mid.branch == Branch::interior);
    CHECK(mid.attack_position == doctest::Approx(0.66441).epsilon(2e-5));
    CHECK(mid.objective == doctest::Approx(-0.019742469134660625).epsilon(1e-9));

    const auto all_in = optimal_attack(problem(1.2, 1.0));
    CHECK(all_in.attack_position == doctest::Approx(0.69479).epsilon(2e-5));
    CHECK(all_in.time_gap == doctest::Approx(0.09031466950805878).epsilon(1e-9));
}

TEST_CASE("stationarity cubic root reproduces the interior optimum") {
    const auto p = problem(1.2, 0.5);
    const auto cubic = stationarity_cubic(p);
    const auto opt = interior_optimum(p);
    REQUIRE(opt.has_value());
    CHECK(std::fabs(cubic.residual(opt->eta)) < 1e-12);
    CHECK(optimal_attack(p).attack_position == doctest::Approx(opt->attack_position).epsilon(1e-12));
}

TEST_CASE("below the lurking budget nobody wins") {
    const auto r = optimal_attack(problem(0.4, 0.5));
    CHECK(r.branch == Branch::no_win);
    CHECK(r.time_gap == 0.0);
    CHECK(r.objective == doctest::Approx(0.5 * 2.0 / 75.0 * 2.3328755442691183).epsilon(1e-12));
}

TEST_CASE("win frontier") {
    const auto rich = win_frontier(problem(1.5, 0.5));
    CHECK(rich.energy_min == 0.46);
    REQUIRE(rich.risk_min.has_value());
    CHECK(*rich.risk_min == 0.0);
    const auto mid = win_frontier(problem(1.2, 0.5));
    REQUIRE(mid.risk_min.has_value());
    CHECK(*mid.risk_min == doctest::Approx(0.09485708748276184).epsilon(1e-12));
    CHECK(!win_frontier(problem(0.3, 0.5)).risk_min.has_value());
}

TEST_CASE("input validation") {
    CHECK_THROWS_AS(problem(1.2, 1.5).validate(), DomainError);
    auto p = problem(1.2, 0.5);
    p.cd_lurk = 2.0;
    CHECK_THROWS_AS(p.validate(), DomainError);
}

}
