#include <doctest.h>

#include <cmath>
#include <sstream>

#include "breakaway/errors.hpp"
#include "breakaway/terrain.hpp"

using namespace breakaway;

namespace {

ScaleSet scales(double eps, double gamma = 38.91) {
    ScaleSet s;
    s.inertia = eps;
    s.gravity_ratio = gamma;
    s.mass_ratio = 1.0;
    return s;
}

double flat_gap(double x_a, double p_a) { return (1.0 - x_a) * (1.0 - std::cbrt(1.43 / p_a)); }

// Plain bisection, kept separate from the library's cubic solver.
double bisect_speed(double power, double grade_force) {
    double lo = 0.0;
    double hi = 10.0;
    for (int k = 0; k < 200; ++k) {
        const double mid = 0.5 * (lo + hi);
        (mid * mid * mid + grade_force * mid - power > 0.0 ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

TEST_SUITE("terrain") {

TEST_CASE("course profiles") {
    const auto flat = CourseProfile::flat();
    CHECK(flat.height(0.3) == 0.0);
    CHECK(flat.slope(0.3) == 0.0);
    const auto grade = CourseProfile::constant_grade(0.01);
    CHECK(grade.slope(0.7) == doctest::Approx(0.01));
    CHECK(steepness(grade, 0.2) == doctest::Approx(std::atan(0.01)));
    const auto hilly = CourseProfile::hilly_demo();
    const double h = 1e-6;
    CHECK(hilly.slope(0.37) ==
          doctest::Approx((hilly.height(0.37 + h) - hilly.height(0.37 - h)) / (2 * h)).epsilon(1e-6));
}

TEST_CASE("course table parsing") {
    std::istringstream good("x,h\n0,0\n0.25,0.001\n# comment\n0.5,0.002\n1,0\n");
    const auto t = CourseProfile::parse_table(good);
    CHECK(t.height(0.25) == doctest::Approx(0.001));
    CHECK(t.height(1.0) == doctest::Approx(0.0));

    std::istringstream bad("x,h\n0,0\n0.5,oops\n0.7,0\n1,0\n");
    try {
        CourseProfile::parse_table(bad);
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 3);
    }
    std::istringstream short_range("0.1,0\n0.4,0\n0.6,0\n1,0\n");
    CHECK_THROWS_AS(CourseProfile::parse_table(short_range), ParseError);
    std::istringstream backwards("0,0\n0.5,0\n0.4,0\n1,0\n");
    CHECK_THROWS_AS(CourseProfile::parse_table(backwards), ParseError);
}

TEST_CASE("quasi-steady speed on a grade") {
    const double v = quasi_steady_speed_on_grade(1.0, 1.0, 1.0, 38.91, std::sin(std::atan(0.01)));
    CHECK(v == doctest::Approx(bisect_speed(1.0, 38.91 * std::sin(std::atan(0.01)))).epsilon(1e-12));
    CHECK(quasi_steady_speed_on_grade(8.0, 1.0, 1.0, 0.0, 0.0) == doctest::Approx(2.0));
}

TEST_CASE("peloton on flat and constant grades") {
    CHECK(simulate_peloton(CourseProfile::flat(), scales(0.0)).finish_time ==
          doctest::Approx(1.0).epsilon(1e-12));
    const auto inertial = simulate_peloton(CourseProfile::flat(), scales(1e-4));
    CHECK(inertial.finish_time == doctest::Approx(1.0).epsilon(1e-6));
    const double s = std::sin(std::atan(0.02));
    const auto climb = simulate_peloton(CourseProfile::constant_grade(0.02), scales(0.0));
    CHECK(climb.finish_time == doctest::Approx(1.0 / bisect_speed(1.0, 38.91 * s)).epsilon(1e-9));
}

TEST_CASE("flat breakaway reproduces the closed-form gap") {
    const RiderSpec rider{};
    for (double x_a : {0.4, 0.7}) {
        for (double p_a : {2.0, 3.6}) {
            const auto r = simulate_breakaway(x_a, PowerProfile::constant(p_a), rider,
                                              CourseProfile::flat(), scales(1e-4));
            CHECK(r.time_gap == doctest::Approx(flat_gap(x_a, p_a)).epsilon(1e-4));
            CHECK(!r.caught);
            // Bookkeeping: lurking until x_a then the attack power.
            const double t_f = r.rider.finish_time;
            CHECK(r.rider_energy == doctest::Approx(0.46 * x_a + p_a * (t_f - x_a)).epsilon(1e-3));
        }
    }
}

TEST_CASE("energy audit along the trajectory") {
    const auto r = simulate_breakaway(0.5, PowerProfile::constant(3.6), RiderSpec{},
                                      CourseProfile::hilly_demo(), scales(0.005));
    const auto& tr = r.rider;
    double trapezoid = 0.0;
    for (std::size_t k = 1; k < tr.size(); ++k) {
        trapezoid += 0.5 * (tr.powers[k] + tr.powers[k - 1]) * (tr.times[k] - tr.times[k - 1]);
    }
    CHECK(tr.cumulative_energy.back() == doctest::Approx(trapezoid).epsilon(1e-5));
    CHECK(r.rider_energy == doctest::Approx(tr.cumulative_energy.back()));
}

TEST_CASE("hilly demo attack wins") {
    TerrainSettings settings;
    settings.estimate_error = true;
    const auto r = simulate_breakaway(0.5, PowerProfile::constant(3.6), RiderSpec{},
                                      CourseProfile::hilly_demo(), scales(0.005), settings);
    CHECK(r.time_gap > 0.0);
    CHECK(r.rider.finish_time < r.peloton.finish_time);
    CHECK(r.peloton.finish_time_error < 1e-6);
}

TEST_CASE("implicit and explicit modes agree") {
    TerrainSettings bdf;
    bdf.ode.method = ode::Method::implicit_bdf2;
    bdf.ode.tolerance = {1e-10, 1e-9, 200, 1.6};
    const auto a = simulate_breakaway(0.5, PowerProfile::constant(3.6), RiderSpec{},
                                      CourseProfile::hilly_demo(), scales(0.005));
    const auto b = simulate_breakaway(0.5, PowerProfile::constant(3.6), RiderSpec{},
                                      CourseProfile::hilly_demo(), scales(0.005), bdf);
    CHECK(b.time_gap == doctest::Approx(a.time_gap).epsilon(1e-4));
}

TEST_CASE("no attack and caught attacks give no gap") {
    const auto none = simulate_breakaway(1.0, PowerProfile::constant(3.6), RiderSpec{},
                                         CourseProfile::hilly_demo(), scales(0.005));
    CHECK(none.time_gap == 0.0);
    const auto weak = simulate_breakaway(0.3, PowerProfile::constant(1.0), RiderSpec{},
                                         CourseProfile::flat(), scales(1e-3));
    CHECK(weak.caught);
    CHECK(weak.time_gap == 0.0);
}

TEST_CASE("lurking power") {
    CHECK(lurking_power_at(1.0, 0.46, 1.0) == doctest::Approx(0.46));
    CHECK(lurking_power_at(0.9, 0.46, 1.0) == doctest::Approx(1.0 - 0.54 * 0.729));
    CHECK(lurking_power_at(2.0, 0.46, 1.0) == 0.0);
}

TEST_CASE("stalls and invalid input") {
    CHECK_THROWS_AS(simulate_breakaway(1.5, PowerProfile::constant(1.0), RiderSpec{},
                                       CourseProfile::flat(), scales(0.0)),
                    DomainError);
    // Power cut to zero on a climb, far ahead of the bunch: the rider rolls to a halt.
    auto cut = PowerProfile::constant(3.0).then_constant(0.2, 0.0);
    CHECK_THROWS_AS(simulate_breakaway(0.2, cut, RiderSpec{}, CourseProfile::constant_grade(0.05),
                                       scales(0.005)),
                    StallError);
    // A power that only fades keeps the rider moving until the bunch takes them back.
    PowerProfile fade;
    fade.then_exponential(0.0, 2.0, 0.0, 5.0);
    CHECK(simulate_breakaway(0.2, fade, RiderSpec{}, CourseProfile::constant_grade(0.05),
                             scales(0.005))
              .caught);
}

}
