#include "breakaway/terrain.hpp"

#include <cmath>
// Boost 1.74 pchip calls isnan unqualified.
using std::isnan;
#include <boost/math/interpolators/pchip.hpp>

#include <algorithm>
#include <fstream>
#include <memory>
#include <numbers>
#include <sstream>

#include "breakaway/errors.hpp"
#include "breakaway/numerics.hpp"

namespace breakaway {

namespace {

constexpr double kStallSpeed = 1e-6;

using Pchip = boost::math::interpolators::pchip<std::vector<double>>;

double clamp_power(double p) { return std::max(p, 0.0); }

void check_scales(const ScaleSet& s) {
    if (!(s.inertia >= 0.0) || !std::isfinite(s.inertia)) {
        throw DomainError("terrain: inertia (epsilon) must be non-negative");
    }
    if (!std::isfinite(s.gravity_ratio) || s.gravity_ratio < 0.0) {
        throw DomainError("terrain: gravity ratio must be non-negative");
    }
    if (!(s.mass_ratio > 0.0)) {
        throw DomainError("terrain: rider mass ratio must be positive");
    }
}

// Samples every accepted step and fills long steps from the dense output.
std::vector<std::pair<double, ode::State>> sample(const ode::Solution& sol, double spacing,
                                                  double from, double to) {
    std::vector<std::pair<double, ode::State>> out;
    for (const auto& seg : sol.segments) {
        const double a = seg.t0;
        const double b = seg.t0 + seg.h;
        if (b < from || a > to) {
            continue;
        }
        const double lo = std::max(a, from);
        const double hi = std::min(b, to);
        const int n = std::max(1, static_cast<int>(std::ceil((hi - lo) / spacing)));
        for (int j = 0; j < n; ++j) {
            const double t = lo + (hi - lo) * j / n;
            out.emplace_back(t, sol.at(t));
        }
    }
    const double end = std::min(to, sol.t_final());
    out.emplace_back(end, end == sol.t_final() ? sol.y_final() : sol.at(end));
    return out;
}

void push(Trajectory& tr, double t, double x, double v, double p, double e) {
    tr.times.push_back(t);
    tr.positions.push_back(x);
    tr.velocities.push_back(v);
    tr.powers.push_back(p);
    tr.cumulative_energy.push_back(e);
}

// Peloton run. Inertial mode: y = [x, v, E_peloton, E_lurk] over t.
// Quasi-steady mode: y = [t, E_peloton, E_lurk] over x.
struct PelotonRun {
    ode::Solution sol;
    bool quasi = false;
    double finish_time = 0.0;
    double attack_time = 0.0;
    ode::State attack_state;
};

struct Context {
    const CourseProfile& profile;
    double eps;
    double gravity;
    double mass;
    double cd_lurk;
    double cd_front;
    const TerrainSettings& settings;

    double sin_theta(double x) const { return std::sin(steepness(profile, x)); }

    double peloton_speed_qs(double x) const {
        const double v = quasi_steady_speed_on_grade(1.0, 1.0, 1.0, gravity, sin_theta(x));
        if (v < kStallSpeed) {
            throw StallError("peloton stalls at x = " + std::to_string(x));
        }
        return v;
    }

    double lurk(double v) const { return lurking_power_at(v, cd_lurk, mass); }
};

PelotonRun run_peloton(const Context& c, double x_attack) {
    PelotonRun run;
    run.quasi = c.eps == 0.0;
    if (run.quasi) {
        ode::Rhs rhs = [&c](double x, std::span<const double>, std::span<double> dy) {
            const double v = c.peloton_speed_qs(std::clamp(x, 0.0, 1.0));
            dy[0] = 1.0 / v;
            dy[1] = 1.0 / v;
            dy[2] = c.lurk(v) / v;
        };
        run.sol = ode::solve(rhs, {0.0, 0.0, 0.0}, 0.0, 1.0, {}, c.settings.ode);
        run.finish_time = run.sol.y_final()[0];
        if (x_attack <= 0.0) {
            run.attack_state = {0.0, 0.0, 0.0};
        } else if (x_attack < 1.0) {
            run.attack_state = run.sol.at(x_attack);
            run.attack_time = run.attack_state[0];
        }
        return run;
    }

    ode::Rhs rhs = [&c](double, std::span<const double> y, std::span<double> dy) {
        const double x = y[0];
        const double v = y[1];
        dy[0] = v;
        dy[1] = (1.0 / v - v * v - c.gravity * c.sin_theta(std::clamp(x, 0.0, 1.0))) / c.eps;
        dy[2] = 1.0;
        dy[3] = c.lurk(v);
    };
    std::vector<ode::Event> events{
        {"finish", [](double, std::span<const double> y) { return y[0] - 1.0; }, 1, true},
        {"stall", [](double, std::span<const double> y) { return y[1] - kStallSpeed; }, -1, true},
    };
    const bool mark_attack = x_attack > 0.0 && x_attack < 1.0;
    if (mark_attack) {
        events.push_back({"attack",
                          [x_attack](double, std::span<const double> y) { return y[0] - x_attack; },
                          1, false});
    }
    run.sol = ode::solve(rhs, {0.0, 1.0, 0.0, 0.0}, 0.0, c.settings.time_horizon, events,
                         c.settings.ode);
    if (!run.sol.terminated_by_event || run.sol.events.back().event_index != 0) {
        throw StallError("peloton never reaches the finish");
    }
    run.finish_time = run.sol.t_final();
    run.attack_state = {0.0, 1.0, 0.0, 0.0};
    for (const auto& e : run.sol.events) {
        if (e.event_index == 2) {
            run.attack_time = e.t;
            run.attack_state = e.y;
            break;
        }
    }
    return run;
}

Trajectory peloton_trajectory(const Context& c, const PelotonRun& run) {
    Trajectory tr;
    const double end = run.sol.t_final();
    for (const auto& [s, y] : sample(run.sol, c.settings.sample_spacing, 0.0, end)) {
        if (run.quasi) {
            push(tr, y[0], s, c.peloton_speed_qs(std::clamp(s, 0.0, 1.0)), 1.0, y[1]);
        } else {
            push(tr, s, y[0], y[1], 1.0, y[2]);
        }
    }
    tr.finish_time = run.finish_time;
    return tr;
}

// Rider samples while drafting, between independent-variable values [from, to].
void append_lurk(const Context& c, const PelotonRun& run, double from, double to,
                 double energy_offset, Trajectory& tr) {
    for (const auto& [s, y] : sample(run.sol, c.settings.sample_spacing, from, to)) {
        if (run.quasi) {
            const double v = c.peloton_speed_qs(std::clamp(s, 0.0, 1.0));
            push(tr, y[0], s, v, c.lurk(v), energy_offset + y[2]);
        } else {
            push(tr, s, y[0], y[1], c.lurk(y[1]), energy_offset + y[3]);
        }
    }
}

BreakawayResult breakaway_once(double x_a, const PowerProfile& attack, const RiderSpec& rider,
                               const CourseProfile& profile, const ScaleSet& scales,
                               const TerrainSettings& settings) {
    const Context c{profile,       scales.inertia, scales.gravity_ratio, scales.mass_ratio,
                    rider.cd_lurk, rider.cd_front, settings};
    const PelotonRun run = run_peloton(c, x_a);

    BreakawayResult result;
    result.peloton = peloton_trajectory(c, run);
    result.peloton_energy = result.peloton.cumulative_energy.back();
    const double t_p = run.finish_time;
    const double final_lurk = run.sol.y_final()[run.quasi ? 2 : 3];

    if (x_a >= 1.0) {
        append_lurk(c, run, 0.0, run.sol.t_final(), 0.0, result.rider);
        result.rider.finish_time = t_p;
        result.rider_energy = final_lurk;
        return result;
    }

    const double t_a = run.attack_time;
    const double lurk_at_attack = run.attack_state[run.quasi ? 2 : 3];
    const double attack_indep = run.quasi ? x_a : t_a;
    if (attack_indep > 0.0) {
        append_lurk(c, run, 0.0, attack_indep, 0.0, result.rider);
    }

    const double m = c.mass;
    const double cd = c.cd_front;
    bool caught = false;
    double catch_indep = 0.0;
    double energy_at_catch = 0.0;

    if (run.quasi) {
        auto rider_speed = [&](double t, double x) {
            const double p = attack(std::max(t - t_a, 0.0));
            const double v = quasi_steady_speed_on_grade(p, cd, m, c.gravity, c.sin_theta(x));
            if (v < kStallSpeed) {
                throw StallError("rider never finishes: stalls at x = " + std::to_string(x));
            }
            return v;
        };
        if (rider_speed(t_a, x_a) <= c.peloton_speed_qs(x_a)) {
            caught = true;
            catch_indep = x_a;
            energy_at_catch = lurk_at_attack;
        } else {
            ode::Rhs rhs = [&](double x, std::span<const double> y, std::span<double> dy) {
                const double xc = std::clamp(x, 0.0, 1.0);
                const double v = rider_speed(y[0], xc);
                dy[0] = 1.0 / v;
                dy[1] = attack(std::max(y[0] - t_a, 0.0)) / v;
            };
            std::vector<ode::Event> events{
                {"caught",
                 [&run](double x, std::span<const double> y) {
                     return run.sol.at(std::clamp(x, 0.0, 1.0))[0] - y[0];
                 },
                 -1, true}};
            const auto sol = ode::solve(rhs, {t_a, lurk_at_attack}, x_a, 1.0, events, settings.ode);
            for (const auto& [x, y] : sample(sol, settings.sample_spacing, x_a, sol.t_final())) {
                push(result.rider, y[0], x, rider_speed(y[0], std::clamp(x, 0.0, 1.0)),
                     clamp_power(attack(std::max(y[0] - t_a, 0.0))), y[1]);
            }
            if (sol.terminated_by_event) {
                caught = true;
                catch_indep = sol.t_final();
                energy_at_catch = sol.y_final()[1];
            } else {
                result.rider.finish_time = sol.y_final()[0];
                result.rider_energy = sol.y_final()[1];
            }
        }
    } else {
        const double v0 = run.attack_state[1];
        const double s0 = c.sin_theta(x_a);
        const double rider_accel = (attack(0.0) / v0 - cd * v0 * v0 - m * c.gravity * s0) /
                                   (c.eps * m);
        const double peloton_accel = (1.0 / v0 - v0 * v0 - c.gravity * s0) / c.eps;
        if (rider_accel <= peloton_accel) {
            caught = true;
            catch_indep = t_a;
            energy_at_catch = lurk_at_attack;
        } else {
            const double v_end = run.sol.y_final()[1];
            auto peloton_x = [&run, t_p, v_end](double t) {
                return t <= t_p ? run.sol.at(t)[0] : 1.0 + v_end * (t - t_p);
            };
            ode::Rhs rhs = [&](double t, std::span<const double> y, std::span<double> dy) {
                const double p = attack(t - t_a);
                dy[0] = y[1];
                dy[1] = (p / y[1] - cd * y[1] * y[1] -
                         m * c.gravity * c.sin_theta(std::clamp(y[0], 0.0, 1.0))) /
                        (c.eps * m);
                dy[2] = p;
            };
            std::vector<ode::Event> events{
                {"finish", [](double, std::span<const double> y) { return y[0] - 1.0; }, 1, true},
                {"caught",
                 [&peloton_x](double t, std::span<const double> y) { return y[0] - peloton_x(t); },
                 -1, true},
                {"stall", [](double, std::span<const double> y) { return y[1] - kStallSpeed; }, -1,
                 true},
            };
            const auto sol = ode::solve(rhs, {x_a, v0, lurk_at_attack}, t_a,
                                        t_a + settings.time_horizon, events, settings.ode);
            if (!sol.terminated_by_event) {
                throw StallError("rider never finishes within the time horizon");
            }
            const std::size_t which = sol.events.back().event_index;
            if (which == 2) {
                throw StallError("rider never finishes: speed drops to zero");
            }
            for (const auto& [t, y] : sample(sol, settings.sample_spacing, t_a, sol.t_final())) {
                push(result.rider, t, y[0], y[1], clamp_power(attack(t - t_a)), y[2]);
            }
            if (which == 1) {
                caught = true;
                catch_indep = sol.t_final();
                energy_at_catch = sol.y_final()[2];
            } else {
                result.rider.finish_time = sol.t_final();
                result.rider_energy = sol.y_final()[2];
            }
        }
    }

    if (caught) {
        // Back in the bunch: the rider drafts again and crosses the line with it.
        const double lurk_at_catch = run.sol.at(catch_indep)[run.quasi ? 2 : 3];
        append_lurk(c, run, catch_indep, run.sol.t_final(), energy_at_catch - lurk_at_catch,
                    result.rider);
        result.caught = true;
        result.catch_time = run.quasi ? run.sol.at(catch_indep)[0] : catch_indep;
        result.rider.finish_time = t_p;
        result.rider_energy = energy_at_catch + final_lurk - lurk_at_catch;
    }
    result.time_gap = t_p - result.rider.finish_time;
    return result;
}

TerrainSettings loosened(const TerrainSettings& s) {
    TerrainSettings l = s;
    l.estimate_error = false;
    l.ode.tolerance.abs_tol *= 100.0;
    l.ode.tolerance.rel_tol *= 100.0;
    return l;
}

}  // namespace

CourseProfile::CourseProfile(std::function<double(double)> h, std::function<double(double)> dh,
                             std::string description)
    : height_(std::move(h)), slope_(std::move(dh)), description_(std::move(description)) {}

CourseProfile CourseProfile::flat() {
    return CourseProfile([](double) { return 0.0; }, [](double) { return 0.0; }, "flat");
}

CourseProfile CourseProfile::constant_grade(double slope) {
    if (!std::isfinite(slope)) {
        throw DomainError("constant_grade: slope must be finite");
    }
    return CourseProfile([slope](double x) { return slope * x; },
                         [slope](double) { return slope; },
                         "grade " + std::to_string(slope));
}

CourseProfile CourseProfile::harmonics(double offset, std::vector<Harmonic> terms) {
    for (const auto& t : terms) {
        if (!std::isfinite(t.sin_amplitude) || !std::isfinite(t.cos_amplitude) ||
            !std::isfinite(t.frequency)) {
            throw DomainError("harmonics: coefficients must be finite");
        }
    }
    auto shared = std::make_shared<const std::vector<Harmonic>>(std::move(terms));
    constexpr double two_pi = 2.0 * std::numbers::pi;
    auto h = [offset, shared](double x) {
        double sum = offset;
        for (const auto& t : *shared) {
            sum += t.sin_amplitude * std::sin(two_pi * t.frequency * x) +
                   t.cos_amplitude * std::cos(two_pi * t.frequency * x);
        }
        return sum;
    };
    auto dh = [shared](double x) {
        double sum = 0.0;
        for (const auto& t : *shared) {
            const double w = two_pi * t.frequency;
            sum += w * (t.sin_amplitude * std::cos(w * x) - t.cos_amplitude * std::sin(w * x));
        }
        return sum;
    };
    return CourseProfile(h, dh, "harmonics");
}

CourseProfile CourseProfile::hilly_demo() {
    CourseProfile p = harmonics(-0.001, {{0.002, 0.0, 2.0}, {0.0, 0.001, 5.0}});
    p.description_ = "hilly";
    return p;
}

CourseProfile CourseProfile::table(std::vector<double> x, std::vector<double> h) {
    if (x.size() != h.size()) {
        throw DomainError("course table: column lengths differ");
    }
    if (x.size() < 4) {
        throw DomainError("course table: at least four points are required");
    }
    for (std::size_t k = 0; k < x.size(); ++k) {
        if (!std::isfinite(x[k]) || !std::isfinite(h[k])) {
            throw DomainError("course table: values must be finite");
        }
        if (k > 0 && !(x[k] > x[k - 1])) {
            throw DomainError("course table: x must increase strictly");
        }
    }
    if (x.front() != 0.0 || x.back() != 1.0) {
        throw DomainError("course table: x must run from 0 to 1");
    }
    auto spline = std::make_shared<const Pchip>(std::move(x), std::move(h));
    return CourseProfile([spline](double s) { return (*spline)(std::clamp(s, 0.0, 1.0)); },
                         [spline](double s) { return spline->prime(std::clamp(s, 0.0, 1.0)); },
                         "table");
}

CourseProfile CourseProfile::parse_table(std::istream& in) {
    std::vector<double> xs;
    std::vector<double> hs;
    std::string line;
    int number = 0;
    bool header_allowed = true;
    while (std::getline(in, line)) {
        ++number;
        const auto hash = line.find('#');
        if (hash != std::string::npos) {
            line.erase(hash);
        }
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream fields(line);
        std::string a;
        std::string b;
        std::string extra;
        if (!(fields >> a)) {
            continue;  // blank
        }
        const bool has_second = static_cast<bool>(fields >> b);
        if (fields >> extra) {
            throw ParseError("expected two columns, found more", number);
        }
        double x = 0.0;
        double h = 0.0;
        std::size_t used_a = 0;
        std::size_t used_b = 0;
        bool numeric = has_second;
        try {
            x = std::stod(a, &used_a);
            if (has_second) {
                h = std::stod(b, &used_b);
            }
        } catch (const std::exception&) {
            numeric = false;
        }
        numeric = numeric && used_a == a.size() && used_b == b.size();
        if (!numeric) {
            if (header_allowed && has_second) {
                header_allowed = false;
                continue;
            }
            throw ParseError("expected two numeric columns (x, h)", number);
        }
        header_allowed = false;
        if (!std::isfinite(x) || !std::isfinite(h)) {
            throw ParseError("non-finite value", number);
        }
        if (x < 0.0 || x > 1.0) {
            throw ParseError("x must lie in [0, 1]", number);
        }
        if (!xs.empty() && !(x > xs.back())) {
            throw ParseError("x must increase strictly", number);
        }
        xs.push_back(x);
        hs.push_back(h);
    }
    if (xs.size() < 4) {
        throw ParseError("course table needs at least four points", number);
    }
    if (xs.front() != 0.0 || xs.back() != 1.0) {
        throw ParseError("course table must start at x = 0 and end at x = 1", number);
    }
    return table(std::move(xs), std::move(hs));
}

CourseProfile CourseProfile::load_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open course file '" + path + "'", 0);
    }
    CourseProfile p = parse_table(in);
    p.description_ = path;
    return p;
}

double steepness(const CourseProfile& profile, double x) { return std::atan(profile.slope(x)); }

double quasi_steady_speed_on_grade(double power, double cd, double mass, double gravity,
                                   double sin_theta) {
    if (!(cd > 0.0)) {
        throw DomainError("quasi_steady_speed_on_grade: drag must be positive");
    }
    const double b = mass * gravity * sin_theta;
    if (power <= 0.0) {
        return b < 0.0 ? std::sqrt(-b / cd) : 0.0;
    }
    const auto roots = numerics::solve_cubic_real(cd, b, -power);
    return std::max(roots.back(), 0.0);
}

double lurking_power_at(double peloton_speed, double cd_lurk, double rider_mass) {
    // With the peloton at unit power, its own equation of motion eliminates
    // both the inertial and the gravity terms from the rider's power balance.
    return clamp_power(rider_mass + (cd_lurk - rider_mass) * std::pow(peloton_speed, 3));
}

std::vector<double> lurking_power(double position, const Trajectory& peloton,
                                  const PelotonConfig& config, const ScaleSet& scales) {
    const double cd = drag_dimensionless(position, config);
    std::vector<double> out;
    out.reserve(peloton.velocities.size());
    for (double v : peloton.velocities) {
        out.push_back(lurking_power_at(v, cd, scales.mass_ratio));
    }
    return out;
}

Trajectory simulate_peloton(const CourseProfile& profile, const ScaleSet& scales,
                            const TerrainSettings& settings) {
    check_scales(scales);
    const Context c{profile, scales.inertia, scales.gravity_ratio, scales.mass_ratio,
                    1.0,     1.0,            settings};
    Trajectory tr = peloton_trajectory(c, run_peloton(c, 1.0));
    if (settings.estimate_error) {
        const TerrainSettings loose = loosened(settings);
        const Context cl{profile, scales.inertia, scales.gravity_ratio, scales.mass_ratio,
                         1.0,     1.0,            loose};
        tr.finish_time_error = std::fabs(run_peloton(cl, 1.0).finish_time - tr.finish_time);
    }
    return tr;
}

BreakawayResult simulate_breakaway(double x_a, const PowerProfile& attack, const RiderSpec& rider,
                                   const CourseProfile& profile, const ScaleSet& scales,
                                   const TerrainSettings& settings) {
    check_scales(scales);
    if (!(x_a >= 0.0 && x_a <= 1.0)) {
        throw DomainError("simulate_breakaway: x_a must lie in [0, 1]");
    }
    if (!(rider.cd_front > 0.0) || !(rider.cd_lurk > 0.0)) {
        throw DomainError("simulate_breakaway: drag values must be positive");
    }
    BreakawayResult r = breakaway_once(x_a, attack, rider, profile, scales, settings);
    if (settings.estimate_error) {
        const BreakawayResult loose =
            breakaway_once(x_a, attack, rider, profile, scales, loosened(settings));
        r.rider.finish_time_error = std::fabs(loose.rider.finish_time - r.rider.finish_time);
        r.peloton.finish_time_error = std::fabs(loose.peloton.finish_time - r.peloton.finish_time);
    }
    return r;
}

}  // namespace breakaway
