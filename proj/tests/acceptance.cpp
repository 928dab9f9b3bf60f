// Acceptance checks, one PASS/FAIL line per criterion.
// Usage: acceptance [criterion ...]   (no arguments runs all of them)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "breakaway/crash.hpp"
#include "breakaway/fatigue.hpp"
#include "breakaway/flat_strategy.hpp"
#include "breakaway/microstructure.hpp"
#include "breakaway/terrain.hpp"

using namespace breakaway;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* format, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, format, args...);
    return buf;
}

StrategyProblem problem(double energy, double beta, double omega = 0.5) {
    StrategyProblem p;
    p.energy_budget = energy;
    p.risk_index = beta;
    p.crash.omega = omega;
    return p;
}

std::vector<double> grid(double lo, double hi, int n) {
    std::vector<double> g(n);
    for (int k = 0; k < n; ++k) {
        g[k] = k + 1 == n ? hi : lo + (hi - lo) * k / (n - 1);
    }
    return g;
}

bool non_decreasing(const std::vector<double>& v, double slack) {
    for (std::size_t k = 1; k < v.size(); ++k) {
        if (v[k] < v[k - 1] - slack) {
            return false;
        }
    }
    return true;
}

Outcome critical_risk_value() {
    const double b = critical_risk(problem(1.2, 0.5));
    return {std::fabs(b - 0.0949) <= 5e-4, fmt("beta* = %.7f (target 0.0949 +- 5e-4)", b)};
}

Outcome energy_thresholds() {
    const auto below = win_frontier(problem(1.0, 0.05));   // risk below beta*
    const auto above = win_frontier(problem(1.0, 0.5));    // risk above beta*
    const auto rich = win_frontier(problem(1.5, 0.05));
    const auto poor = win_frontier(problem(0.45, 0.9));
    const bool ok = below.energy_min == 1.43 && above.energy_min == 0.46 && rich.risk_min &&
                    *rich.risk_min == 0.0 && !poor.risk_min;
    return {ok, fmt("E_crit = %.17g, E_min = %.17g", below.energy_min, above.energy_min)};
}

Outcome interior_structure() {
    const std::vector<double> energies{0.8, 1.0, 1.2, 1.4};
    std::vector<double> xs;
    std::vector<double> ps;
    bool all_interior = true;
    for (double e : energies) {
        const auto r = optimal_attack(problem(e, 0.8));
        all_interior = all_interior && r.branch == Branch::interior;
        xs.push_back(r.attack_position);
        ps.push_back(r.attack_power);
    }
    // Least-squares line through (E, x).
    const double n = static_cast<double>(energies.size());
    double se = 0, sx = 0, see = 0, sex = 0;
    for (std::size_t k = 0; k < energies.size(); ++k) {
        se += energies[k];
        sx += xs[k];
        see += energies[k] * energies[k];
        sex += energies[k] * xs[k];
    }
    const double slope = (n * sex - se * sx) / (n * see - se * se);
    const double icpt = (sx - slope * se) / n;
    double residual = 0.0;
    for (std::size_t k = 0; k < energies.size(); ++k) {
        residual = std::max(residual, std::fabs(xs[k] - (icpt + slope * energies[k])));
    }
    const auto [pmin, pmax] = std::minmax_element(ps.begin(), ps.end());
    const double spread = *pmax - *pmin;
    return {all_interior && residual < 1e-8 && spread < 1e-8,
            fmt("fit residual %.2e, power spread %.2e, P = %.10f", residual, spread, ps[0])};
}

Outcome brute_force() {
    constexpr int kDraws = 200;
    constexpr int kGrid = 100001;
    const double h = 1.0 / (kGrid - 1);
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> beta(0.0, 1.0);
    std::uniform_real_distribution<double> energy(0.5, 1.6);
    double worst = 0.0;
    int failures = 0;
    for (int d = 0; d < kDraws; ++d) {
        const auto p = problem(energy(rng), beta(rng));
        double best_x = 0.0;
        double best_v = objective(0.0, p);
        for (int k = 1; k < kGrid; ++k) {
            const double x = k * h;
            const double v = objective(x, p);
            if (v < best_v) {
                best_v = v;
                best_x = x;
            }
        }
        const double diff = std::fabs(optimal_attack(p).attack_position - best_x);
        worst = std::max(worst, diff);
        failures += diff > h;
    }
    return {failures == 0,
            fmt("max |dx| = %.3e over %d draws (grid spacing %.0e), %d outside", worst, kDraws, h,
                failures)};
}

Outcome crash_oracle() {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> omega(0.05, 3.0);
    std::uniform_real_distribution<double> intensity(0.2, 5.0);
    std::uniform_int_distribution<int> position(1, 75);
    std::uniform_real_distribution<double> attack(0.0, 1.0);
    double worst = 0.0;
    bool ok = true;
    for (int d = 0; d < 20; ++d) {
        CrashModel m;
        m.omega = omega(rng);
        m.intensity = intensity(rng);
        const double i = position(rng);
        const double x_a = attack(rng);
        const double exact = exposure_simple(x_a, i, m);
        const auto mc = monte_carlo_exposure(PositionTrace::simple_attack(i, x_a), m, 1'000'000,
                                             1000 + d);
        const double z = std::fabs(mc.estimate - exact) / mc.standard_error;
        worst = std::max(worst, z);
        ok = ok && z < 4.0;
    }
    return {ok, fmt("max |z| = %.3f over 20 draws of 1e6 trials", worst)};
}

Outcome fatigue_limit() {
    double worst = 0.0;
    for (double b : grid(0.0, 1.0, 21)) {
        const auto p = problem(1.25, b);
        const double flat = optimal_attack(p).attack_position;
        const double tired = optimize_fatigue(p, 1e-3).attack_position;
        worst = std::max(worst, std::fabs(flat - tired));
    }
    return {worst < 1e-2, fmt("max |dx_a| = %.3e on 21 beta points (E = 1.25)", worst)};
}

Outcome fatigue_scaling() {
    const std::vector<double> mus{1e-3, 0.1, 1.0, 3.0, 10.0};
    bool grows = true;
    double min_ratio = 1e300;
    double max_ratio = 0.0;
    double worst_beta = 0.0;
    int below = 0;
    for (double b : grid(0.0, 1.0, 21)) {
        std::vector<double> pm;
        for (double mu : mus) {
            pm.push_back(optimize_fatigue(problem(1.25, b), mu).peak_power);
        }
        for (std::size_t k = 1; k < pm.size(); ++k) {
            grows = grows && pm[k] > pm[k - 1];
        }
        const double ratio = pm[4] / pm[2];
        max_ratio = std::max(max_ratio, ratio);
        if (ratio < min_ratio) {
            min_ratio = ratio;
            worst_beta = b;
        }
        below += ratio <= 3.0;
    }
    return {grows && below == 0,
            fmt("P_max grows with mu: %s; P_max(10)/P_max(1) in [%.3f, %.3f], min at beta = %.2f, "
                "%d of 21 beta points at or below 3",
                grows ? "yes" : "no", min_ratio, max_ratio, worst_beta, below)};
}

Outcome terrain_reduction() {
    ScaleSet s;
    s.inertia = 1e-4;
    s.gravity_ratio = 38.91;
    double worst = 0.0;
    double worst_tp = 0.0;
    for (double x_a : {0.2, 0.4, 0.6, 0.8}) {
        for (double p_a : {1.6, 2.2, 2.8, 3.4, 4.0}) {
            const auto r = simulate_breakaway(x_a, PowerProfile::constant(p_a), RiderSpec{},
                                              CourseProfile::flat(), s);
            const double exact = (1.0 - x_a) * (1.0 - std::cbrt(1.43 / p_a));
            worst = std::max(worst, std::fabs(r.time_gap - exact));
            worst_tp = std::max(worst_tp, std::fabs(r.peloton.finish_time - 1.0));
        }
    }
    return {worst < 1e-4 && worst_tp < 1e-3,
            fmt("max |dt error| = %.3e, max |t_p - 1| = %.3e over 20 runs", worst, worst_tp)};
}

Outcome microstructure_agreement() {
    MicroParams p;
    const auto c = compare_layers(p);
    const double terminal = std::cbrt(p.power / 1.43);
    const double term_err = std::fabs(c.full_final_speed - terminal);
    const bool ok = c.max_relative_deviation < 5.0 * p.eps && term_err < 1e-6 &&
                    std::fabs(c.terminal_speed - terminal) < 1e-6 && c.interior_maxima == 1;
    return {ok, fmt("deviation %.3e = %.3f eps, terminal error %.2e, interior maxima %d",
                    c.max_relative_deviation, c.max_relative_deviation / p.eps, term_err,
                    c.interior_maxima)};
}

Outcome figure_properties() {
    std::vector<std::string> failed;
    const auto betas = grid(0.0, 1.0, 21);
    for (double e : {1.1, 1.2, 1.3, 1.5}) {
        std::vector<double> x;
        std::vector<double> dt;
        for (double b : betas) {
            const auto r = optimal_attack(problem(e, b));
            x.push_back(r.attack_position);
            dt.push_back(r.time_gap);
        }
        if (!non_decreasing(x, 0.0)) failed.push_back(fmt("x_a*(beta) at E=%.1f", e));
        if (!non_decreasing(dt, 0.0)) failed.push_back(fmt("dt(beta) at E=%.1f", e));
    }
    for (double b : {0.05, 0.2, 0.5, 0.8, 1.0}) {
        std::vector<double> dt;
        for (double e : grid(0.5, 1.6, 23)) {
            dt.push_back(optimal_attack(problem(e, b)).time_gap);
        }
        if (!non_decreasing(dt, 0.0)) failed.push_back(fmt("dt(E) at beta=%.2f", b));
    }
    // Omega ordering at fixed (beta, E): x_a* and dt grow with omega.
    const auto omegas = grid(0.1, 1.0, 11);
    for (double e : {1.1, 1.5}) {
        for (double b : {0.2, 0.5, 0.8}) {
            std::vector<double> x;
            std::vector<double> dt;
            for (double w : omegas) {
                const auto r = optimal_attack(problem(e, b, w));
                x.push_back(r.attack_position);
                dt.push_back(r.time_gap);
            }
            if (!non_decreasing(x, 0.0) || !non_decreasing(dt, 0.0)) {
                failed.push_back(fmt("omega ordering at E=%.1f beta=%.1f", e, b));
            }
        }
    }
    // Fatigue: x_a* does not move back as mu grows; optimizer slack 1e-6.
    std::vector<double> mus;
    for (int k = 0; k < 11; ++k) {
        mus.push_back(std::pow(10.0, -3.0 + 0.4 * k));
    }
    for (double b : {0.3, 0.5, 0.8}) {
        std::vector<double> x;
        for (double mu : mus) {
            x.push_back(optimize_fatigue(problem(1.25, b), mu).attack_position);
        }
        if (!non_decreasing(x, 1e-6)) failed.push_back(fmt("x_a*(mu) at beta=%.1f", b));
    }
    std::string detail = failed.empty() ? "all orderings hold" : "violations:";
    for (const auto& f : failed) {
        detail += " [" + f + "]";
    }
    return {failed.empty(), detail};
}

Outcome round_trips() {
    double e1 = 0.0;
    double e2 = 0.0;
    double e3 = 0.0;
    for (double e : {0.6, 1.0, 1.2, 1.43, 1.6}) {
        const auto p = problem(e, 0.5);
        for (double pa : grid(1.5, 8.0, 14)) {
            // Zero is the clamp for powers the budget outlasts from the start.
            const double x = earliest_attack_position(pa, p);
            if (x > 0.0 && x < 1.0) {
                e1 = std::max(e1, std::fabs(attack_power(x, p) - pa) / pa);
            }
        }
        const double x_min = std::max(min_attack_position(p), 0.0);
        for (double x : grid(x_min, 0.99, 25)) {
            const double pa = attack_power(x, p);
            const double t_f = x + (1.0 - x) / std::cbrt(pa / p.cd_front);
            e3 = std::max(e3, std::fabs(p.cd_lurk * x + pa * (t_f - x) - e));
        }
        for (double mu : {1e-3, 0.5, 3.0, 10.0}) {
            for (double x : {0.2, 0.5, 0.8}) {
                const double t_f = x + 0.5 * (1.0 - x);
                if (e - 0.46 * t_f <= 0.0) {
                    continue;
                }
                FatigueParams f;
                f.mu = mu;
                f.attack_time = x;
                f.p_max = p_max_from_budget(e, x, t_f, f.p_lurk, f.p_sustain, mu);
                e2 = std::max(e2, std::fabs(total_energy(x, t_f, f) - e));
            }
        }
    }
    return {e1 < 1e-10 && e2 < 1e-10 && e3 < 1e-10,
            fmt("power %.2e, fatigue energy %.2e, flat energy %.2e", e1, e2, e3)};
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"critical risk", critical_risk_value},
        {"energy thresholds", energy_thresholds},
        {"interior optimum structure", interior_structure},
        {"brute-force equivalence", brute_force},
        {"crash Monte Carlo oracle", crash_oracle},
        {"fatigue limit", fatigue_limit},
        {"fatigue power scaling", fatigue_scaling},
        {"terrain reduction", terrain_reduction},
        {"microstructure agreement", microstructure_agreement},
        {"figure properties", figure_properties},
        {"round-trip identities", round_trips},
    };
    std::vector<int> selected;
    for (int a = 1; a < argc; ++a) {
        const int n = std::atoi(argv[a]);
        if (n < 1 || n > static_cast<int>(criteria.size())) {
            std::fprintf(stderr, "unknown criterion '%s'\n", argv[a]);
            return 2;
        }
        selected.push_back(n);
    }
    if (selected.empty()) {
        for (int n = 1; n <= static_cast<int>(criteria.size()); ++n) {
            selected.push_back(n);
        }
    }
    int failures = 0;
    for (int n : selected) {
        const auto& [name, check] = criteria[n - 1];
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = check();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("%s criterion %d (%s): %s [%.2f s]\n", o.pass ? "PASS" : "FAIL", n, name.c_str(),
                    o.detail.c_str(), secs);
        failures += !o.pass;
    }
    return failures == 0 ? 0 : 1;
}
