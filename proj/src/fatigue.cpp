#include "breakaway/fatigue.hpp"

#include <cmath>
#include <limits>

#include "breakaway/errors.hpp"
#include "breakaway/numerics.hpp"

namespace breakaway {

namespace {

constexpr double kTieTolerance = 1e-12;
constexpr int kOuterGrid = 256;

const numerics::SolverSettings kQuadrature{1e-12, 1e-12, 400, 1.6};
const numerics::SolverSettings kRoot{1e-13, 1e-12, 300, 1.6};

// (1 - e^{-mu tau}) / mu, finite as mu -> 0.
double burst_weight(double mu, double tau) {
    return mu == 0.0 ? tau : -std::expm1(-mu * tau) / mu;
}

double burst_power(double s, double p_max, double p_sustain, double mu) {
    return std::max(p_sustain + (p_max - p_sustain) * std::exp(-mu * s), 0.0);
}

// Distance covered in the first tau after the attack.
double distance_after_attack(double tau, double p_max, double p_sustain, double mu,
                             double cd_front) {
    if (tau <= 0.0) {
        return 0.0;
    }
    if (mu == 0.0 || p_max == p_sustain) {
        return std::cbrt(p_max / cd_front) * tau;
    }
    const auto q = numerics::integrate_adaptive(
        [&](double s) { return std::cbrt(burst_power(s, p_max, p_sustain, mu)); }, 0.0, tau,
        kQuadrature);
    return q.value / std::cbrt(cd_front);
}

// d(distance)/d(p_max) by differentiating under the integral sign.
double distance_sensitivity(double tau, double p_max, double p_sustain, double mu,
                            double cd_front) {
    if (tau <= 0.0) {
        return 0.0;
    }
    const auto q = numerics::integrate_adaptive(
        [&](double s) {
            const double decay = std::exp(-mu * s);
            const double p = std::max(p_sustain + (p_max - p_sustain) * decay, 1e-300);
            return decay / (3.0 * std::cbrt(p * p));
        },
        0.0, tau, kQuadrature);
    return q.value / std::cbrt(cd_front);
}

struct Residual {
    double energy = 0.0;
    double arrival = 0.0;

    double norm() const { return std::hypot(energy, arrival); }
};

Residual residual(double x_a, double p_max, double t_f, const StrategyProblem& p, double mu,
                  double p_sustain) {
    const double tau = t_f - x_a;
    const double energy = p.cd_lurk * x_a + p_sustain * tau +
                          burst_weight(mu, tau) * (p_max - p_sustain) - p.energy_budget;
    const double arrival =
        x_a + distance_after_attack(tau, p_max, p_sustain, mu, p.cd_front) - 1.0;
    return {energy, arrival};
}

bool small(const Residual& r, double energy_scale) {
    return std::fabs(r.energy) < 1e-11 * std::max(1.0, energy_scale) &&
           std::fabs(r.arrival) < 1e-11;
}

std::optional<AttackSolve> newton_solve(double x_a, const StrategyProblem& p, double mu,
                                        double p_sustain) {
    const double remaining = p.energy_budget - p.cd_lurk * x_a;
    const double rest = 1.0 - x_a;
    // Constant-power solution as the starting point.
    double power = std::pow(remaining / (std::cbrt(p.cd_front) * rest), 1.5);
    double t_f = x_a + rest * std::cbrt(p.cd_front / power);
    power = std::max(power, p_sustain);

    Residual r = residual(x_a, power, t_f, p, mu, p_sustain);
    for (int iter = 1; iter <= 60; ++iter) {
        if (small(r, p.energy_budget)) {
            return AttackSolve{power, t_f, iter - 1, r.energy, r.arrival, false};
        }
        const double tau = t_f - x_a;
        const double j11 = burst_weight(mu, tau);
        const double j12 = burst_power(tau, power, p_sustain, mu);
        const double j21 = distance_sensitivity(tau, power, p_sustain, mu, p.cd_front);
        const double j22 = std::cbrt(j12 / p.cd_front);
        const double det = j11 * j22 - j12 * j21;
        if (!(std::fabs(det) > 0.0) || !std::isfinite(det)) {
            return std::nullopt;
        }
        const double d_power = -(j22 * r.energy - j12 * r.arrival) / det;
        const double d_time = -(-j21 * r.energy + j11 * r.arrival) / det;

        double step = 1.0;
        bool improved = false;
        for (int halving = 0; halving < 40; ++halving, step *= 0.5) {
            const double trial_power = power + step * d_power;
            const double trial_time = t_f + step * d_time;
            if (!(trial_power >= p_sustain) || !(trial_time > x_a)) {
                continue;
            }
            const Residual trial = residual(x_a, trial_power, trial_time, p, mu, p_sustain);
            if (trial.norm() < r.norm()) {
                power = trial_power;
                t_f = trial_time;
                r = trial;
                improved = true;
                break;
            }
        }
        if (!improved) {
            return small(r, p.energy_budget)
                       ? std::optional{AttackSolve{power, t_f, iter, r.energy, r.arrival, false}}
                       : std::nullopt;
        }
    }
    return std::nullopt;
}

// One-dimensional fallback: spend the budget exactly for each trial finish time,
// then match the arrival condition by bracketing.
std::optional<AttackSolve> bracketed_solve(double x_a, const StrategyProblem& p, double mu,
                                           double p_sustain) {
    const double remaining = p.energy_budget - p.cd_lurk * x_a;
    const double rest = 1.0 - x_a;
    auto peak_for = [&](double t_f) {
        const double tau = t_f - x_a;
        const double surplus = std::max(remaining - p_sustain * tau, 0.0);
        return p_sustain + surplus / burst_weight(mu, tau);
    };
    auto gap = [&](double t_f) {
        return distance_after_attack(t_f - x_a, peak_for(t_f), p_sustain, mu, p.cd_front) - rest;
    };

    double upper;
    if (p_sustain > 0.0) {
        upper = x_a + remaining / p_sustain;
        if (gap(upper) < 0.0) {
            return std::nullopt;  // even a flat-out spend at P_s never reaches the line
        }
    } else {
        try {
            upper = numerics::expand_bracket_upward(gap, x_a, x_a + rest, 1e6, kRoot).second;
        } catch (const BracketError&) {
            return std::nullopt;
        }
    }
    const double lower = x_a + 1e-12 * std::max(rest, 1e-3);
    if (gap(lower) >= 0.0) {
        return std::nullopt;
    }
    const double t_f = numerics::find_root_bracketed(gap, lower, upper, kRoot);
    const double power = peak_for(t_f);
    const Residual r = residual(x_a, power, t_f, p, mu, p_sustain);
    return AttackSolve{power, t_f, 0, r.energy, r.arrival, true};
}

double plateau(const StrategyProblem& p) {
    return (1.0 - p.risk_index) * exposure_simple(1.0, p.position, p.crash);
}

void validate_fatigue_inputs(double mu, double p_sustain) {
    if (!(mu >= 0.0) || !std::isfinite(mu)) {
        throw DomainError("fatigue rate mu must be non-negative");
    }
    if (!(p_sustain >= 0.0) || !std::isfinite(p_sustain)) {
        throw DomainError("sustainable power must be non-negative");
    }
}

}  // namespace

void FatigueParams::validate() const {
    validate_fatigue_inputs(mu, p_sustain);
    if (!(p_max >= p_sustain)) {
        throw DomainError("p_max must be at least p_sustain");
    }
    if (!(p_lurk >= 0.0)) {
        throw DomainError("p_lurk must be non-negative");
    }
    if (!(attack_time >= 0.0)) {
        throw DomainError("attack_time must be non-negative");
    }
}

double power_at(double t, const FatigueParams& params) {
    params.validate();
    if (t < params.attack_time) {
        return params.p_lurk;
    }
    return burst_power(t - params.attack_time, params.p_max, params.p_sustain, params.mu);
}

double total_energy(double x_a, double t_f, const FatigueParams& params) {
    params.validate();
    if (!(x_a >= 0.0) || !(t_f >= x_a)) {
        throw DomainError("total_energy: need 0 <= x_a <= t_f");
    }
    const double tau = t_f - x_a;
    return params.p_lurk * x_a + params.p_sustain * tau +
           burst_weight(params.mu, tau) * (params.p_max - params.p_sustain);
}

double p_max_from_budget(double energy, double x_a, double t_f, double p_lurk, double p_sustain,
                         double mu) {
    validate_fatigue_inputs(mu, p_sustain);
    if (!(t_f > x_a) || !(x_a >= 0.0)) {
        throw DomainError("p_max_from_budget: need 0 <= x_a < t_f");
    }
    const double tau = t_f - x_a;
    const double surplus = energy - p_lurk * x_a - p_sustain * tau;
    if (surplus < 0.0) {
        throw InfeasibleError("p_max_from_budget: budget leaves no energy for the burst");
    }
    return p_sustain + surplus / burst_weight(mu, tau);
}

double position_after_attack(double t, const FatigueParams& params, double cd_front) {
    params.validate();
    if (!(cd_front > 0.0)) {
        throw DomainError("position_after_attack: cd_front must be positive");
    }
    if (t < params.attack_time) {
        throw DomainError("position_after_attack: t precedes the attack");
    }
    return params.attack_time + distance_after_attack(t - params.attack_time, params.p_max,
                                                      params.p_sustain, params.mu, cd_front);
}

double finish_time(double x_a, double p_max, const FatigueParams& params, double cd_front) {
    FatigueParams local = params;
    local.attack_time = x_a;
    local.p_max = p_max;
    local.validate();
    if (!(cd_front > 0.0)) {
        throw DomainError("finish_time: cd_front must be positive");
    }
    const double rest = 1.0 - x_a;
    if (rest <= 0.0) {
        return x_a;
    }
    if (!(p_max > 0.0)) {
        throw InfeasibleError("finish_time: rider never finishes without power");
    }
    auto gap = [&](double t) {
        return distance_after_attack(t - x_a, p_max, local.p_sustain, local.mu, cd_front) - rest;
    };
    // Speed never exceeds its initial value, so the line is not reached earlier.
    const double earliest = x_a + rest * std::cbrt(cd_front / p_max);
    if (local.mu == 0.0 || p_max == local.p_sustain) {
        return earliest;
    }
    double latest;
    if (local.p_sustain > 0.0) {
        latest = x_a + rest * std::cbrt(cd_front / local.p_sustain);
    } else {
        const double reach = 3.0 * std::cbrt(p_max / cd_front) / local.mu;
        if (!(reach > rest)) {
            throw InfeasibleError("finish_time: rider never finishes, the burst fades too fast");
        }
        latest = numerics::expand_bracket_upward(gap, earliest, earliest + rest, 1e12, kRoot).second;
    }
    if (gap(earliest) >= 0.0) {
        return earliest;
    }
    return numerics::find_root_bracketed(gap, earliest, latest, kRoot);
}

std::optional<AttackSolve> solve_attack(double x_a, const StrategyProblem& problem, double mu,
                                        double p_sustain) {
    problem.validate();
    validate_fatigue_inputs(mu, p_sustain);
    if (!(x_a >= 0.0 && x_a < 1.0)) {
        throw DomainError("solve_attack: x_a must lie in [0, 1)");
    }
    if (!(problem.energy_budget - problem.cd_lurk * x_a > 0.0)) {
        return std::nullopt;
    }
    if (auto s = newton_solve(x_a, problem, mu, p_sustain)) {
        return s;
    }
    return bracketed_solve(x_a, problem, mu, p_sustain);
}

double fatigue_objective(double x_a, const StrategyProblem& p, double mu, double p_sustain) {
    if (!(x_a >= 0.0 && x_a <= 1.0)) {
        throw DomainError("fatigue_objective: x_a must lie in [0, 1]");
    }
    if (x_a == 1.0) {
        return plateau(p);
    }
    const auto s = solve_attack(x_a, p, mu, p_sustain);
    if (!s || !(s->finish_time < 1.0)) {
        return plateau(p);
    }
    const double beta = p.risk_index;
    return -beta * (1.0 - s->finish_time) +
           (1.0 - beta) * exposure_simple(x_a, p.position, p.crash);
}

FatigueResult optimize_fatigue(const StrategyProblem& p, double mu, double p_sustain) {
    p.validate();
    validate_fatigue_inputs(mu, p_sustain);
    const double beta = p.risk_index;

    auto finish_or_fail = [&](double x) -> std::optional<AttackSolve> {
        if (x >= 1.0) {
            return std::nullopt;
        }
        auto s = solve_attack(x, p, mu, p_sustain);
        if (s && s->finish_time < 1.0) {
            return s;
        }
        return std::nullopt;
    };

    std::vector<double> grid(kOuterGrid);
    std::vector<double> values(kOuterGrid);
    int first_success = -1;
    int best = -1;
    for (int k = 0; k < kOuterGrid; ++k) {
        grid[k] = k + 1 == kOuterGrid ? 1.0 : static_cast<double>(k) / (kOuterGrid - 1);
        values[k] = fatigue_objective(grid[k], p, mu, p_sustain);
        if (k + 1 < kOuterGrid && finish_or_fail(grid[k])) {
            if (first_success < 0) {
                first_success = k;
            }
            if (best < 0 || values[k] < values[best]) {
                best = k;
            }
        }
    }

    FatigueResult result;
    if (first_success < 0) {
        result.attack_position = std::numeric_limits<double>::quiet_NaN();
        result.peak_power = std::numeric_limits<double>::quiet_NaN();
        result.finish_time = 1.0;
        result.exposure = exposure_simple(1.0, p.position, p.crash);
        result.objective = plateau(p);
        result.branch = Branch::no_win;
        result.converged = true;
        return result;
    }

    // Earliest attack that still stays clear of the peloton.
    double boundary = 0.0;
    if (first_success > 0) {
        auto margin = [&](double x) {
            const auto s = x < 1.0 ? solve_attack(x, p, mu, p_sustain) : std::nullopt;
            return s ? s->finish_time - 1.0 : 1.0;
        };
        boundary = numerics::find_root_bracketed(margin, grid[first_success - 1],
                                                 grid[first_success], kRoot);
    }
    const auto boundary_solve = solve_attack(boundary, p, mu, p_sustain);
    const double boundary_gap =
        boundary_solve ? std::max(1.0 - boundary_solve->finish_time, 0.0) : 0.0;
    const double boundary_value =
        -beta * boundary_gap + (1.0 - beta) * exposure_simple(boundary, p.position, p.crash);

    const double lo = std::max(boundary, grid[std::max(best - 1, 0)]);
    const double hi = grid[std::min(best + 1, kOuterGrid - 1)];
    numerics::ScalarMinimum refined{grid[best], values[best]};
    if (hi > lo) {
        const auto golden = numerics::golden_section(
            [&](double x) { return fatigue_objective(x, p, mu, p_sustain); }, lo, hi,
            numerics::SolverSettings{1e-10, 1e-8, 200, 1.6});
        if (golden.value < refined.value) {
            refined = golden;
        }
    }

    double chosen = boundary;
    result.branch = Branch::boundary;
    if (refined.value < boundary_value - kTieTolerance) {
        chosen = refined.argmin;
        result.branch = Branch::interior;
    }

    std::optional<AttackSolve> s;
    if (chosen < 1.0) {
        s = solve_attack(chosen, p, mu, p_sustain);
    }
    result.attack_position = chosen;
    result.exposure = exposure_simple(chosen, p.position, p.crash);
    if (s) {
        result.peak_power = s->peak_power;
        result.finish_time = s->finish_time;
        result.time_gap = std::max(1.0 - s->finish_time, 0.0);
        result.iterations = s->iterations;
        result.energy_residual = s->energy_residual;
        result.arrival_residual = s->arrival_residual;
        result.converged =
            std::fabs(s->energy_residual) < 1e-8 && std::fabs(s->arrival_residual) < 1e-8;
    }
    result.objective = result.branch == Branch::boundary ? boundary_value : refined.value;
    return result;
}

FatigueResult optimize_fatigue(const StrategyProblem& problem, double mu) {
    return optimize_fatigue(problem, mu, problem.cd_lurk);
}

}  // namespace breakaway
