#include "breakaway/flat_strategy.hpp"

#include <cmath>
#include <limits>

#include "breakaway/errors.hpp"
#include "breakaway/numerics.hpp"

namespace breakaway {

namespace {

constexpr double kTieTolerance = 1e-12;

double failed_break_objective(const StrategyProblem& p) {
    return (1.0 - p.risk_index) * exposure_simple(1.0, p.position, p.crash);
}

}  // namespace

void StrategyProblem::validate() const {
    if (!(risk_index >= 0.0 && risk_index <= 1.0)) {
        throw DomainError("risk_index must lie in [0, 1]");
    }
    if (!(cd_lurk > 0.0) || !(cd_front > cd_lurk)) {
        throw DomainError("drag values need cd_front > cd_lurk > 0");
    }
    if (!(energy_budget >= 0.0) || !std::isfinite(energy_budget)) {
        throw DomainError("energy_budget must be non-negative");
    }
    if (!(position >= 1.0)) {
        throw DomainError("position must be at least 1");
    }
    crash.validate();
}

std::string to_string(Branch branch) {
    switch (branch) {
        case Branch::boundary:
            return "boundary";
        case Branch::interior:
            return "interior";
        case Branch::no_win:
            return "no_win";
    }
    return "unknown";
}

double earliest_attack_position(double power, const StrategyProblem& p) {
    p.validate();
    if (!(power > p.cd_front)) {
        throw InfeasibleError("attack power must exceed the lead-rider drag to outrun the peloton");
    }
    const double solo = std::cbrt(p.cd_front) * std::pow(power, 2.0 / 3.0);
    return std::max((solo - p.energy_budget) / (solo - p.cd_lurk), 0.0);
}

double min_attack_position(const StrategyProblem& p) {
    p.validate();
    return std::max((p.cd_front - p.energy_budget) / (p.cd_front - p.cd_lurk), 0.0);
}

double attack_power(double x_a, const StrategyProblem& p) {
    p.validate();
    if (!(x_a >= 0.0) || !(x_a < 1.0)) {
        throw DomainError("attack_power: x_a must lie in [0, 1)");
    }
    const double remaining = p.energy_budget - p.cd_lurk * x_a;
    if (!(remaining > 0.0)) {
        throw InfeasibleError("attack_power: budget exhausted before the attack");
    }
    const double power = std::pow(remaining / (std::cbrt(p.cd_front) * (1.0 - x_a)), 1.5);
    if (power < p.cd_front * (1.0 - 1e-12)) {
        throw InfeasibleError("attack_power: x_a is before the minimum attack position");
    }
    return power;
}

double time_gap_from_power(double power, const StrategyProblem& p) {
    p.validate();
    if (!(power > p.cd_front)) {
        return 0.0;
    }
    const double x_a = earliest_attack_position(power, p);
    if (x_a >= 1.0) {
        return 0.0;
    }
    const double gap = (1.0 - x_a) * (1.0 - std::cbrt(p.cd_front / power));
    return std::max(gap, 0.0);
}

double time_gap_from_position(double x_a, const StrategyProblem& p) {
    p.validate();
    if (!(x_a >= 0.0 && x_a <= 1.0)) {
        throw DomainError("time_gap_from_position: x_a must lie in [0, 1]");
    }
    if (x_a == 1.0) {
        return 0.0;
    }
    const double remaining = p.energy_budget - p.cd_lurk * x_a;
    if (!(remaining > 0.0)) {
        throw DomainError("time_gap_from_position: budget exhausted before the attack");
    }
    if (x_a < min_attack_position(p)) {
        return 0.0;
    }
    const double rest = 1.0 - x_a;
    const double gap = rest - rest * std::sqrt(rest) * std::sqrt(p.cd_front / remaining);
    return std::max(gap, 0.0);
}

double objective(double x_a, const StrategyProblem& p) {
    p.validate();
    if (!(x_a >= 0.0 && x_a <= 1.0)) {
        throw DomainError("objective: x_a must lie in [0, 1]");
    }
    if (x_a < min_attack_position(p)) {
        return failed_break_objective(p);
    }
    const double beta = p.risk_index;
    return -beta * time_gap_from_position(x_a, p) +
           (1.0 - beta) * exposure_simple(x_a, p.position, p.crash);
}

StationarityCubic stationarity_cubic(const StrategyProblem& p) {
    p.validate();
    const double beta = p.risk_index;
    const double root_c1 = std::sqrt(p.cd_front);
    const double slope = p.crash.intensity / p.crash.n_riders *
                         (involvement_ratio(p.position, p.crash.omega) - 1.0);
    return {beta * root_c1 * p.cd_lurk / 2.0, -1.5 * beta * root_c1,
            beta + (1.0 - beta) * slope};
}

std::optional<InteriorOptimum> interior_optimum(const StrategyProblem& p) {
    p.validate();
    if (!(p.risk_index > 0.0)) {
        return std::nullopt;
    }
    const StationarityCubic cubic = stationarity_cubic(p);
    const double lower = min_attack_position(p);
    std::optional<InteriorOptimum> best;
    double best_value = std::numeric_limits<double>::infinity();
    for (double eta : numerics::solve_cubic_real(cubic.a3, cubic.a1, cubic.a0)) {
        if (!(eta > 0.0)) {
            continue;
        }
        const double denom = 1.0 - p.cd_lurk * eta * eta;
        if (!(denom > 0.0)) {
            continue;
        }
        const double x = (1.0 - p.energy_budget * eta * eta) / denom;
        if (!(x > lower) || !(x < 1.0)) {
            continue;
        }
        const double value = objective(x, p);
        if (value < best_value) {
            best_value = value;
            best = InteriorOptimum{eta, x, 1.0 / (std::sqrt(p.cd_front) * eta * eta * eta)};
        }
    }
    return best;
}

StrategyResult optimal_attack(const StrategyProblem& p) {
    p.validate();
    StrategyResult r;
    if (p.energy_budget < p.cd_lurk) {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        r.attack_position = nan;
        r.attack_power = nan;
        r.time_gap = 0.0;
        r.exposure = exposure_simple(1.0, p.position, p.crash);
        r.objective = failed_break_objective(p);
        r.branch = Branch::no_win;
        return r;
    }

    const double x_b = std::min(min_attack_position(p), 1.0);
    r.attack_position = x_b;
    r.exposure = exposure_simple(x_b, p.position, p.crash);
    r.branch = Branch::boundary;
    if (x_b > 0.0) {
        // The earliest break rides at exactly the lead drag and only ties the bunch.
        r.attack_power = p.cd_front;
        r.time_gap = 0.0;
        r.objective = (1.0 - p.risk_index) * r.exposure;
    } else {
        r.attack_power = attack_power(0.0, p);
        r.time_gap = time_gap_from_position(0.0, p);
        r.objective = objective(0.0, p);
    }

    if (const auto interior = interior_optimum(p)) {
        const double value = objective(interior->attack_position, p);
        if (value < r.objective - kTieTolerance) {
            r.attack_position = interior->attack_position;
            r.attack_power = interior->attack_power;
            r.time_gap = time_gap_from_position(interior->attack_position, p);
            r.exposure = exposure_simple(interior->attack_position, p.position, p.crash);
            r.objective = value;
            r.branch = Branch::interior;
        }
    }
    return r;
}

double critical_risk(const StrategyProblem& p) {
    p.validate();
    const double slope = p.crash.intensity / p.crash.n_riders *
                         (involvement_ratio(p.position, p.crash.omega) - 1.0);
    if (slope <= 0.0) {
        return 0.0;
    }
    return slope / (slope + 0.5 * (1.0 - p.cd_lurk / p.cd_front));
}

WinFrontier win_frontier(const StrategyProblem& p) {
    p.validate();
    const double beta_star = critical_risk(p);
    WinFrontier f;
    f.energy_min = p.risk_index <= beta_star ? p.cd_front : p.cd_lurk;
    const double e = p.energy_budget;
    if (e > p.cd_front) {
        f.risk_min = 0.0;
    } else if (e > p.cd_lurk) {
        f.risk_min = beta_star;
    }
    return f;
}

}  // namespace breakaway
