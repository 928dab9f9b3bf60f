#pragma once

#include <optional>

#include "breakaway/flat_strategy.hpp"

namespace breakaway {

struct FatigueParams {
    double p_max = 4.0;
    double p_sustain = 0.46;
    double p_lurk = 0.46;
    double mu = 1.0;
    double attack_time = 0.5;

    void validate() const;
};

double power_at(double t, const FatigueParams& params);

/// Energy spent by t_f when attacking at x_a (= t_a) with params.p_max.
double total_energy(double x_a, double t_f, const FatigueParams& params);

/// Peak power that spends exactly `energy` by t_f. Throws InfeasibleError if the
/// budget leaves nothing for the burst.
double p_max_from_budget(double energy, double x_a, double t_f, double p_lurk, double p_sustain,
                         double mu);

/// Position at time t >= attack_time of a rider who attacked at params.attack_time.
double position_after_attack(double t, const FatigueParams& params, double cd_front);

/// Time the attacker crosses x = 1 (attack at x_a with peak power p_max).
double finish_time(double x_a, double p_max, const FatigueParams& params, double cd_front);

/// Solution of the budget and arrival equations for one attack position.
struct AttackSolve {
    double peak_power = 0.0;
    double finish_time = 0.0;
    int iterations = 0;
    double energy_residual = 0.0;
    double arrival_residual = 0.0;
    bool used_fallback = false;
};

/// Returns nothing when the budget cannot carry the rider to the line.
std::optional<AttackSolve> solve_attack(double x_a, const StrategyProblem& problem, double mu,
                                        double p_sustain);

struct FatigueResult {
    double attack_position = 0.0;
    double peak_power = 0.0;
    double finish_time = 1.0;
    double time_gap = 0.0;
    double exposure = 0.0;
    double objective = 0.0;
    Branch branch = Branch::no_win;
    bool converged = false;
    int iterations = 0;
    double energy_residual = 0.0;
    double arrival_residual = 0.0;
};

/// Objective for an attack at x_a; a break that never finishes ahead of the
/// peloton leaves the rider in the bunch for the whole race.
double fatigue_objective(double x_a, const StrategyProblem& problem, double mu, double p_sustain);

FatigueResult optimize_fatigue(const StrategyProblem& problem, double mu, double p_sustain);
/// Sustainable power defaults to the lurking power.
FatigueResult optimize_fatigue(const StrategyProblem& problem, double mu);

}  // namespace breakaway
