#pragma once

#include <optional>
#include <string>

#include "breakaway/crash.hpp"

namespace breakaway {

struct StrategyProblem {
    double energy_budget = 1.2;  // E*
    double risk_index = 0.5;     // beta
    double position = 5.0;       // drafting index i
    double cd_front = 1.43;      // C_{d,1}
    double cd_lurk = 0.46;       // C_{d,i}, also the lurking power on the flat
    CrashModel crash{};

    void validate() const;
};

enum class Branch { boundary, interior, no_win };

std::string to_string(Branch branch);

struct StrategyResult {
    double attack_position = 0.0;
    double attack_power = 0.0;
    double time_gap = 0.0;
    double exposure = 0.0;
    double objective = 0.0;
    Branch branch = Branch::no_win;
};

/// Earliest position from which constant power P_a reaches the line on budget.
/// Values above 1 mean the budget cannot fund any attack at that power.
double earliest_attack_position(double attack_power, const StrategyProblem& problem);

/// Earliest feasible attack, reached at the minimum useful power P_a = C_{d,1}.
double min_attack_position(const StrategyProblem& problem);

/// Constant power that spends the whole budget when attacking at x_a.
double attack_power(double x_a, const StrategyProblem& problem);

/// Finish margin over the peloton when attacking at power P_a from its earliest position.
double time_gap_from_power(double attack_power, const StrategyProblem& problem);

/// Finish margin when attacking at x_a with the budget-exhausting power.
/// Zero for x_a below the minimum attack position (the break is caught).
double time_gap_from_position(double x_a, const StrategyProblem& problem);

/// Risk-weighted objective. An attack launched before the minimum attack position
/// fails and the rider spends the whole race in the bunch.
double objective(double x_a, const StrategyProblem& problem);

/// Coefficients (a3, a1, a0) of the stationarity cubic a3 eta^3 + a1 eta + a0 = 0.
struct StationarityCubic {
    double a3 = 0.0;
    double a1 = 0.0;
    double a0 = 0.0;

    double residual(double eta) const { return (a3 * eta * eta + a1) * eta + a0; }
};

StationarityCubic stationarity_cubic(const StrategyProblem& problem);

struct InteriorOptimum {
    double eta = 0.0;
    double attack_position = 0.0;
    double attack_power = 0.0;
};

std::optional<InteriorOptimum> interior_optimum(const StrategyProblem& problem);

StrategyResult optimal_attack(const StrategyProblem& problem);

/// Risk index above which an interior attack beats the earliest feasible one.
double critical_risk(const StrategyProblem& problem);

struct WinFrontier {
    double energy_min = 0.0;          // smallest budget that can win at this beta
    std::optional<double> risk_min;   // smallest beta that wins with this budget
};

WinFrontier win_frontier(const StrategyProblem& problem);

}  // namespace breakaway
