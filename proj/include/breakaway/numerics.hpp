#pragma once

#include <functional>
#include <vector>

namespace breakaway::numerics {

struct SolverSettings {
    double abs_tol = 1e-10;
    double rel_tol = 1e-8;
    int max_iterations = 200;
    double bracket_expansion = 1.6;

    void validate() const;
};

using ScalarFunction = std::function<double(double)>;

/// Real roots of a3*y^3 + a1*y + a0 = 0 in ascending order.
///
/// Uses the trigonometric form when three real roots exist and Cardano's
/// formula otherwise; each root receives a Newton polish. A vanishing cubic
/// coefficient degrades to the linear equation.
std::vector<double> solve_cubic_real(double a3, double a1, double a0);

/// Brent's method on [lo, hi]. Requires f(lo) * f(hi) <= 0.
double find_root_bracketed(const ScalarFunction& f, double lo, double hi,
                           const SolverSettings& settings = {});

/// Grows [lo, hi] geometrically toward `limit` until f changes sign.
/// Returns the bracket, or throws BracketError when `limit` is reached first.
std::pair<double, double> expand_bracket_upward(const ScalarFunction& f, double lo, double hi,
                                                double limit, const SolverSettings& settings = {});

struct Quadrature {
    double value = 0.0;
    double error = 0.0;
    int evaluations = 0;
};

/// Globally adaptive Gauss-Kronrod (7/15) quadrature.
Quadrature integrate_adaptive(const ScalarFunction& f, double a, double b,
                              const SolverSettings& settings = {});

struct ScalarMinimum {
    double argmin = 0.0;
    double value = 0.0;
};

/// Coarse grid scan followed by golden-section refinement around the best
/// grid point. Ties resolve to the smallest argument.
ScalarMinimum minimize_scalar(const ScalarFunction& f, double lo, double hi,
                              const SolverSettings& settings = {}, int grid_points = 256);

/// Golden-section search on [lo, hi] assuming a single local minimum inside.
ScalarMinimum golden_section(const ScalarFunction& f, double lo, double hi,
                             const SolverSettings& settings = {});

}  // namespace breakaway::numerics
