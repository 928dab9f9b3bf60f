#include "breakaway/numerics.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <cmath>
#include <numbers>
#include <queue>
#include <string>

#include "breakaway/errors.hpp"

namespace breakaway::numerics {

void SolverSettings::validate() const {
    if (!(abs_tol > 0.0) || !(rel_tol > 0.0)) {
        throw DomainError("solver tolerances must be positive");
    }
    if (max_iterations < 1) {
        throw DomainError("max_iterations must be at least 1");
    }
    if (!(bracket_expansion > 1.0)) {
        throw DomainError("bracket_expansion must exceed 1");
    }
}

namespace {

double polish_cubic_root(double a3, double a1, double a0, double y) {
    // A few Newton steps; stop as soon as the residual stops shrinking.
    double residual = std::fabs((a3 * y * y + a1) * y + a0);
    for (int k = 0; k < 4 && residual > 0.0; ++k) {
        const double slope = 3.0 * a3 * y * y + a1;
        if (slope == 0.0) {
            break;
        }
        const double next = y - ((a3 * y * y + a1) * y + a0) / slope;
        const double next_residual = std::fabs((a3 * next * next + a1) * next + a0);
        if (!(next_residual < residual)) {
            break;
        }
        y = next;
        residual = next_residual;
    }
    return y;
}

}  // namespace

std::vector<double> solve_cubic_real(double a3, double a1, double a0) {
    if (a3 == 0.0) {
        if (a1 == 0.0) {
            if (a0 == 0.0) {
                throw DomainError("solve_cubic_real: all coefficients vanish");
            }
            return {};
        }
        return {-a0 / a1};
    }

    const double p = a1 / a3;
    const double q = a0 / a3;
    std::vector<double> roots;

    if (p == 0.0) {
        roots.push_back(std::cbrt(-q));
    } else {
        const double disc = q * q / 4.0 + p * p * p / 27.0;
        if (disc < 0.0) {
            // Three distinct real roots (p < 0 here).
            const double r = 2.0 * std::sqrt(-p / 3.0);
            const double arg = std::clamp(3.0 * q / (p * r), -1.0, 1.0);
            const double phi = std::acos(arg) / 3.0;
            for (int k = 0; k < 3; ++k) {
                roots.push_back(r * std::cos(phi - 2.0 * std::numbers::pi * k / 3.0));
            }
        } else {
            const double s = std::sqrt(disc);
            const double u = std::cbrt(-q / 2.0 - std::copysign(s, q));
            roots.push_back(u == 0.0 ? 0.0 : u - p / (3.0 * u));
            if (disc == 0.0 && u != 0.0) {
                // Double root at -u/2.
                roots.push_back(-roots.front() / 2.0);
            }
        }
    }

    for (double& y : roots) {
        y = polish_cubic_root(a3, a1, a0, y);
    }
    std::sort(roots.begin(), roots.end());
    return roots;
}

double find_root_bracketed(const ScalarFunction& f, double lo, double hi,
                           const SolverSettings& settings) {
    settings.validate();
    double a = lo;
    double b = hi;
    double fa = f(a);
    double fb = f(b);
    if (fa == 0.0) {
        return a;
    }
    if (fb == 0.0) {
        return b;
    }
    if (std::signbit(fa) == std::signbit(fb) || std::isnan(fa) || std::isnan(fb)) {
        throw BracketError("find_root_bracketed: no sign change on [" + std::to_string(lo) +
                           ", " + std::to_string(hi) + "]");
    }

    double c = a;
    double fc = fa;
    double d = b - a;
    double e = d;
    for (int iter = 0; iter < settings.max_iterations; ++iter) {
        if (std::signbit(fb) == std::signbit(fc)) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if (std::fabs(fc) < std::fabs(fb)) {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        const double tol = 2.0 * std::numeric_limits<double>::epsilon() * std::fabs(b) +
                           0.5 * settings.abs_tol;
        const double m = 0.5 * (c - b);
        if (std::fabs(m) <= tol || fb == 0.0) {
            return b;
        }
        if (std::fabs(e) >= tol && std::fabs(fa) > std::fabs(fb)) {
            double p;
            double q;
            const double s = fb / fa;
            if (a == c) {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                const double qa = fa / fc;
                const double r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if (p > 0.0) {
                q = -q;
            } else {
                p = -p;
            }
            if (2.0 * p < std::min(3.0 * m * q - std::fabs(tol * q), std::fabs(e * q))) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += std::fabs(d) > tol ? d : std::copysign(tol, m);
        fb = f(b);
    }
    throw ConvergenceError("find_root_bracketed: iteration limit reached");
}

std::pair<double, double> expand_bracket_upward(const ScalarFunction& f, double lo, double hi,
                                                double limit, const SolverSettings& settings) {
    settings.validate();
    const double f_lo = f(lo);
    double width = hi - lo;
    double upper = hi;
    for (int iter = 0; iter < settings.max_iterations; ++iter) {
        const double f_up = f(upper);
        if (std::signbit(f_up) != std::signbit(f_lo) || f_up == 0.0) {
            return {lo, upper};
        }
        if (upper >= limit) {
            break;
        }
        width *= settings.bracket_expansion;
        upper = std::min(lo + width, limit);
    }
    throw BracketError("expand_bracket_upward: no sign change before limit");
}

namespace {

// Gauss-Kronrod 7/15 nodes and weights on [-1, 1].
constexpr std::array<double, 8> kKronrodNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
    double a;
    double b;
    double value;
    double error;

    bool operator<(const Panel& other) const { return error < other.error; }
};

Panel gauss_kronrod_15(const ScalarFunction& f, double a, double b) {
    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const double f_center = f(center);
    double kronrod = kKronrodWeights[7] * f_center;
    double gauss = kGaussWeights[3] * f_center;
    for (int j = 0; j < 7; ++j) {
        const double dx = half * kKronrodNodes[j];
        const double pair = f(center - dx) + f(center + dx);
        kronrod += kKronrodWeights[j] * pair;
        if (j % 2 == 1) {
            gauss += kGaussWeights[j / 2] * pair;
        }
    }
    return {a, b, kronrod * half, std::fabs((kronrod - gauss) * half)};
}

}  // namespace

Quadrature integrate_adaptive(const ScalarFunction& f, double a, double b,
                              const SolverSettings& settings) {
    settings.validate();
    if (a == b) {
        return {};
    }
    std::priority_queue<Panel> panels;
    const Panel first = gauss_kronrod_15(f, a, b);
    panels.push(first);
    double total = first.value;
    double total_error = first.error;
    int evaluations = 15;

    for (int iter = 0; iter < settings.max_iterations; ++iter) {
        if (total_error <= std::max(settings.abs_tol, settings.rel_tol * std::fabs(total))) {
            return {total, total_error, evaluations};
        }
        const Panel worst = panels.top();
        panels.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        const Panel left = gauss_kronrod_15(f, worst.a, mid);
        const Panel right = gauss_kronrod_15(f, mid, worst.b);
        evaluations += 30;
        total += left.value + right.value - worst.value;
        total_error += left.error + right.error - worst.error;
        panels.push(left);
        panels.push(right);
    }
    // Re-sum to shed accumulated rounding in the running totals.
    total = 0.0;
    total_error = 0.0;
    while (!panels.empty()) {
        total += panels.top().value;
        total_error += panels.top().error;
        panels.pop();
    }
    if (total_error <= std::max(settings.abs_tol, settings.rel_tol * std::fabs(total))) {
        return {total, total_error, evaluations};
    }
    throw ConvergenceError("integrate_adaptive: tolerance not met, error estimate " +
                           std::to_string(total_error));
}

ScalarMinimum golden_section(const ScalarFunction& f, double lo, double hi,
                             const SolverSettings& settings) {
    settings.validate();
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo;
    double b = hi;
    double x1 = b - inv_phi * (b - a);
    double x2 = a + inv_phi * (b - a);
    double f1 = f(x1);
    double f2 = f(x2);
    for (int iter = 0; iter < settings.max_iterations && (b - a) > settings.abs_tol; ++iter) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        }
    }
    // Candidates include the interval ends so a minimum sitting on an end is kept.
    ScalarMinimum best{a, f(a)};
    for (const auto& [x, fx] : {std::pair{x1, f1}, std::pair{x2, f2}, std::pair{b, f(b)}}) {
        if (fx < best.value) {
            best = {x, fx};
        }
    }
    return best;
}

ScalarMinimum minimize_scalar(const ScalarFunction& f, double lo, double hi,
                              const SolverSettings& settings, int grid_points) {
    settings.validate();
    if (!(lo < hi)) {
        throw DomainError("minimize_scalar: lo must be below hi");
    }
    grid_points = std::max(grid_points, 3);
    const double step = (hi - lo) / (grid_points - 1);
    int best_index = 0;
    double best_value = f(lo);
    for (int k = 1; k < grid_points; ++k) {
        const double x = k + 1 == grid_points ? hi : lo + k * step;
        const double value = f(x);
        if (value < best_value) {
            best_value = value;
            best_index = k;
        }
    }
    const double best_x = best_index + 1 == grid_points ? hi : lo + best_index * step;
    const double left = std::max(lo, best_x - step);
    const double right = std::min(hi, best_x + step);
    const ScalarMinimum refined = golden_section(f, left, right, settings);
    if (refined.value < best_value) {
        return refined;
    }
    return {best_x, best_value};
}

}  // namespace breakaway::numerics
