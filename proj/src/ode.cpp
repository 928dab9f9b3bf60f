#include "breakaway/ode.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>

#include "breakaway/errors.hpp"

namespace breakaway::ode {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5.0, c3 = 3.0 / 10.0, c4 = 4.0 / 5.0, c5 = 8.0 / 9.0;
constexpr double a21 = 1.0 / 5.0;
constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                 a54 = -212.0 / 729.0;
constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                 a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
constexpr std::array<double, 7> b5 = {35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0,
                                      -2187.0 / 6784.0, 11.0 / 84.0, 0.0};
// b5 - b4: embedded error weights.
constexpr std::array<double, 7> e5 = {71.0 / 57600.0, 0.0, -71.0 / 16695.0, 71.0 / 1920.0,
                                      -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0};
// Continuous extension (Shampine): y(t0 + s h) = y0 + h * K^T P [s, s^2, s^3, s^4].
constexpr std::array<std::array<double, 4>, 7> dense_p = {{
    {1.0, -8048581381.0 / 2820520608.0, 8663915743.0 / 2820520608.0,
     -12715105075.0 / 11282082432.0},
    {0.0, 0.0, 0.0, 0.0},
    {0.0, 131558114200.0 / 32700410799.0, -68118460800.0 / 10900136933.0,
     87487479700.0 / 32700410799.0},
    {0.0, -1754552775.0 / 470086768.0, 14199869525.0 / 1410260304.0,
     -10690763975.0 / 1880347072.0},
    {0.0, 127303824393.0 / 49829197408.0, -318862633887.0 / 49829197408.0,
     701980252875.0 / 199316789632.0},
    {0.0, -282668133.0 / 205662961.0, 2019193451.0 / 616988883.0,
     -1453857185.0 / 822651844.0},
    {0.0, 40617522.0 / 29380423.0, -110615467.0 / 29380423.0, 69997945.0 / 29380423.0},
}};

struct Trial {
    State y1;
    State f1;
    std::vector<double> coefficients;
    double error_norm = 0.0;
};

bool all_finite(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

double weighted_rms(std::span<const double> err, std::span<const double> y0,
                    std::span<const double> y1, const numerics::SolverSettings& tol) {
    double sum = 0.0;
    for (std::size_t i = 0; i < err.size(); ++i) {
        const double scale =
            tol.abs_tol + tol.rel_tol * std::max(std::fabs(y0[i]), std::fabs(y1[i]));
        const double r = err[i] / scale;
        sum += r * r;
    }
    return std::sqrt(sum / static_cast<double>(err.size()));
}

class Rk45 {
public:
    Rk45(const Rhs& rhs, std::size_t dim) : rhs_(rhs), dim_(dim) {
        for (auto& k : k_) {
            k.assign(dim, 0.0);
        }
        tmp_.assign(dim, 0.0);
    }

    Trial step(double t, const State& y, const State& f0, double h,
               const numerics::SolverSettings& tol) {
        const std::size_t n = dim_;
        k_[0] = f0;
        auto stage = [&](int idx, double c, std::initializer_list<double> a) {
            for (std::size_t i = 0; i < n; ++i) {
                double acc = 0.0;
                int j = 0;
                for (double aij : a) {
                    acc += aij * k_[j++][i];
                }
                tmp_[i] = y[i] + h * acc;
            }
            rhs_(t + c * h, tmp_, k_[idx]);
        };
        stage(1, c2, {a21});
        stage(2, c3, {a31, a32});
        stage(3, c4, {a41, a42, a43});
        stage(4, c5, {a51, a52, a53, a54});
        stage(5, 1.0, {a61, a62, a63, a64, a65});

        Trial trial;
        trial.y1.assign(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            double acc = 0.0;
            for (int j = 0; j < 6; ++j) {
                acc += b5[j] * k_[j][i];
            }
            trial.y1[i] = y[i] + h * acc;
        }
        trial.f1.assign(n, 0.0);
        rhs_(t + h, trial.y1, k_[6]);
        trial.f1 = k_[6];

        std::vector<double> err(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            double acc = 0.0;
            for (int j = 0; j < 7; ++j) {
                acc += e5[j] * k_[j][i];
            }
            err[i] = h * acc;
        }
        const bool finite = all_finite(trial.y1) && all_finite(trial.f1) && all_finite(err);
        trial.error_norm =
            finite ? weighted_rms(err, y, trial.y1, tol) : std::numeric_limits<double>::infinity();

        trial.coefficients.assign(n * 4, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            for (int p = 0; p < 4; ++p) {
                double acc = 0.0;
                for (int j = 0; j < 7; ++j) {
                    acc += k_[j][i] * dense_p[j][p];
                }
                trial.coefficients[i * 4 + p] = acc;
            }
        }
        return trial;
    }

private:
    const Rhs& rhs_;
    std::size_t dim_;
    std::array<State, 7> k_;
    State tmp_;
};

// Solves the small dense system A x = b in place (partial pivoting).
bool solve_linear(std::vector<double>& a, std::vector<double>& b, std::size_t n) {
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r) {
            if (std::fabs(a[r * n + col]) > std::fabs(a[pivot * n + col])) {
                pivot = r;
            }
        }
        if (a[pivot * n + col] == 0.0) {
            return false;
        }
        if (pivot != col) {
            for (std::size_t c = 0; c < n; ++c) {
                std::swap(a[col * n + c], a[pivot * n + c]);
            }
            std::swap(b[col], b[pivot]);
        }
        for (std::size_t r = col + 1; r < n; ++r) {
            const double factor = a[r * n + col] / a[col * n + col];
            for (std::size_t c = col; c < n; ++c) {
                a[r * n + c] -= factor * a[col * n + c];
            }
            b[r] -= factor * b[col];
        }
    }
    for (std::size_t r = n; r-- > 0;) {
        double acc = b[r];
        for (std::size_t c = r + 1; c < n; ++c) {
            acc -= a[r * n + c] * b[c];
        }
        b[r] = acc / a[r * n + r];
    }
    return true;
}

std::vector<double> hermite_coefficients(const State& y0, const State& y1, const State& f0,
                                         const State& f1, double h) {
    const std::size_t n = y0.size();
    std::vector<double> c(n * 4, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double slope = (y1[i] - y0[i]) / h;
        c[i * 4 + 0] = f0[i];
        c[i * 4 + 1] = 3.0 * slope - 2.0 * f0[i] - f1[i];
        c[i * 4 + 2] = f0[i] + f1[i] - 2.0 * slope;
    }
    return c;
}

// Variable-step BDF2; the first step is backward Euler.
class Bdf2 {
public:
    Bdf2(const Rhs& rhs, std::size_t dim) : rhs_(rhs), dim_(dim) {}

    std::optional<Trial> step(double t, const State& y, const State& f0, double h,
                              const std::optional<std::pair<State, double>>& previous,
                              const numerics::SolverSettings& tol) {
        const std::size_t n = dim_;
        State history(n, 0.0);
        State predictor(n, 0.0);
        double beta;
        if (previous) {
            const auto& [y_prev, h_prev] = *previous;
            const double w = h / h_prev;
            const double a1 = (1.0 + w) * (1.0 + w) / (1.0 + 2.0 * w);
            const double a0 = -w * w / (1.0 + 2.0 * w);
            beta = (1.0 + w) / (1.0 + 2.0 * w);
            for (std::size_t i = 0; i < n; ++i) {
                history[i] = a1 * y[i] + a0 * y_prev[i];
                // Quadratic through y_prev, y with slope f0 at t, evaluated at t + h.
                const double curvature =
                    (y_prev[i] - y[i] + h_prev * f0[i]) / (h_prev * h_prev);
                predictor[i] = y[i] + h * f0[i] + curvature * h * h;
            }
        } else {
            beta = 1.0;
            history = y;
            for (std::size_t i = 0; i < n; ++i) {
                predictor[i] = y[i] + h * f0[i];
            }
        }

        const double t1 = t + h;
        State y1 = predictor;
        State f1(n, 0.0);
        rhs_(t1, y1, f1);

        // Jacobian by forward differences at the predictor.
        std::vector<double> jac(n * n, 0.0);
        State shifted = y1;
        State f_shift(n, 0.0);
        for (std::size_t c = 0; c < n; ++c) {
            const double dy = std::sqrt(std::numeric_limits<double>::epsilon()) *
                              std::max(1.0, std::fabs(y1[c]));
            shifted[c] = y1[c] + dy;
            rhs_(t1, shifted, f_shift);
            for (std::size_t r = 0; r < n; ++r) {
                jac[r * n + c] = (f_shift[r] - f1[r]) / dy;
            }
            shifted[c] = y1[c];
        }

        bool converged = false;
        for (int iter = 0; iter < 10; ++iter) {
            std::vector<double> a(n * n, 0.0);
            std::vector<double> residual(n, 0.0);
            for (std::size_t r = 0; r < n; ++r) {
                for (std::size_t c = 0; c < n; ++c) {
                    a[r * n + c] = (r == c ? 1.0 : 0.0) - beta * h * jac[r * n + c];
                }
                residual[r] = -(y1[r] - history[r] - beta * h * f1[r]);
            }
            if (!solve_linear(a, residual, n)) {
                return std::nullopt;
            }
            double update = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                y1[i] += residual[i];
                const double scale = tol.abs_tol + tol.rel_tol * std::fabs(y1[i]);
                update = std::max(update, std::fabs(residual[i]) / scale);
            }
            rhs_(t1, y1, f1);
            if (!all_finite(y1) || !all_finite(f1)) {
                return std::nullopt;
            }
            if (update < 1e-3) {
                converged = true;
                break;
            }
        }
        if (!converged) {
            return std::nullopt;
        }

        std::vector<double> err(n, 0.0);
        const double factor = previous ? 2.0 : 0.5;
        for (std::size_t i = 0; i < n; ++i) {
            err[i] = factor * (y1[i] - predictor[i]);
        }
        Trial trial;
        trial.error_norm = weighted_rms(err, y, y1, tol);
        trial.coefficients = hermite_coefficients(y, y1, f0, f1, h);
        trial.y1 = std::move(y1);
        trial.f1 = std::move(f1);
        return trial;
    }

private:
    const Rhs& rhs_;
    std::size_t dim_;
};

State evaluate_segment(const DenseSegment& seg, double time) {
    const std::size_t n = seg.y0.size();
    const double s = seg.h == 0.0 ? 0.0 : (time - seg.t0) / seg.h;
    State out(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double* c = &seg.coefficients[i * 4];
        out[i] = seg.y0[i] + seg.h * s * (c[0] + s * (c[1] + s * (c[2] + s * c[3])));
    }
    return out;
}

bool crosses(double g0, double g1, int direction) {
    if (g0 == 0.0 || std::isnan(g0) || std::isnan(g1)) {
        return false;
    }
    const bool rising = g0 < 0.0 && g1 >= 0.0;
    const bool falling = g0 > 0.0 && g1 <= 0.0;
    return (rising && direction >= 0) || (falling && direction <= 0);
}

double initial_step_guess(const State& y0, const State& f0, double span,
                          const numerics::SolverSettings& tol) {
    double d0 = 0.0;
    double d1 = 0.0;
    for (std::size_t i = 0; i < y0.size(); ++i) {
        const double scale = tol.abs_tol + tol.rel_tol * std::fabs(y0[i]);
        d0 = std::max(d0, std::fabs(y0[i]) / scale);
        d1 = std::max(d1, std::fabs(f0[i]) / scale);
    }
    double h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    return std::min(h, 0.1 * span);
}

}  // namespace

State Solution::at(double time) const {
    if (segments.empty()) {
        return y.front();
    }
    auto it = std::upper_bound(segments.begin(), segments.end(), time,
                               [](double value, const DenseSegment& s) { return value < s.t0; });
    const DenseSegment& seg = it == segments.begin() ? segments.front() : *std::prev(it);
    const double clamped = std::clamp(time, seg.t0, seg.t0 + seg.h);
    return evaluate_segment(seg, clamped);
}

Solution solve(const Rhs& rhs, State y0, double t0, double t_end, const std::vector<Event>& events,
               const Settings& settings) {
    settings.tolerance.validate();
    if (!(t_end > t0)) {
        throw DomainError("ode::solve: t_end must exceed t0");
    }
    if (y0.empty()) {
        throw DomainError("ode::solve: empty state");
    }
    if (!settings.adaptive && !(settings.initial_step > 0.0)) {
        throw DomainError("ode::solve: fixed-step mode needs a positive initial_step");
    }

    const std::size_t n = y0.size();
    const auto& tol = settings.tolerance;
    Rk45 rk(rhs, n);
    Bdf2 bdf(rhs, n);

    Solution sol;
    double t = t0;
    State y = std::move(y0);
    State f(n, 0.0);
    rhs(t, y, f);
    sol.t.push_back(t);
    sol.y.push_back(y);

    std::vector<double> g(events.size());
    for (std::size_t e = 0; e < events.size(); ++e) {
        g[e] = events[e].condition(t, y);
    }

    double h = settings.initial_step > 0.0 ? settings.initial_step
                                           : initial_step_guess(y, f, t_end - t0, tol);
    std::optional<std::pair<State, double>> previous;  // BDF2 history
    const bool implicit = settings.method == Method::implicit_bdf2;

    for (std::size_t steps = 0; t < t_end; ++steps) {
        if (steps >= settings.max_steps) {
            throw ConvergenceError("ode::solve: step limit reached");
        }
        h = std::min({h, settings.max_step, t_end - t});
        const double h_floor = 16.0 * std::numeric_limits<double>::epsilon() *
                               std::max(std::fabs(t), 1e-300);
        if (h <= h_floor) {
            throw StiffnessError("ode::solve: step size underflow at t = " + std::to_string(t) +
                                 (implicit ? "" : "; consider the implicit BDF mode"));
        }

        std::optional<Trial> trial;
        if (implicit) {
            trial = bdf.step(t, y, f, h, previous, tol);
        } else {
            trial = rk.step(t, y, f, h, tol);
        }
        const double err = trial ? trial->error_norm : std::numeric_limits<double>::infinity();
        if (settings.adaptive && !(err <= 1.0)) {
            ++sol.rejected_steps;
            const double shrink =
                std::isfinite(err) ? std::max(0.2, 0.9 * std::pow(err, implicit ? -1.0 / 3.0 : -0.2))
                                   : 0.25;
            h *= shrink;
            continue;
        }
        if (!trial) {
            throw ConvergenceError("ode::solve: implicit corrector failed in fixed-step mode");
        }

        DenseSegment segment{t, h, y, trial->coefficients};

        // Earliest event crossing inside this step.
        std::optional<std::pair<std::size_t, double>> first;
        std::vector<std::pair<std::size_t, double>> crossings;
        for (std::size_t e = 0; e < events.size(); ++e) {
            const double g1 = events[e].condition(t + h, trial->y1);
            if (!crosses(g[e], g1, events[e].direction)) {
                continue;
            }
            numerics::SolverSettings root_tol = tol;
            root_tol.max_iterations = 200;
            double tau;
            if (implicit) {
                tau = numerics::find_root_bracketed(
                    [&](double s) {
                        return events[e].condition(t + s, evaluate_segment(segment, t + s));
                    },
                    0.0, h, root_tol);
            } else {
                // Re-step from the segment start so the located state carries
                // full integrator accuracy rather than interpolation error.
                tau = numerics::find_root_bracketed(
                    [&](double s) {
                        if (s <= 0.0) {
                            return g[e];
                        }
                        const Trial sub = rk.step(t, y, f, s, tol);
                        return events[e].condition(t + s, sub.y1);
                    },
                    0.0, h, root_tol);
            }
            crossings.emplace_back(e, tau);
            if (events[e].terminal && (!first || tau < first->second)) {
                first = std::pair{e, tau};
            }
        }

        if (first) {
            const double tau = first->second;
            Trial sub;
            if (implicit) {
                sub.y1 = evaluate_segment(segment, t + tau);
                sub.coefficients = segment.coefficients;
            } else {
                sub = rk.step(t, y, f, tau, tol);
            }
            for (const auto& [e, te] : crossings) {
                if (te <= tau && e != first->first && !events[e].terminal) {
                    sol.events.push_back({e, t + te, evaluate_segment(segment, t + te)});
                }
            }
            if (implicit) {
                // Keep the full-step interpolant; evaluation is clamped at the event time.
                segment.h = h;
            } else {
                segment = DenseSegment{t, tau, y, sub.coefficients};
            }
            sol.segments.push_back(segment);
            if (implicit) {
                sol.segments.back().h = tau;
                // Rescale the interpolant to the shortened interval.
                auto& c = sol.segments.back().coefficients;
                const double r = tau / h;
                for (std::size_t i = 0; i < n; ++i) {
                    c[i * 4 + 0] *= 1.0;
                    c[i * 4 + 1] *= r;
                    c[i * 4 + 2] *= r * r;
                    c[i * 4 + 3] *= r * r * r;
                }
            }
            sol.events.push_back({first->first, t + tau, sub.y1});
            sol.t.push_back(t + tau);
            sol.y.push_back(sub.y1);
            sol.terminated_by_event = true;
            return sol;
        }
        for (const auto& [e, te] : crossings) {
            sol.events.push_back({e, t + te, evaluate_segment(segment, t + te)});
        }

        sol.segments.push_back(std::move(segment));
        if (implicit) {
            previous = std::pair{y, h};
        }
        t = (t_end - (t + h) <= h_floor) ? t_end : t + h;
        y = std::move(trial->y1);
        f = std::move(trial->f1);
        for (std::size_t e = 0; e < events.size(); ++e) {
            g[e] = events[e].condition(t, y);
        }
        sol.t.push_back(t);
        sol.y.push_back(y);

        if (settings.adaptive) {
            const double grow =
                err == 0.0 ? 5.0
                           : std::min(5.0, std::max(0.2, 0.9 * std::pow(err, implicit ? -1.0 / 3.0
                                                                                    : -0.2)));
            h *= implicit ? std::min(grow, 2.0) : grow;
        }
    }
    return sol;
}

}  // namespace breakaway::ode
