#pragma once

#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "breakaway/numerics.hpp"

namespace breakaway::ode {

using State = std::vector<double>;
using Rhs = std::function<void(double t, std::span<const double> y, std::span<double> dydt)>;

enum class Method {
    explicit_rk45,  ///< Dormand-Prince 5(4) with dense output.
    implicit_bdf2,  ///< Variable-step BDF2 with Newton iterations, for stiff runs.
};

/// Stops (or records) the integration where `condition(t, y)` crosses zero.
/// direction > 0 only triggers on rising crossings, < 0 on falling, 0 on both.
struct Event {
    std::string name;
    std::function<double(double t, std::span<const double> y)> condition;
    int direction = 0;
    bool terminal = true;
};

struct EventRecord {
    std::size_t event_index = 0;
    double t = 0.0;
    State y;
};

struct Settings {
    numerics::SolverSettings tolerance{1e-10, 1e-8, 200, 1.6};
    Method method = Method::explicit_rk45;
    double initial_step = 0.0;  ///< 0 selects a step from the initial derivative.
    double max_step = std::numeric_limits<double>::infinity();
    bool adaptive = true;       ///< false takes fixed steps of `initial_step`.
    std::size_t max_steps = 50'000'000;
};

/// One accepted step with its interpolant y(t0 + s*h) = y0 + h * sum_j c_j s^(j+1).
struct DenseSegment {
    double t0 = 0.0;
    double h = 0.0;
    State y0;
    std::vector<double> coefficients;  // dim * 4, row-major by component
};

class Solution {
public:
    std::vector<double> t;
    std::vector<State> y;
    std::vector<EventRecord> events;
    bool terminated_by_event = false;
    std::size_t rejected_steps = 0;

    /// Dense-output state at time `time` inside the integrated range.
    State at(double time) const;

    double t_final() const { return t.back(); }
    const State& y_final() const { return y.back(); }

    std::vector<DenseSegment> segments;
};

/// Integrates y' = rhs(t, y) from t0 toward t_end (t_end > t0), stopping at the
/// first terminal event. Events are localized to `settings.tolerance.abs_tol` in t.
Solution solve(const Rhs& rhs, State y0, double t0, double t_end,
               const std::vector<Event>& events = {}, const Settings& settings = {});

}  // namespace breakaway::ode
