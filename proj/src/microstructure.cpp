#include "breakaway/microstructure.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "breakaway/errors.hpp"
#include "breakaway/numerics.hpp"

namespace breakaway {

namespace {

constexpr double kInnerHorizon = 1.0e4;

// Implicit relaxation time: tau = (m / C) [G(V) - G(v_f)], with a the terminal speed.
double relaxation_potential(double v, double a) {
    const double s3 = std::sqrt(3.0);
    return std::log((v * v + a * v + a * a) / ((a - v) * (a - v))) / (6.0 * a) -
           std::atan((2.0 * v + a) / (s3 * a)) / (s3 * a);
}

ode::Solution integrate_full(const MicroParams& p, double span, ode::Settings settings) {
    const double delta = p.gamma_ratio * p.eps * p.eps;
    // y = [slip relative to the bunch front, speed]; the bunch rides at unit speed.
    ode::Rhs rhs = [&p, delta](double, std::span<const double> y, std::span<double> dy) {
        const double c = p.drag_at_slip(y[0] / delta);
        dy[0] = y[1] - 1.0;
        dy[1] = (p.power / y[1] - c * y[1] * y[1]) / (p.eps * p.rider_mass);
    };
    std::vector<ode::Event> events{
        {"stall", [](double, std::span<const double> y) { return y[1] - 1e-6; }, -1, true}};
    settings.max_step = std::min(settings.max_step, p.eps / 20.0);
    auto sol = ode::solve(rhs, {-delta * (p.position - 1.0), 1.0}, 0.0, span, events, settings);
    if (sol.terminated_by_event) {
        throw StallError("full_ode_attack: rider stalls");
    }
    return sol;
}

}  // namespace

void MicroParams::validate() const {
    peloton.drag.validate();
    if (!(peloton.cd_avg > 0.0)) {
        throw DomainError("micro: cd_avg must be positive");
    }
    if (!(position >= 1.0)) {
        throw DomainError("micro: position must be at least 1");
    }
    if (!(power > 0.0)) {
        throw DomainError("micro: attack power must be positive");
    }
    if (!(rider_mass > 0.0) || !(gamma_ratio > 0.0)) {
        throw DomainError("micro: rider mass and gamma ratio must be positive");
    }
    if (!(eps > 0.0)) {
        throw DomainError("micro: eps must be positive");
    }
    if (order != 0 && order != 1) {
        throw DomainError("micro: order must be 0 or 1");
    }
}

double MicroParams::drag_at_slip(double zeta) const {
    return drag_dimensional(-zeta, peloton.drag) / peloton.cd_avg;
}

PassageResult peloton_passage(const MicroParams& p) {
    p.validate();
    PassageResult r;
    const double start = -(p.position - 1.0);
    if (start == 0.0) {
        return r;
    }
    if (!(p.power > p.drag_at_slip(start))) {
        throw InfeasibleError("rider never reaches the front: power does not beat drafting drag");
    }
    const double sigma = p.order == 1 ? p.gamma_ratio * std::sqrt(p.eps) : 0.0;
    const double inertia = p.gamma_ratio * p.rider_mass;
    ode::Rhs rhs = [&p, sigma, inertia](double, std::span<const double> y, std::span<double> dy) {
        const double c = p.drag_at_slip(y[0]);
        dy[0] = y[1];
        dy[1] = (p.power - c - sigma * (p.power + 2.0 * c) * y[1]) / inertia;
    };
    std::vector<ode::Event> events{
        {"front", [](double, std::span<const double> y) { return y[0]; }, 1, true},
        {"stopped", [](double, std::span<const double> y) { return y[1]; }, -1, true},
    };
    ode::Settings settings;
    settings.tolerance = {1e-12, 1e-11, 300, 1.6};
    r.inner = ode::solve(rhs, {start, 0.0}, 0.0, kInnerHorizon, events, settings);
    if (!r.inner.terminated_by_event || r.inner.events.back().event_index != 0) {
        throw InfeasibleError("rider never reaches the front of the peloton");
    }
    r.duration = r.inner.t_final();
    r.front_slip_rate = r.inner.y_final()[1];
    r.front_speed = 1.0 + p.gamma_ratio * std::sqrt(p.eps) * r.front_slip_rate;
    return r;
}

double post_escape_velocity(double tau, double v_f, double power, double cd_front, double m) {
    if (tau < 0.0) {
        throw DomainError("post_escape_velocity: tau must be non-negative");
    }
    return power * v_f /
           (cd_front * v_f + (power - cd_front * v_f) * std::exp(-power * tau / m));
}

double relaxation_velocity(double tau, double v_f, double power, double cd_front, double m) {
    if (tau < 0.0) {
        throw DomainError("relaxation_velocity: tau must be non-negative");
    }
    if (!(power > 0.0) || !(cd_front > 0.0) || !(m > 0.0) || !(v_f > 0.0)) {
        throw DomainError("relaxation_velocity: inputs must be positive");
    }
    const double a = std::cbrt(power / cd_front);
    if (tau == 0.0 || v_f == a) {
        return v_f;
    }
    const double g0 = relaxation_potential(v_f, a);
    auto elapsed = [&](double v) { return m / cd_front * (relaxation_potential(v, a) - g0) - tau; };
    // The speed approaches a monotonically from v_f; stop short of the pole at a.
    const double near = v_f < a ? a * (1.0 - 1e-15) : a * (1.0 + 1e-15);
    if (elapsed(near) <= 0.0) {
        return a;
    }
    const double lo = std::min(v_f, near);
    const double hi = std::max(v_f, near);
    return numerics::find_root_bracketed(elapsed, lo, hi, {1e-15, 1e-14, 400, 1.6});
}

LayerSolution::LayerSolution(const MicroParams& params)
    : params_(params), passage_(peloton_passage(params)) {}

double LayerSolution::terminal_speed() const {
    return std::cbrt(params_.power / params_.cd_front());
}

double LayerSolution::relaxation(double tau) const {
    return relaxation_velocity(tau, passage_.front_speed, params_.power, params_.cd_front(),
                               params_.rider_mass);
}

double LayerSolution::front_time() const {
    return passage_.duration * std::pow(params_.eps, 1.5);
}

double LayerSolution::velocity(double s) const {
    if (s < 0.0) {
        return 1.0;
    }
    const double inner_scale = std::pow(params_.eps, 1.5);
    if (s < front_time()) {
        const double slip_rate = passage_.inner.at(s / inner_scale)[1];
        return 1.0 + params_.gamma_ratio * std::sqrt(params_.eps) * slip_rate;
    }
    return relaxation((s - front_time()) / params_.eps);
}

VelocitySeries full_ode_attack(const MicroParams& p, double span, const ode::Settings& settings) {
    p.validate();
    if (!(span > 0.0)) {
        throw DomainError("full_ode_attack: span must be positive");
    }
    const auto sol = integrate_full(p, span, settings);
    VelocitySeries out;
    for (std::size_t k = 0; k < sol.t.size(); ++k) {
        out.times.push_back(sol.t[k]);
        out.slips.push_back(sol.y[k][0]);
        out.velocities.push_back(sol.y[k][1]);
    }
    return out;
}

LayerComparison compare_layers(const MicroParams& p, double span, int points) {
    p.validate();
    if (!(span > 0.0)) {
        span = 12.0 * p.eps;
    }
    points = std::max(points, 3);
    ode::Settings settings;
    settings.tolerance = {1e-13, 1e-11, 300, 1.6};
    const auto sol = integrate_full(p, span, settings);

    const LayerSolution layers(p);
    LayerComparison cmp;
    for (int k = 0; k < points; ++k) {
        const double t = k + 1 == points ? span : span * k / (points - 1);
        const auto y = sol.at(t);
        cmp.full.times.push_back(t);
        cmp.full.slips.push_back(y[0]);
        cmp.full.velocities.push_back(y[1]);
        const double v = layers.velocity(t);
        cmp.composite.push_back(v);
        cmp.max_relative_deviation = std::max(cmp.max_relative_deviation, std::fabs(v - y[1]) / y[1]);
    }
    cmp.terminal_speed = layers.terminal_speed();
    cmp.full_final_speed = sol.y_final()[1];
    const auto& v = cmp.full.velocities;
    cmp.full_peak_speed = *std::max_element(v.begin(), v.end());

    // Count rise-to-fall turns, ignoring rounding-level wiggles.
    int last_sign = 0;
    for (std::size_t k = 1; k < v.size(); ++k) {
        const double d = v[k] - v[k - 1];
        const int sign = d > 1e-12 ? 1 : (d < -1e-12 ? -1 : 0);
        if (sign == 0) {
            continue;
        }
        if (last_sign == 1 && sign == -1) {
            ++cmp.interior_maxima;
        }
        last_sign = sign;
    }
    return cmp;
}

}  // namespace breakaway
