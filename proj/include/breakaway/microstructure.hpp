#pragma once

#include <vector>

#include "breakaway/model.hpp"
#include "breakaway/ode.hpp"

namespace breakaway {

/// Attack onset seen on the fast time scales. The rider starts `position - 1`
/// row spacings behind the front at peloton speed and switches to `power`.
struct MicroParams {
    double position = 5.0;
    double power = 2.0;
    double rider_mass = 1.0;
    double gamma_ratio = 1.0;  // row spacing over eps^2
    double eps = 0.005;
    /// 0 keeps only the force balance inside the bunch; 1 adds the O(sqrt(eps))
    /// drag and power corrections from the speed excess.
    int order = 1;
    PelotonConfig peloton{};

    void validate() const;
    /// Drag relative to the peloton mean at slip zeta (rows ahead of the front are negative depth).
    double drag_at_slip(double zeta) const;
    double cd_front() const { return drag_at_slip(1.0); }
};

struct PassageResult {
    double duration = 0.0;     // inner time to reach the front
    double front_speed = 1.0;  // speed on leaving the bunch
    double front_slip_rate = 0.0;
    ode::Solution inner;       // [zeta, dzeta/dtau]
};

/// Inner-layer passage through the bunch, stopped when the rider reaches the front.
PassageResult peloton_passage(const MicroParams& params);

/// Closed-form logistic relaxation quoted for the escape layer.
double post_escape_velocity(double tau, double front_speed, double power, double cd_front,
                            double rider_mass);

/// Exact solution of m V' = P / V - C V^2 started from front_speed.
double relaxation_velocity(double tau, double front_speed, double power, double cd_front,
                           double rider_mass);

class LayerSolution {
public:
    explicit LayerSolution(const MicroParams& params);

    double passage_duration() const { return passage_.duration; }
    double front_speed() const { return passage_.front_speed; }
    double terminal_speed() const;
    /// Escape-layer speed tau = (t - t_a - t_d) / eps after leaving the bunch.
    double relaxation(double tau) const;
    /// Composite speed at time s = t - t_a after the attack.
    double velocity(double s) const;
    /// Time from the attack to the front, in outer units.
    double front_time() const;

private:
    MicroParams params_;
    PassageResult passage_;
};

struct VelocitySeries {
    std::vector<double> times;   // since the attack
    std::vector<double> velocities;
    std::vector<double> slips;   // position relative to the bunch front
};

/// Integrates the full inertial equation with position-dependent drafting.
VelocitySeries full_ode_attack(const MicroParams& params, double span,
                               const ode::Settings& settings = {});

struct LayerComparison {
    VelocitySeries full;
    std::vector<double> composite;
    double max_relative_deviation = 0.0;
    double terminal_speed = 0.0;       // (P / C_{d,1})^(1/3)
    double full_final_speed = 0.0;
    double full_peak_speed = 0.0;
    int interior_maxima = 0;
};

/// Composite vs full equation on `points` uniform samples of [0, span].
/// A non-positive span picks 12 eps.
LayerComparison compare_layers(const MicroParams& params, double span = 0.0, int points = 2001);

}  // namespace breakaway
