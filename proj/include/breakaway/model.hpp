#pragma once

#include <vector>

namespace breakaway {

/// Dimensional inputs (SI units).
struct PhysicalParams {
    double mass_avg = 70.0;           // kg, peloton mean rider mass
    double rider_mass = 70.0;         // kg
    double air_density = 1.225;       // kg/m^3
    double frontal_area = 0.4 / (0.9 / 1.43);  // m^2, so that <Cd> A = 0.4 with the default <Cd>
    double course_length = 1.0e5;     // m
    double peloton_power_avg = 150.0; // W
    double axle_spacing = 2.0;        // m
    double gravity = 9.81;            // m/s^2

    void validate() const;
};

struct DragParams {
    double cd_max = 0.9;
    double cd_min = 0.05;
    double decay = 0.25;

    void validate() const;
};

struct PelotonConfig {
    int n_riders = 75;
    int n_rows = 15;
    int n_cols = 5;
    DragParams drag{};
    double cd_avg = 0.9 / 1.43;  // chosen so the lead rider sees C_d = 1.43

    void validate() const;
};

struct ScaleSet {
    double time_scale = 0.0;     // s
    double energy_scale = 0.0;   // J
    double inertia = 0.0;        // epsilon
    double spacing_ratio = 0.0;  // delta = d / L
    double gravity_ratio = 0.0;  // gamma, gravity over drag
    double mass_ratio = 1.0;     // rider mass over peloton mean
};

ScaleSet scale_factors(const PhysicalParams& phys, const PelotonConfig& peloton);

/// Raw drag coefficient at `depth` rows behind the front; negative depth is ahead of the group.
double drag_dimensional(double depth, const DragParams& drag);

/// Drag of drafting position i (1 = front), relative to the peloton mean.
double drag_dimensionless(double position, const PelotonConfig& peloton);

/// Mean raw drag over the grid, each row sharing one depth.
double peloton_average_drag(const PelotonConfig& peloton);

/// v = (P / C_d)^(1/3).
double quasi_steady_speed(double power, double drag);

/// Dimensionless power as a function of time, built from consecutive segments.
/// Each segment evaluates floor + amplitude * exp(-rate * (t - start)) until the
/// next segment starts. Negative values are clamped to zero.
class PowerProfile {
public:
    struct Segment {
        double start = 0.0;
        double floor = 0.0;
        double amplitude = 0.0;
        double rate = 0.0;
    };

    static PowerProfile constant(double power);
    /// Lurk at p_lurk until t_attack, then decay from p_max toward p_sustain at rate mu.
    static PowerProfile fatigue(double p_lurk, double t_attack, double p_max, double p_sustain,
                                double mu);

    PowerProfile& then_constant(double start, double power);
    PowerProfile& then_exponential(double start, double peak, double floor, double rate);

    double operator()(double t) const;
    /// Integral of the clamped power over [0, t], in closed form.
    double energy(double t) const;

    const std::vector<Segment>& segments() const { return segments_; }

private:
    void append(const Segment& segment);
    std::vector<Segment> segments_;
};

double energy_consumed(const PowerProfile& profile, double t);

}  // namespace breakaway
