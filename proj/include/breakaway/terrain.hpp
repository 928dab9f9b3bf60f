#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "breakaway/model.hpp"
#include "breakaway/ode.hpp"

namespace breakaway {

/// Course elevation h(x) on [0, 1], in units of the course length.
class CourseProfile {
public:
    /// h += sin_amplitude * sin(2 pi f x) + cos_amplitude * cos(2 pi f x)
    struct Harmonic {
        double sin_amplitude = 0.0;
        double cos_amplitude = 0.0;
        double frequency = 1.0;
    };

    static CourseProfile flat();
    static CourseProfile constant_grade(double slope);
    static CourseProfile harmonics(double offset, std::vector<Harmonic> terms);
    /// Rolling demo course with two climbs and two descents.
    static CourseProfile hilly_demo();
    /// Monotone cubic through (x, h); x must run strictly upward from 0 to 1.
    static CourseProfile table(std::vector<double> x, std::vector<double> h);
    /// Two numeric columns (x, h), optional header line, '#' comments.
    static CourseProfile parse_table(std::istream& in);
    static CourseProfile load_table(const std::string& path);

    double height(double x) const { return height_(x); }
    double slope(double x) const { return slope_(x); }
    const std::string& description() const { return description_; }

private:
    CourseProfile(std::function<double(double)> h, std::function<double(double)> dh,
                  std::string description);

    std::function<double(double)> height_;
    std::function<double(double)> slope_;
    std::string description_;
};

/// Inclination angle arctan(h'(x)).
double steepness(const CourseProfile& profile, double x);

struct Trajectory {
    std::vector<double> times;
    std::vector<double> positions;
    std::vector<double> velocities;
    std::vector<double> powers;
    std::vector<double> cumulative_energy;
    double finish_time = 0.0;
    /// Spread of finish_time against a looser-tolerance rerun (0 unless requested).
    double finish_time_error = 0.0;

    std::size_t size() const { return times.size(); }
};

struct TerrainSettings {
    ode::Settings ode{};
    /// Largest gap between stored samples, in t (inertial runs) or x (quasi-steady runs).
    double sample_spacing = 1e-4;
    /// Rerun at 100x looser tolerance and report the finish-time spread.
    bool estimate_error = false;
    /// Give up if the peloton has not finished by this time.
    double time_horizon = 1.0e3;
};

/// Uses scales.inertia (epsilon; 0 selects the quasi-steady mode), scales.gravity_ratio
/// and scales.mass_ratio (rider mass over the peloton mean).
Trajectory simulate_peloton(const CourseProfile& profile, const ScaleSet& scales,
                            const TerrainSettings& settings = {});

/// Power a rider with drag cd_lurk needs to hold the peloton's speed v, given
/// the peloton rides at unit power. Never negative.
double lurking_power_at(double peloton_speed, double cd_lurk, double rider_mass);

/// Lurking power along a peloton trajectory for drafting position i.
std::vector<double> lurking_power(double position, const Trajectory& peloton,
                                  const PelotonConfig& config, const ScaleSet& scales);

struct RiderSpec {
    double cd_lurk = 0.46;
    double cd_front = 1.43;
};

struct BreakawayResult {
    Trajectory rider;
    Trajectory peloton;
    double time_gap = 0.0;  // peloton finish minus rider finish
    double rider_energy = 0.0;
    double peloton_energy = 0.0;
    bool caught = false;
    double catch_time = 0.0;
};

/// The rider sits in the bunch until x_a, then rides solo with `attack` (time
/// measured from the attack). A rider the peloton catches rejoins it and
/// finishes with the group.
BreakawayResult simulate_breakaway(double x_a, const PowerProfile& attack, const RiderSpec& rider,
                                   const CourseProfile& profile, const ScaleSet& scales,
                                   const TerrainSettings& settings = {});

/// Positive root of cd v^3 + mass * gravity * sin(theta) v - power = 0.
double quasi_steady_speed_on_grade(double power, double cd, double mass, double gravity,
                                   double sin_theta);

}  // namespace breakaway
