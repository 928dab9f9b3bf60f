#include "breakaway/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "breakaway/errors.hpp"

namespace breakaway {

namespace {

void require_positive(double value, const char* name) {
    if (!(value > 0.0) || !std::isfinite(value)) {
        throw DomainError(std::string(name) + " must be positive and finite");
    }
}

// Integral of max(floor + a e^{-r s}, 0) over s in [s0, s1].
double clamped_segment_integral(double floor, double a, double r, double s0, double s1) {
    if (s1 <= s0) {
        return 0.0;
    }
    auto value = [&](double s) { return floor + a * std::exp(-r * s); };
    auto primitive = [&](double s) {
        // floor s + a (1 - e^{-r s}) / r, written to survive r -> 0.
        const double burst = r == 0.0 ? a * s : -a * std::expm1(-r * s) / r;
        return floor * s + burst;
    };
    const double v0 = value(s0);
    const double v1 = value(s1);
    if (v0 >= 0.0 && v1 >= 0.0) {
        return primitive(s1) - primitive(s0);
    }
    if (v0 <= 0.0 && v1 <= 0.0) {
        return 0.0;
    }
    // The integrand is monotone, so exactly one sign change.
    const double crossing = std::log(-a / floor) / r;
    if (v0 > 0.0) {
        return primitive(crossing) - primitive(s0);
    }
    return primitive(s1) - primitive(crossing);
}

}  // namespace

void PhysicalParams::validate() const {
    require_positive(mass_avg, "mass_avg");
    require_positive(rider_mass, "rider_mass");
    require_positive(air_density, "air_density");
    require_positive(frontal_area, "frontal_area");
    require_positive(course_length, "course_length");
    require_positive(peloton_power_avg, "peloton_power_avg");
    require_positive(axle_spacing, "axle_spacing");
    require_positive(gravity, "gravity");
    if (axle_spacing / course_length >= 1e-3) {
        throw DomainError("axle_spacing must be much shorter than the course (d/L < 1e-3)");
    }
}

void DragParams::validate() const {
    if (!(cd_min > 0.0) || !(cd_max > cd_min)) {
        throw DomainError("drag coefficients need 0 < cd_min < cd_max");
    }
    require_positive(decay, "decay");
}

void PelotonConfig::validate() const {
    drag.validate();
    if (n_riders < 1 || n_rows < 1 || n_cols < 1) {
        throw DomainError("peloton sizes must be at least 1");
    }
    if (n_rows * n_cols != n_riders) {
        throw DomainError("n_riders must equal n_rows * n_cols");
    }
    if (!(cd_avg > drag.cd_min) || cd_avg > drag.cd_max) {
        throw DomainError("cd_avg must lie in (cd_min, cd_max]");
    }
}

ScaleSet scale_factors(const PhysicalParams& phys, const PelotonConfig& peloton) {
    phys.validate();
    require_positive(peloton.cd_avg, "cd_avg");
    const double drag_area = peloton.cd_avg * phys.air_density * phys.frontal_area;
    const double length3 = std::pow(phys.course_length, 3);
    ScaleSet s;
    s.time_scale = std::cbrt(drag_area * length3 / (2.0 * phys.peloton_power_avg));
    // Energy is power integrated over time, so its scale is P T.
    s.energy_scale = phys.peloton_power_avg * s.time_scale;
    s.inertia = 2.0 * phys.mass_avg / (phys.course_length * drag_area);
    s.spacing_ratio = phys.axle_spacing / phys.course_length;
    s.gravity_ratio = std::cbrt(2.0) * phys.mass_avg * phys.gravity /
                      (std::pow(phys.peloton_power_avg, 2.0 / 3.0) * std::cbrt(drag_area));
    s.mass_ratio = phys.rider_mass / phys.mass_avg;
    return s;
}

double drag_dimensional(double depth, const DragParams& drag) {
    if (depth < 0.0) {
        return drag.cd_max;
    }
    return drag.cd_min + (drag.cd_max - drag.cd_min) * std::exp(-drag.decay * depth);
}

double drag_dimensionless(double position, const PelotonConfig& peloton) {
    if (!(position >= 1.0)) {
        throw DomainError("drafting position must be at least 1");
    }
    require_positive(peloton.cd_avg, "cd_avg");
    return drag_dimensional(position - 1.0, peloton.drag) / peloton.cd_avg;
}

double peloton_average_drag(const PelotonConfig& peloton) {
    if (peloton.n_rows < 1 || peloton.n_cols < 1) {
        throw DomainError("peloton sizes must be at least 1");
    }
    double sum = 0.0;
    for (int row = 0; row < peloton.n_rows; ++row) {
        sum += drag_dimensional(row, peloton.drag);
    }
    // Every row holds n_cols riders, so the column count cancels.
    return sum / peloton.n_rows;
}

double quasi_steady_speed(double power, double drag) {
    if (!(drag > 0.0)) {
        throw DomainError("quasi_steady_speed: drag must be positive");
    }
    if (power < 0.0) {
        throw DomainError("quasi_steady_speed: power must be non-negative");
    }
    return std::cbrt(power / drag);
}

PowerProfile PowerProfile::constant(double power) {
    PowerProfile p;
    p.append({0.0, power, 0.0, 0.0});
    return p;
}

PowerProfile PowerProfile::fatigue(double p_lurk, double t_attack, double p_max,
                                   double p_sustain, double mu) {
    PowerProfile p = constant(p_lurk);
    p.then_exponential(t_attack, p_max, p_sustain, mu);
    return p;
}

PowerProfile& PowerProfile::then_constant(double start, double power) {
    append({start, power, 0.0, 0.0});
    return *this;
}

PowerProfile& PowerProfile::then_exponential(double start, double peak, double floor,
                                             double rate) {
    if (rate < 0.0) {
        throw DomainError("PowerProfile: decay rate must be non-negative");
    }
    append({start, floor, peak - floor, rate});
    return *this;
}

void PowerProfile::append(const Segment& segment) {
    if (!std::isfinite(segment.start) || !std::isfinite(segment.floor) ||
        !std::isfinite(segment.amplitude) || !std::isfinite(segment.rate)) {
        throw DomainError("PowerProfile: non-finite segment");
    }
    if (segments_.empty() && segment.start != 0.0) {
        throw DomainError("PowerProfile: the first segment must start at t = 0");
    }
    if (!segments_.empty() && segment.start < segments_.back().start) {
        throw DomainError("PowerProfile: segments must start in increasing time order");
    }
    // A later segment with the same start replaces the earlier one.
    if (!segments_.empty() && segment.start == segments_.back().start) {
        segments_.back() = segment;
        return;
    }
    segments_.push_back(segment);
}

double PowerProfile::operator()(double t) const {
    if (segments_.empty()) {
        return 0.0;
    }
    auto it = std::upper_bound(segments_.begin(), segments_.end(), t,
                               [](double value, const Segment& s) { return value < s.start; });
    const Segment& s = it == segments_.begin() ? segments_.front() : *std::prev(it);
    const double elapsed = std::max(t - s.start, 0.0);
    return std::max(s.floor + s.amplitude * std::exp(-s.rate * elapsed), 0.0);
}

double PowerProfile::energy(double t) const {
    if (t < 0.0) {
        throw DomainError("PowerProfile::energy: t must be non-negative");
    }
    double total = 0.0;
    for (std::size_t k = 0; k < segments_.size(); ++k) {
        const Segment& s = segments_[k];
        if (t <= s.start) {
            break;
        }
        const double end = k + 1 < segments_.size() ? std::min(segments_[k + 1].start, t) : t;
        total += clamped_segment_integral(s.floor, s.amplitude, s.rate, 0.0, end - s.start);
    }
    return total;
}

double energy_consumed(const PowerProfile& profile, double t) { return profile.energy(t); }

}  // namespace breakaway
