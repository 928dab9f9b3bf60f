#pragma once

#include <cstdint>
#include <functional>
#include <vector>

namespace breakaway {

/// Piecewise-constant drafting position along the course.
class PositionTrace {
public:
    struct Piece {
        double x_begin = 0.0;
        double position = 1.0;
    };

    /// Pieces must start at x = 0 with strictly increasing x_begin inside [0, 1).
    explicit PositionTrace(std::vector<Piece> pieces);

    static PositionTrace constant(double position);
    /// Lurk at `position` until x_a, lead from there to the finish.
    static PositionTrace simple_attack(double position, double x_a);

    double at(double x) const;
    const std::vector<Piece>& pieces() const { return pieces_; }
    /// Length of piece k inside [0, 1].
    double length(std::size_t k) const;

private:
    std::vector<Piece> pieces_;
};

struct CrashModel {
    double omega = 0.5;
    double intensity = 2.0;
    int n_riders = 75;
    /// Probability of a crash starting at k = 1..N (index k-1). Empty means uniform.
    std::vector<double> start_distribution;
    /// Involvement probability of position i given a start at k. Empty means exp(-omega (i-k)).
    std::function<double(double i, int k)> kernel;

    void validate() const;
    double start_probability(int k) const;
    double kernel_value(double i, int k) const;
};

double propagation_prob(double i, double k, double omega);

/// Probability that position i is caught up in a crash, given one occurs (uniform start).
double involvement_given_crash(double i, double omega, int n_riders);

/// Geometric factor (1 - e^{-omega i}) / (1 - e^{-omega}).
double involvement_ratio(double i, double omega);

double exposure(const PositionTrace& trace, const CrashModel& model);
double exposure_simple(double x_a, double position, const CrashModel& model);
/// Uses the model's start distribution and kernel, summing over k explicitly.
double exposure_general(const PositionTrace& trace, const CrashModel& model);

struct MonteCarloEstimate {
    double estimate = 0.0;
    double standard_error = 0.0;
    std::uint64_t trials = 0;
};

/// Expected crash involvements per race by simulation. Trials run in fixed blocks,
/// each with a generator seeded from (seed, block), so results do not depend on `threads`.
MonteCarloEstimate monte_carlo_exposure(const PositionTrace& trace, const CrashModel& model,
                                        std::uint64_t trials, std::uint64_t seed,
                                        unsigned threads = 0);

}  // namespace breakaway
