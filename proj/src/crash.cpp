#include "breakaway/crash.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <random>
#include <thread>

#include "breakaway/errors.hpp"

namespace breakaway {

namespace {

// Trials run in fixed blocks, each with its own generator seeded from
// (seed, block), so the result does not depend on the thread count.
constexpr std::uint64_t kBlockTrials = 8192;

std::mt19937_64 block_generator(std::uint64_t seed, std::uint64_t block) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(block), static_cast<std::uint32_t>(block >> 32)};
    return std::mt19937_64(seq);
}

}  // namespace

PositionTrace::PositionTrace(std::vector<Piece> pieces) : pieces_(std::move(pieces)) {
    if (pieces_.empty() || pieces_.front().x_begin != 0.0) {
        throw DomainError("PositionTrace: first piece must start at x = 0");
    }
    for (std::size_t k = 0; k < pieces_.size(); ++k) {
        if (!(pieces_[k].position >= 1.0)) {
            throw DomainError("PositionTrace: positions must be at least 1");
        }
        if (k > 0 && !(pieces_[k].x_begin > pieces_[k - 1].x_begin)) {
            throw DomainError("PositionTrace: piece starts must increase");
        }
        if (pieces_[k].x_begin > 1.0) {
            throw DomainError("PositionTrace: piece starts must lie in [0, 1]");
        }
    }
}

PositionTrace PositionTrace::constant(double position) {
    return PositionTrace({{0.0, position}});
}

PositionTrace PositionTrace::simple_attack(double position, double x_a) {
    if (!(x_a >= 0.0 && x_a <= 1.0)) {
        throw DomainError("simple_attack: x_a must lie in [0, 1]");
    }
    if (x_a == 0.0) {
        return constant(1.0);
    }
    if (x_a == 1.0) {
        return constant(position);
    }
    return PositionTrace({{0.0, position}, {x_a, 1.0}});
}

double PositionTrace::at(double x) const {
    auto it = std::upper_bound(pieces_.begin(), pieces_.end(), x,
                               [](double value, const Piece& p) { return value < p.x_begin; });
    return it == pieces_.begin() ? pieces_.front().position : std::prev(it)->position;
}

double PositionTrace::length(std::size_t k) const {
    const double end = k + 1 < pieces_.size() ? pieces_[k + 1].x_begin : 1.0;
    return end - pieces_[k].x_begin;
}

void CrashModel::validate() const {
    if (!(omega > 0.0)) {
        throw DomainError("crash omega must be positive");
    }
    if (!(intensity >= 0.0) || !std::isfinite(intensity)) {
        throw DomainError("crash intensity must be non-negative");
    }
    if (n_riders < 1) {
        throw DomainError("crash model needs at least one rider");
    }
    if (!start_distribution.empty()) {
        if (start_distribution.size() != static_cast<std::size_t>(n_riders)) {
            throw DomainError("start distribution must have one entry per rider");
        }
        double total = 0.0;
        for (double p : start_distribution) {
            if (!(p >= 0.0)) {
                throw DomainError("start distribution entries must be non-negative");
            }
            total += p;
        }
        if (std::fabs(total - 1.0) > 1e-9) {
            throw DomainError("start distribution must sum to 1");
        }
    }
}

double CrashModel::start_probability(int k) const {
    if (k < 1 || k > n_riders) {
        return 0.0;
    }
    return start_distribution.empty() ? 1.0 / n_riders : start_distribution[k - 1];
}

double CrashModel::kernel_value(double i, int k) const {
    return kernel ? kernel(i, k) : propagation_prob(i, k, omega);
}

double propagation_prob(double i, double k, double omega) {
    if (!(i >= 1.0) || !(k >= 1.0)) {
        throw DomainError("propagation_prob: positions must be at least 1");
    }
    return i < k ? 0.0 : std::exp(-omega * (i - k));
}

double involvement_ratio(double i, double omega) {
    if (!(i >= 1.0)) {
        throw DomainError("involvement_ratio: position must be at least 1");
    }
    if (!(omega > 0.0)) {
        throw DomainError("involvement_ratio: omega must be positive");
    }
    if (std::isinf(omega)) {
        return 1.0;
    }
    return std::expm1(-omega * i) / std::expm1(-omega);
}

double involvement_given_crash(double i, double omega, int n_riders) {
    if (n_riders < 1) {
        throw DomainError("involvement_given_crash: n_riders must be positive");
    }
    return involvement_ratio(i, omega) / n_riders;
}

double exposure(const PositionTrace& trace, const CrashModel& model) {
    model.validate();
    double integral = 0.0;
    for (std::size_t k = 0; k < trace.pieces().size(); ++k) {
        integral += trace.length(k) *
                    involvement_given_crash(trace.pieces()[k].position, model.omega, model.n_riders);
    }
    return model.intensity * integral;
}

double exposure_simple(double x_a, double position, const CrashModel& model) {
    if (!(x_a >= 0.0 && x_a <= 1.0)) {
        throw DomainError("exposure_simple: x_a must lie in [0, 1]");
    }
    model.validate();
    const double ratio = involvement_ratio(position, model.omega);
    return model.intensity / model.n_riders * (x_a * ratio + 1.0 - x_a);
}

double exposure_general(const PositionTrace& trace, const CrashModel& model) {
    model.validate();
    double integral = 0.0;
    for (std::size_t p = 0; p < trace.pieces().size(); ++p) {
        const double i = trace.pieces()[p].position;
        double given_crash = 0.0;
        for (int k = 1; k <= model.n_riders; ++k) {
            const double start = model.start_probability(k);
            if (start > 0.0) {
                given_crash += model.kernel_value(i, k) * start;
            }
        }
        integral += trace.length(p) * given_crash;
    }
    return model.intensity * integral;
}

MonteCarloEstimate monte_carlo_exposure(const PositionTrace& trace, const CrashModel& model,
                                        std::uint64_t trials, std::uint64_t seed,
                                        unsigned threads) {
    model.validate();
    if (trials < 1) {
        throw DomainError("monte_carlo_exposure: trials must be at least 1");
    }
    if (threads == 0) {
        threads = std::max(1u, std::thread::hardware_concurrency());
    }

    // Cumulative start distribution for inverse-CDF sampling.
    std::vector<double> cumulative(model.n_riders);
    double running = 0.0;
    for (int k = 1; k <= model.n_riders; ++k) {
        running += model.start_probability(k);
        cumulative[k - 1] = running;
    }
    cumulative.back() = 1.0;

    struct Partial {
        std::uint64_t sum = 0;
        std::uint64_t sum_sq = 0;
    };
    const std::uint64_t blocks = (trials + kBlockTrials - 1) / kBlockTrials;
    std::vector<Partial> partials(blocks);
    std::atomic<std::uint64_t> next_block{0};

    auto worker = [&] {
        std::uniform_real_distribution<double> uniform(0.0, 1.0);
        std::poisson_distribution<std::uint64_t> crashes(model.intensity > 0.0 ? model.intensity
                                                                               : 1.0);
        for (std::uint64_t b = next_block++; b < blocks; b = next_block++) {
            auto rng = block_generator(seed, b);
            crashes.reset();
            const std::uint64_t end = std::min(trials, (b + 1) * kBlockTrials);
            Partial acc;
            for (std::uint64_t trial = b * kBlockTrials; trial < end; ++trial) {
                const std::uint64_t count = model.intensity > 0.0 ? crashes(rng) : 0;
                std::uint64_t involved = 0;
                for (std::uint64_t c = 0; c < count; ++c) {
                    const double x = uniform(rng);
                    const double u = uniform(rng);
                    const int k = static_cast<int>(
                        std::upper_bound(cumulative.begin(), cumulative.end(), u) -
                        cumulative.begin()) + 1;
                    const double p = model.kernel_value(trace.at(x), std::min(k, model.n_riders));
                    if (uniform(rng) < p) {
                        ++involved;
                    }
                }
                acc.sum += involved;
                acc.sum_sq += involved * involved;
            }
            partials[b] = acc;
        }
    };

    threads = static_cast<unsigned>(std::min<std::uint64_t>(threads, blocks));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (unsigned w = 0; w < threads; ++w) {
            pool.emplace_back(worker);
        }
        for (auto& t : pool) {
            t.join();
        }
    }

    std::uint64_t sum = 0;
    std::uint64_t sum_sq = 0;
    for (const auto& p : partials) {
        sum += p.sum;
        sum_sq += p.sum_sq;
    }
    const double n = static_cast<double>(trials);
    const double mean = static_cast<double>(sum) / n;
    double variance = 0.0;
    if (trials > 1) {
        variance = (static_cast<double>(sum_sq) - n * mean * mean) / (n - 1.0);
        variance = std::max(variance, 0.0);
    }
    return {mean, std::sqrt(variance / n), trials};
}

}  // namespace breakaway
