#include "breakaway/commands.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <functional>
#include <limits>
#include <optional>
#include <thread>

#include "breakaway/crash.hpp"
#include "breakaway/errors.hpp"
#include "breakaway/fatigue.hpp"
#include "breakaway/flat_strategy.hpp"
#include "breakaway/microstructure.hpp"
#include "breakaway/terrain.hpp"

namespace breakaway {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Point {
    Config config;
    std::vector<double> coordinates;
};

std::vector<SweepAxis> sweep_axes(const Config& config) {
    std::vector<SweepAxis> axes;
    for (const char* prefix : {"sweep", "sweep2", "sweep3"}) {
        auto axis = sweep_axis(config, prefix);
        if (!axis.key.empty()) {
            axes.push_back(std::move(axis));
        }
    }
    for (std::size_t a = 0; a < axes.size(); ++a) {
        for (std::size_t b = a + 1; b < axes.size(); ++b) {
            if (axes[a].key == axes[b].key) {
                throw ConfigError("two sweep axes name '" + axes[a].key + "'");
            }
        }
    }
    return axes;
}

// Cartesian product, first axis outermost.
std::vector<Point> sweep_points(const Config& base, const std::vector<SweepAxis>& axes) {
    std::vector<Point> points{{base, {}}};
    for (const auto& axis : axes) {
        std::vector<Point> next;
        for (const auto& p : points) {
            for (double v : axis.values) {
                Point q = p;
                q.config.set(axis.key, format_config_number(v));
                q.coordinates.push_back(v);
                next.push_back(std::move(q));
            }
        }
        points = std::move(next);
    }
    return points;
}

unsigned worker_count(const Config& config, std::size_t jobs) {
    unsigned n = static_cast<unsigned>(config.count("run.threads"));
    if (n == 0) {
        n = std::max(1u, std::thread::hardware_concurrency());
    }
    return static_cast<unsigned>(std::min<std::size_t>(n, std::max<std::size_t>(jobs, 1)));
}

// Workers take points in any order; rows land in their input slot.
std::vector<std::vector<Cell>> run_pool(const std::vector<Point>& points, unsigned workers,
                                        const std::function<std::vector<Cell>(const Config&)>& job) {
    std::vector<std::vector<Cell>> rows(points.size());
    std::vector<std::exception_ptr> errors(points.size());
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t k = next++; k < points.size(); k = next++) {
            try {
                rows[k] = job(points[k].config);
            } catch (...) {
                errors[k] = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned w = 1; w < workers; ++w) {
        pool.emplace_back(work);
    }
    work();
    for (auto& t : pool) {
        t.join();
    }
    for (const auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
    return rows;
}

ResultTable start_table(const Config& config, const std::string& command) {
    ResultTable t;
    t.add_metadata("tool", std::string("breakaway ") + kToolVersion);
    t.add_metadata("command", command);
    t.add_metadata("units", "dimensionless");
    t.add_metadata("seed", config.get("run.seed"));
    for (const auto& [key, value] : config.entries()) {
        t.config.emplace_back(key, value);
    }
    return t;
}

// Runs `job` over every sweep point and prefixes each row with the swept values.
void fill_sweep(ResultTable& table, const Config& config, std::vector<std::string> columns,
                bool parallel, const std::function<std::vector<Cell>(const Config&)>& job) {
    const auto axes = sweep_axes(config);
    const auto points = sweep_points(config, axes);
    for (const auto& a : axes) {
        table.columns.push_back(a.key);
    }
    table.columns.insert(table.columns.end(), columns.begin(), columns.end());
    const auto rows = run_pool(points, parallel ? worker_count(config, points.size()) : 1, job);
    for (std::size_t k = 0; k < rows.size(); ++k) {
        std::vector<Cell> row(points[k].coordinates.begin(), points[k].coordinates.end());
        row.insert(row.end(), rows[k].begin(), rows[k].end());
        table.add_row(std::move(row));
    }
}

void require_no_sweep(const Config& config, const std::string& command) {
    if (!sweep_axes(config).empty()) {
        throw ConfigError(command + " does not support sweeps");
    }
}

CrashModel crash_model(const Config& c) {
    CrashModel m;
    m.omega = c.number("crash.omega");
    m.intensity = c.number("crash.intensity");
    m.n_riders = c.integer("model.n_riders");
    m.validate();
    return m;
}

StrategyProblem strategy_problem(const Config& c) {
    StrategyProblem p;
    p.energy_budget = c.number("strategy.energy");
    p.risk_index = c.number("strategy.beta");
    p.position = c.number("model.position");
    p.cd_front = c.number("model.cd_front");
    p.cd_lurk = c.number("model.cd_lurk");
    p.crash = crash_model(c);
    p.validate();
    return p;
}

PelotonConfig peloton_config(const Config& c) {
    PelotonConfig p;
    p.n_riders = c.integer("model.n_riders");
    p.n_rows = c.integer("peloton.n_rows");
    p.n_cols = c.integer("peloton.n_cols");
    p.drag = {c.number("peloton.cd_max"), c.number("peloton.cd_min"), c.number("peloton.decay")};
    p.cd_avg = c.number("peloton.cd_avg");
    p.validate();
    return p;
}

PhysicalParams physical_params(const Config& c) {
    PhysicalParams p;
    p.mass_avg = c.number("physical.mass_avg");
    p.rider_mass = c.number("physical.rider_mass");
    p.air_density = c.number("physical.air_density");
    p.frontal_area = c.number("physical.frontal_area");
    p.course_length = c.number("physical.course_length");
    p.peloton_power_avg = c.number("physical.power");
    p.axle_spacing = c.number("physical.spacing");
    p.gravity = c.number("physical.gravity");
    p.validate();
    return p;
}

// "lurk" ties the sustainable power to the lurking drag.
double sustain_power(const Config& c, const std::string& key) {
    return c.get(key) == "lurk" ? c.number("model.cd_lurk") : c.number(key);
}

Cell optional_cell(const std::optional<double>& v) { return v ? *v : kNaN; }

CourseProfile course_profile(const Config& c) {
    const std::string& name = c.get("terrain.course");
    if (name == "flat") {
        return CourseProfile::flat();
    }
    if (name == "hilly") {
        return CourseProfile::hilly_demo();
    }
    if (name.rfind("grade:", 0) == 0) {
        const std::string text = name.substr(6);
        double slope = 0.0;
        auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), slope);
        if (ec != std::errc() || ptr != text.data() + text.size()) {
            throw ConfigError("terrain.course: bad grade '" + text + "'");
        }
        return CourseProfile::constant_grade(slope);
    }
    return CourseProfile::load_table(name);
}

}  // namespace

const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names{"flat", "fatigue", "terrain", "crash-mc",
                                                "microstructure"};
    return names;
}

CommandResult cmd_flat(const Config& config) {
    CommandResult out{start_table(config, "flat"), exit_ok, {}};
    fill_sweep(out.table, config,
               {"energy", "beta", "x_min", "x_opt", "p_opt", "time_gap", "exposure", "objective",
                "branch", "beta_crit", "energy_min", "beta_min"},
               true, [](const Config& c) -> std::vector<Cell> {
                   const auto p = strategy_problem(c);
                   const auto r = optimal_attack(p);
                   const auto frontier = win_frontier(p);
                   return {p.energy_budget, p.risk_index, min_attack_position(p),
                           r.attack_position, r.attack_power, r.time_gap, r.exposure,
                           r.objective, to_string(r.branch), critical_risk(p),
                           frontier.energy_min, optional_cell(frontier.risk_min)};
               });
    return out;
}

CommandResult cmd_fatigue(const Config& config) {
    CommandResult out{start_table(config, "fatigue"), exit_ok, {}};
    fill_sweep(out.table, config,
               {"energy", "beta", "mu", "p_sustain", "x_opt", "p_max", "t_finish", "time_gap",
                "exposure", "objective", "branch", "converged", "iterations", "energy_residual",
                "arrival_residual"},
               true, [](const Config& c) -> std::vector<Cell> {
                   const auto p = strategy_problem(c);
                   const double mu = c.number("fatigue.mu");
                   const double ps = sustain_power(c, "fatigue.p_sustain");
                   if (mu < 0.0) {
                       throw DomainError("fatigue.mu must be non-negative");
                   }
                   try {
                       const auto r = optimize_fatigue(p, mu, ps);
                       return {p.energy_budget, p.risk_index, mu, ps, r.attack_position,
                               r.peak_power, r.finish_time, r.time_gap, r.exposure, r.objective,
                               to_string(r.branch), std::int64_t{r.converged ? 1 : 0},
                               std::int64_t{r.iterations}, r.energy_residual, r.arrival_residual};
                   } catch (const ConvergenceError&) {
                   } catch (const BracketError&) {
                   } catch (const StallError&) {
                   }
                   return {p.energy_budget, p.risk_index, mu, ps, kNaN, kNaN, kNaN, kNaN, kNaN,
                           kNaN, std::string("failed"), std::int64_t{0}, std::int64_t{0}, kNaN,
                           kNaN};
               });
    const auto col = std::find(out.table.columns.begin(), out.table.columns.end(), "converged") -
                     out.table.columns.begin();
    std::size_t failed = 0;
    for (const auto& row : out.table.rows) {
        failed += std::get<std::int64_t>(row[col]) == 0;
    }
    if (failed > 0) {
        out.exit_code = exit_numerical;
        out.messages.push_back(std::to_string(failed) + " of " +
                               std::to_string(out.table.rows.size()) +
                               " sweep points did not converge");
    }
    out.table.add_metadata("failed_rows", std::to_string(failed));
    return out;
}

CommandResult cmd_terrain(const Config& config) {
    require_no_sweep(config, "terrain");
    CommandResult out{start_table(config, "terrain"), exit_ok, {}};
    const auto profile = course_profile(config);
    ScaleSet scales = scale_factors(physical_params(config), peloton_config(config));
    scales.inertia = config.number("model.eps");
    if (scales.inertia < 0.0) {
        throw DomainError("model.eps must be non-negative");
    }

    TerrainSettings settings;
    settings.sample_spacing = config.number("terrain.output_spacing");
    settings.estimate_error = true;
    const std::string& method = config.get("terrain.method");
    if (method == "bdf2") {
        settings.ode.method = ode::Method::implicit_bdf2;
    } else if (method != "rk45") {
        throw ConfigError("terrain.method must be rk45 or bdf2");
    }

    const RiderSpec rider{config.number("model.cd_lurk"), config.number("model.cd_front")};
    const double x_a = std::min(config.number("terrain.attack"), 1.0);
    const double p_a = config.number("terrain.power");
    const double mu = config.number("terrain.mu");
    PowerProfile attack = PowerProfile::constant(p_a);
    if (mu > 0.0) {
        attack = PowerProfile{};
        attack.then_exponential(0.0, p_a, sustain_power(config, "terrain.p_sustain"), mu);
    }
    const auto r = simulate_breakaway(x_a, attack, rider, profile, scales, settings);

    auto& t = out.table;
    t.add_metadata("course", profile.description());
    t.add_metadata("peloton_finish", r.peloton.finish_time);
    t.add_metadata("peloton_finish_error", r.peloton.finish_time_error);
    t.add_metadata("rider_finish", r.rider.finish_time);
    t.add_metadata("rider_finish_error", r.rider.finish_time_error);
    t.add_metadata("time_gap", r.time_gap);
    t.add_metadata("rider_energy", r.rider_energy);
    t.add_metadata("peloton_energy", r.peloton_energy);
    t.add_metadata("caught", r.caught ? "yes" : "no");
    if (r.caught) {
        t.add_metadata("catch_time", r.catch_time);
    }
    t.columns = {"series", "t", "x", "v", "P", "E"};
    for (const auto* series : {&r.rider, &r.peloton}) {
        const std::string name = series == &r.rider ? "rider" : "peloton";
        for (std::size_t k = 0; k < series->size(); ++k) {
            t.add_row({name, series->times[k], series->positions[k], series->velocities[k],
                       series->powers[k], series->cumulative_energy[k]});
        }
    }
    return out;
}

CommandResult cmd_crash_mc(const Config& config) {
    CommandResult out{start_table(config, "crash-mc"), exit_ok, {}};
    const auto trials = config.count("run.trials");
    if (trials < 1) {
        throw ConfigError("run.trials must be at least 1");
    }
    fill_sweep(out.table, config,
               {"omega", "intensity", "position", "attack", "trials", "analytic", "estimate",
                "std_error", "z"},
               false, [](const Config& c) -> std::vector<Cell> {
                   const auto model = crash_model(c);
                   const double position = c.number("model.position");
                   const double x_a = c.number("crash.attack");
                   const auto n = c.count("run.trials");
                   const double analytic = exposure_simple(x_a, position, model);
                   const auto mc = monte_carlo_exposure(PositionTrace::simple_attack(position, x_a),
                                                        model, n, c.count("run.seed"),
                                                        static_cast<unsigned>(c.count("run.threads")));
                   const double diff = mc.estimate - analytic;
                   double z = 0.0;
                   if (mc.standard_error > 0.0) {
                       z = diff / mc.standard_error;
                   } else if (std::fabs(diff) > 1e-12) {
                       z = std::copysign(std::numeric_limits<double>::infinity(), diff);
                   }
                   return {model.omega, model.intensity, position, x_a,
                           static_cast<std::int64_t>(n), analytic, mc.estimate,
                           mc.standard_error, z};
               });
    const auto zcol = out.table.columns.size() - 1;
    for (const auto& row : out.table.rows) {
        if (!(std::fabs(std::get<double>(row[zcol])) <= 4.0)) {
            out.exit_code = exit_statistical;
            out.messages.push_back("Monte Carlo estimate disagrees with the analytic exposure (|z| > 4)");
            break;
        }
    }
    return out;
}

CommandResult cmd_microstructure(const Config& config) {
    require_no_sweep(config, "microstructure");
    CommandResult out{start_table(config, "microstructure"), exit_ok, {}};
    MicroParams p;
    p.position = config.number("model.position");
    p.power = config.number("micro.power");
    p.rider_mass = config.number("physical.rider_mass") / config.number("physical.mass_avg");
    p.gamma_ratio = config.number("micro.gamma_ratio");
    p.eps = config.number("model.eps");
    p.order = config.integer("micro.order");
    p.peloton = peloton_config(config);
    p.validate();
    const auto cmp = compare_layers(p, config.number("micro.span"), config.integer("micro.points"));
    const LayerSolution layers(p);

    auto& t = out.table;
    t.add_metadata("passage_duration", layers.passage_duration());
    t.add_metadata("front_time", layers.front_time());
    t.add_metadata("front_speed", layers.front_speed());
    t.add_metadata("terminal_speed", cmp.terminal_speed);
    t.add_metadata("full_final_speed", cmp.full_final_speed);
    t.add_metadata("full_peak_speed", cmp.full_peak_speed);
    t.add_metadata("interior_maxima", std::to_string(cmp.interior_maxima));
    t.add_metadata("max_relative_deviation", cmp.max_relative_deviation);
    t.add_metadata("deviation_over_eps", cmp.max_relative_deviation / p.eps);
    t.columns = {"t", "slip", "v_full", "v_composite", "relative_deviation"};
    for (std::size_t k = 0; k < cmp.full.times.size(); ++k) {
        const double vf = cmp.full.velocities[k];
        t.add_row({cmp.full.times[k], cmp.full.slips[k], vf, cmp.composite[k],
                   std::fabs(cmp.composite[k] - vf) / vf});
    }
    return out;
}

CommandResult run_command(const std::string& name, const Config& config) {
    if (name == "flat") {
        return cmd_flat(config);
    }
    if (name == "fatigue") {
        return cmd_fatigue(config);
    }
    if (name == "terrain") {
        return cmd_terrain(config);
    }
    if (name == "crash-mc") {
        return cmd_crash_mc(config);
    }
    if (name == "microstructure") {
        return cmd_microstructure(config);
    }
    throw ConfigError("unknown command '" + name + "'");
}

}  // namespace breakaway
