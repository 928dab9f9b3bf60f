#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "breakaway/commands.hpp"
#include "breakaway/config.hpp"
#include "breakaway/errors.hpp"

namespace {

struct Options {
    std::string config_path;
    std::vector<std::string> overrides;
    std::string out_path;
    std::string format = "csv";
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> trials;
    std::string course;
};

void add_common_options(CLI::App& sub, Options& o) {
    sub.add_option("--config", o.config_path, "Config file ([section] key = value)")
        ->check(CLI::ExistingFile);
    sub.add_option("--set", o.overrides, "Override one key, e.g. --set strategy.beta=0.8")
        ->allow_extra_args(false);
    sub.add_option("--out", o.out_path, "Output file (default: stdout)");
    sub.add_option("--format", o.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
    sub.add_option("--seed", o.seed, "Random seed (run.seed)");
    sub.add_option("--trials", o.trials, "Monte Carlo trials (run.trials)");
    sub.add_option("--course", o.course, "Course table file, or flat | hilly | grade:<slope>");
}

breakaway::Config build_config(const Options& o) {
    breakaway::Config config;
    if (!o.config_path.empty()) {
        config.load_file(o.config_path);
    }
    for (const auto& assignment : o.overrides) {
        config.apply(assignment);
    }
    if (o.seed) {
        config.set("run.seed", std::to_string(*o.seed));
    }
    if (o.trials) {
        config.set("run.trials", std::to_string(*o.trials));
    }
    if (!o.course.empty()) {
        config.set("terrain.course", o.course);
    }
    return config;
}

int run(const std::string& command, const Options& o) {
    const auto result = breakaway::run_command(command, build_config(o));
    for (const auto& message : result.messages) {
        std::cerr << "breakaway " << command << ": " << message << '\n';
    }
    std::ofstream file;
    if (!o.out_path.empty()) {
        file.open(o.out_path);
        if (!file) {
            std::cerr << "breakaway: cannot write '" << o.out_path << "'\n";
            return breakaway::exit_config;
        }
    }
    std::ostream& out = o.out_path.empty() ? std::cout : file;
    if (o.format == "json") {
        result.table.write_json(out);
    } else {
        result.table.write_csv(out);
    }
    return result.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Breakaway strategy model: optimal attacks, terrain races and crash exposure"};
    app.require_subcommand(1);
    Options options;
    std::string chosen;
    const std::vector<std::pair<std::string, std::string>> subcommands{
        {"flat", "Optimal constant-power attack on the flat"},
        {"fatigue", "Optimal attack with an exponentially fading power burst"},
        {"terrain", "Race simulation over a course profile"},
        {"crash-mc", "Analytic crash exposure against a Monte Carlo estimate"},
        {"microstructure", "Attack onset: two-layer composite against the full equation"},
    };
    for (const auto& [name, help] : subcommands) {
        auto* sub = app.add_subcommand(name, help);
        add_common_options(*sub, options);
        sub->callback([&chosen, name = name] { chosen = name; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : breakaway::exit_config;
    }

    try {
        return run(chosen, options);
    } catch (const breakaway::ConfigError& e) {
        std::cerr << "breakaway: config error: " << e.what() << '\n';
        return breakaway::exit_config;
    } catch (const breakaway::ParseError& e) {
        std::cerr << "breakaway: parse error: " << e.what() << '\n';
        return breakaway::exit_config;
    } catch (const breakaway::DomainError& e) {
        std::cerr << "breakaway: invalid parameters: " << e.what() << '\n';
        return breakaway::exit_config;
    } catch (const breakaway::InfeasibleError& e) {
        std::cerr << "breakaway: infeasible parameters: " << e.what() << '\n';
        return breakaway::exit_config;
    } catch (const std::exception& e) {
        std::cerr << "breakaway: numerical failure: " << e.what() << '\n';
        return breakaway::exit_numerical;
    }
}
