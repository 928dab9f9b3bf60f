#include "breakaway/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <sstream>

namespace breakaway {

namespace {

// Every recognised key with its default. Numbers are stored as text so that
// the echo reproduces exactly what was read.
const std::map<std::string, std::string>& defaults() {
    static const std::map<std::string, std::string> table = [] {
        std::map<std::string, std::string> d{
            {"model.n_riders", "75"},
            {"model.position", "5"},
            {"model.cd_front", "1.43"},
            {"model.cd_lurk", "0.46"},
            {"model.eps", "0.005"},
            {"peloton.n_rows", "15"},
            {"peloton.n_cols", "5"},
            {"peloton.cd_max", "0.9"},
            {"peloton.cd_min", "0.05"},
            {"peloton.decay", "0.25"},
            {"physical.mass_avg", "70"},
            {"physical.rider_mass", "70"},
            {"physical.air_density", "1.225"},
            {"physical.course_length", "100000"},
            {"physical.power", "150"},
            {"physical.spacing", "2"},
            {"physical.gravity", "9.81"},
            {"crash.omega", "0.5"},
            {"crash.intensity", "2"},
            {"crash.attack", "0.5"},
            {"strategy.energy", "1.2"},
            {"strategy.beta", "0.5"},
            {"fatigue.mu", "1"},
            {"fatigue.p_sustain", "lurk"},
            {"terrain.course", "hilly"},
            {"terrain.attack", "0.5"},
            {"terrain.power", "3.6"},
            {"terrain.mu", "0"},
            {"terrain.p_sustain", "lurk"},
            {"terrain.method", "rk45"},
            {"terrain.output_spacing", "0.001"},
            {"micro.power", "2"},
            {"micro.gamma_ratio", "1"},
            {"micro.order", "1"},
            {"micro.span", "0"},
            {"micro.points", "601"},
            {"run.seed", "12345"},
            {"run.trials", "1000000"},
            {"run.threads", "0"},
        };
        d["peloton.cd_avg"] = format_config_number(0.9 / 1.43);
        d["physical.frontal_area"] = format_config_number(0.4 / (0.9 / 1.43));
        for (const char* axis : {"sweep", "sweep2", "sweep3"}) {
            const std::string p(axis);
            d[p + ".param"] = "";
            d[p + ".values"] = "";
            d[p + ".lo"] = "0";
            d[p + ".hi"] = "1";
            d[p + ".points"] = "11";
        }
        return d;
    }();
    return table;
}

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

double parse_number(const std::string& key, const std::string& text) {
    double value = 0.0;
    const char* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc() || ptr != end || text.empty() || !std::isfinite(value)) {
        throw ConfigError("config key '" + key + "': expected a number, got '" + text + "'");
    }
    return value;
}

}  // namespace

std::string format_config_number(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    (void)ec;
    return std::string(buf, ptr);
}

Config::Config() : values_(defaults()) {}

bool Config::is_known(const std::string& key) const { return defaults().count(key) != 0; }

void Config::set(const std::string& key, const std::string& value) {
    if (!is_known(key)) {
        throw ConfigError("unknown config key '" + key + "'");
    }
    values_[key] = value;
}

void Config::apply(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) {
        throw ConfigError("expected key=value, got '" + assignment + "'");
    }
    set(trim(std::string_view(assignment).substr(0, eq)),
        trim(std::string_view(assignment).substr(eq + 1)));
}

void Config::load_stream(std::istream& in, const std::string& source) {
    std::vector<std::string> lines;
    bool echo_only = false;
    for (std::string line; std::getline(in, line);) {
        if (line.rfind("#!", 0) == 0) {
            echo_only = true;
        }
        lines.push_back(line);
    }
    std::string section;
    for (std::size_t n = 0; n < lines.size(); ++n) {
        std::string line;
        if (echo_only) {
            if (lines[n].rfind("#!", 0) != 0) {
                continue;
            }
            line = trim(std::string_view(lines[n]).substr(2));
        } else {
            line = trim(lines[n]);
        }
        if (line.empty() || line[0] == '#' || line[0] == ';') {
            continue;
        }
        const std::string where = source + ":" + std::to_string(n + 1);
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw ConfigError(where + ": malformed section header");
            }
            section = trim(std::string_view(line).substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(where + ": expected key = value");
        }
        std::string key = trim(std::string_view(line).substr(0, eq));
        if (key.find('.') == std::string::npos && !section.empty()) {
            key = section + "." + key;
        }
        if (!is_known(key)) {
            throw ConfigError(where + ": unknown config key '" + key + "'");
        }
        values_[key] = trim(std::string_view(line).substr(eq + 1));
    }
}

void Config::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file '" + path + "'");
    }
    load_stream(in, path);
}

const std::string& Config::get(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) {
        throw ConfigError("unknown config key '" + key + "'");
    }
    return it->second;
}

double Config::number(const std::string& key) const { return parse_number(key, get(key)); }

int Config::integer(const std::string& key) const {
    const double v = number(key);
    if (v != std::floor(v) || std::fabs(v) > 1e9) {
        throw ConfigError("config key '" + key + "': expected an integer");
    }
    return static_cast<int>(v);
}

std::uint64_t Config::count(const std::string& key) const {
    const std::string& text = get(key);
    std::uint64_t value = 0;
    const char* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc() || ptr != end || text.empty()) {
        throw ConfigError("config key '" + key + "': expected a non-negative integer");
    }
    return value;
}

SweepAxis sweep_axis(const Config& config, const std::string& prefix) {
    SweepAxis axis;
    axis.key = config.get(prefix + ".param");
    if (axis.key.empty()) {
        return axis;
    }
    if (!config.is_known(axis.key) || axis.key.rfind("sweep", 0) == 0) {
        throw ConfigError(prefix + ".param: cannot sweep '" + axis.key + "'");
    }
    const std::string& list = config.get(prefix + ".values");
    if (!list.empty()) {
        std::stringstream ss(list);
        for (std::string item; std::getline(ss, item, ',');) {
            axis.values.push_back(parse_number(prefix + ".values", trim(item)));
        }
    } else {
        const double lo = config.number(prefix + ".lo");
        const double hi = config.number(prefix + ".hi");
        const int points = config.integer(prefix + ".points");
        if (points < 1) {
            throw ConfigError(prefix + ".points must be at least 1");
        }
        for (int k = 0; k < points; ++k) {
            axis.values.push_back(points == 1 ? lo
                                  : k + 1 == points ? hi
                                                    : lo + (hi - lo) * k / (points - 1));
        }
    }
    if (axis.values.empty()) {
        throw ConfigError(prefix + ": empty sweep");
    }
    return axis;
}

}  // namespace breakaway
