#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace breakaway {

/// Flat `section.key = value` settings with defaults for every known key.
///
/// Files may use `[section]` headers with bare keys below them, or fully
/// qualified keys. Lines starting with `#` or `;` are comments, except that a
/// file containing `#!` lines is read from those lines only, so a result file's
/// config echo can be fed straight back in.
class Config {
public:
    Config();

    void load_file(const std::string& path);
    void load_stream(std::istream& in, const std::string& source = "<stream>");
    /// Applies one `key=value` override.
    void apply(const std::string& assignment);
    void set(const std::string& key, const std::string& value);

    bool is_known(const std::string& key) const;
    const std::string& get(const std::string& key) const;
    double number(const std::string& key) const;
    int integer(const std::string& key) const;
    std::uint64_t count(const std::string& key) const;

    /// Keys in sorted order with their current values.
    const std::map<std::string, std::string>& entries() const { return values_; }

private:
    std::map<std::string, std::string> values_;
};

/// Thrown for unknown keys and malformed values (maps to exit code 1).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// One axis of a parameter sweep; empty when the config names no parameter.
struct SweepAxis {
    std::string key;
    std::vector<double> values;
};

/// Reads `<prefix>.param`, `.values` (comma list) or `.lo/.hi/.points`.
SweepAxis sweep_axis(const Config& config, const std::string& prefix);

/// Formats a double the way config values are echoed (shortest exact form).
std::string format_config_number(double value);

}  // namespace breakaway
