#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace breakaway {

using Cell = std::variant<double, std::int64_t, std::string>;

/// Column-oriented output with a metadata block. Doubles print with 12
/// significant digits in both formats.
struct ResultTable {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;
    /// Run information (tool version, command, seed, summaries).
    std::vector<std::pair<std::string, std::string>> metadata;
    /// Every config key and value used for the run.
    std::vector<std::pair<std::string, std::string>> config;

    void add_row(std::vector<Cell> row);
    void add_metadata(const std::string& key, const std::string& value);
    void add_metadata(const std::string& key, double value);

    /// `# key: value` metadata, `#! key = value` config echo, then a header and rows.
    void write_csv(std::ostream& out) const;
    void write_json(std::ostream& out) const;
};

std::string format_number(double value);

}  // namespace breakaway
