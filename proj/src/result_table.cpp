#include "breakaway/result_table.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

namespace breakaway {

std::string format_number(double value) {
    if (std::isnan(value)) {
        return "nan";
    }
    if (std::isinf(value)) {
        return value > 0 ? "inf" : "-inf";
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", value == 0.0 ? 0.0 : value);
    return buf;
}

void ResultTable::add_row(std::vector<Cell> row) {
    if (row.size() != columns.size()) {
        throw std::logic_error("result row has " + std::to_string(row.size()) + " cells, expected " +
                               std::to_string(columns.size()));
    }
    rows.push_back(std::move(row));
}

void ResultTable::add_metadata(const std::string& key, const std::string& value) {
    metadata.emplace_back(key, value);
}

void ResultTable::add_metadata(const std::string& key, double value) {
    metadata.emplace_back(key, format_number(value));
}

namespace {

std::string cell_text(const Cell& cell) {
    if (const auto* d = std::get_if<double>(&cell)) {
        return format_number(*d);
    }
    if (const auto* i = std::get_if<std::int64_t>(&cell)) {
        return std::to_string(*i);
    }
    return std::get<std::string>(cell);
}

nlohmann::ordered_json cell_json(const Cell& cell) {
    if (const auto* d = std::get_if<double>(&cell)) {
        if (!std::isfinite(*d)) {
            return nullptr;
        }
        // Round through the fixed-width text so both formats carry the same digits.
        return std::stod(format_number(*d));
    }
    if (const auto* i = std::get_if<std::int64_t>(&cell)) {
        return *i;
    }
    return std::get<std::string>(cell);
}

}  // namespace

void ResultTable::write_csv(std::ostream& out) const {
    for (const auto& [key, value] : metadata) {
        out << "# " << key << ": " << value << '\n';
    }
    for (const auto& [key, value] : config) {
        out << "#! " << key << " =" << (value.empty() ? "" : " ") << value << '\n';
    }
    for (std::size_t c = 0; c < columns.size(); ++c) {
        out << (c ? "," : "") << columns[c];
    }
    out << '\n';
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            out << (c ? "," : "") << cell_text(row[c]);
        }
        out << '\n';
    }
}

void ResultTable::write_json(std::ostream& out) const {
    nlohmann::ordered_json doc;
    doc["metadata"] = nlohmann::ordered_json::object();
    for (const auto& [key, value] : metadata) {
        doc["metadata"][key] = value;
    }
    doc["config"] = nlohmann::ordered_json::object();
    for (const auto& [key, value] : config) {
        doc["config"][key] = value;
    }
    doc["columns"] = columns;
    doc["rows"] = nlohmann::ordered_json::array();
    for (const auto& row : rows) {
        auto r = nlohmann::ordered_json::array();
        for (const auto& cell : row) {
            r.push_back(cell_json(cell));
        }
        doc["rows"].push_back(std::move(r));
    }
    out << doc.dump(2) << '\n';
}

}  // namespace breakaway
