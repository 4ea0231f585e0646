#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

namespace cdr {

using Cell = std::variant<double, std::int64_t, std::string>;

/// Named rectangular result table; one file per table in a run directory.
struct Table {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;

    Table(std::string n, std::vector<std::string> cols) : name(std::move(n)), columns(std::move(cols)) {}
    void add_row(std::vector<Cell> row);
    std::size_t column_index(const std::string& col) const;
    std::vector<double> column(const std::string& col) const;
};

/// Header row, ',' separator, '\n' line ends, shortest round-trip doubles.
void write_csv(std::ostream& os, const Table& t);
/// {"name", "columns", "rows"} with rows as arrays.
nlohmann::json to_json(const Table& t);

/// Reads <dir>/<name>.csv or <dir>/<name>.json, whichever exists.
Table read_table(const std::filesystem::path& dir, const std::string& name);

}  // namespace cdr
