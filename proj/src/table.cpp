#include "cdr/table.hpp"

#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

#include "cdr/csv.hpp"
#include "cdr/errors.hpp"

namespace cdr {

void Table::add_row(std::vector<Cell> row) {
    if (row.size() != columns.size()) {
        throw ShapeError("table", "add_row", name + ": row has " + std::to_string(row.size()) + " cells, expected " +
                                                 std::to_string(columns.size()));
    }
    rows.push_back(std::move(row));
}

std::size_t Table::column_index(const std::string& col) const {
    for (std::size_t k = 0; k < columns.size(); ++k) {
        if (columns[k] == col) return k;
    }
    throw ShapeError("table", "column", name + " has no column '" + col + "'");
}

std::vector<double> Table::column(const std::string& col) const {
    const std::size_t k = column_index(col);
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) {
        if (const auto* d = std::get_if<double>(&r[k])) {
            out.push_back(*d);
        } else if (const auto* i = std::get_if<std::int64_t>(&r[k])) {
            out.push_back(static_cast<double>(*i));
        } else {
            throw ShapeError("table", "column", name + "." + col + " is not numeric");
        }
    }
    return out;
}

namespace {

void write_cell(std::ostream& os, const Cell& c) {
    if (const auto* d = std::get_if<double>(&c)) {
        os << csv::format_double(*d);
    } else if (const auto* i = std::get_if<std::int64_t>(&c)) {
        os << *i;
    } else {
        os << std::get<std::string>(c);
    }
}

Cell parse_cell(std::string_view s) {
    if (s.empty()) return std::string();
    try {
        return csv::parse_double(s);
    } catch (const std::exception&) {
        return std::string(s);
    }
}

}  // namespace

void write_csv(std::ostream& os, const Table& t) {
    for (std::size_t k = 0; k < t.columns.size(); ++k) os << (k ? "," : "") << t.columns[k];
    os << '\n';
    for (const auto& r : t.rows) {
        for (std::size_t k = 0; k < r.size(); ++k) {
            if (k) os << ',';
            write_cell(os, r[k]);
        }
        os << '\n';
    }
}

nlohmann::json to_json(const Table& t) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : t.rows) {
        nlohmann::json row = nlohmann::json::array();
        for (const auto& c : r) std::visit([&](const auto& v) { row.push_back(v); }, c);
        rows.push_back(std::move(row));
    }
    return {{"name", t.name}, {"columns", t.columns}, {"rows", std::move(rows)}};
}

Table read_table(const std::filesystem::path& dir, const std::string& name) {
    constexpr const char* op = "read_table";
    const auto csv_path = dir / (name + ".csv");
    const auto json_path = dir / (name + ".json");
    if (std::filesystem::exists(csv_path)) {
        std::ifstream is(csv_path);
        std::string line;
        if (!std::getline(is, line)) throw ShapeError("table", op, csv_path.string() + " is empty");
        std::vector<std::string> cols;
        for (auto f : csv::split(line)) cols.emplace_back(f);
        Table t(name, cols);
        while (std::getline(is, line)) {
            if (line.empty()) continue;
            std::vector<Cell> row;
            for (auto f : csv::split(line)) row.push_back(parse_cell(f));
            t.add_row(std::move(row));
        }
        return t;
    }
    if (std::filesystem::exists(json_path)) {
        std::ifstream is(json_path);
        const auto j = nlohmann::json::parse(is, nullptr, false);
        if (j.is_discarded() || !j.contains("columns") || !j.contains("rows")) {
            throw ShapeError("table", op, json_path.string() + " is not a table");
        }
        Table t(name, j["columns"].get<std::vector<std::string>>());
        for (const auto& r : j["rows"]) {
            std::vector<Cell> row;
            for (const auto& c : r) {
                if (c.is_null()) row.emplace_back(std::numeric_limits<double>::quiet_NaN());
                else if (c.is_number_integer()) row.emplace_back(c.get<std::int64_t>());
                else if (c.is_number()) row.emplace_back(c.get<double>());
                else row.emplace_back(c.get<std::string>());
            }
            t.add_row(std::move(row));
        }
        return t;
    }
    throw ShapeError("table", op, "no " + name + ".csv or " + name + ".json in " + dir.string());
}

}  // namespace cdr
