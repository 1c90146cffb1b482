#include "mrcdm/csv.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "mrcdm/errors.hpp"

namespace mrcdm {

std::string format_double(double x) {
    std::array<char, 32> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
    if (ec != std::errc{}) throw NumericError("format_double: conversion failed");
    return std::string(buf.data(), ptr);
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

bool is_missing_token(const std::string& cell) {
    if (cell.empty()) return true;
    std::string low = cell;
    std::transform(low.begin(), low.end(), low.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return low == "nan" || low == "na" || low == "null";
}

/// Hourly timestamps in ISO 8601 from a fixed epoch; month lengths honour
/// leap years so multi-year synthetic dumps stay calendar-valid.
std::string timestamp_at(std::size_t hour_index) {
    static const int days_in_month[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    int year = 2016, month = 7, day = 1;
    int hour = static_cast<int>(hour_index % 24);
    long days = static_cast<long>(hour_index / 24);
    while (days > 0) {
        int dim = days_in_month[month - 1];
        if (month == 2 && (year % 4 == 0 && (year % 100 != 0 || year % 400 == 0))) dim = 29;
        if (day < dim) {
            ++day;
        } else {
            day = 1;
            if (month == 12) {
                month = 1;
                ++year;
            } else {
                ++month;
            }
        }
        --days;
    }
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:00:00", year, month, day, hour);
    return buf;
}

}  // namespace

TimeSeries read_ett_csv(const std::string& path, const std::string& column) {
    std::ifstream in(path);
    if (!in) throw IoError("read_ett_csv: cannot open " + path);

    std::string line;
    if (!std::getline(in, line)) throw DataError("read_ett_csv: empty file " + path);
    const auto header = split_line(line);
    if (header.size() < 2)
        throw DataError("read_ett_csv: expected timestamp plus feature columns in " + path);

    std::size_t col = header.size();
    for (std::size_t i = 1; i < header.size(); ++i) {
        if (trim(header[i]) == column) {
            col = i;
            break;
        }
    }
    if (col == header.size())
        throw DataError("read_ett_csv: column '" + column + "' not found in " + path);

    TimeSeries out;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto cells = split_line(line);
        if (col >= cells.size())
            throw DataError("read_ett_csv: row " + std::to_string(line_no) + " has too few cells");
        const std::string cell = trim(cells[col]);
        if (is_missing_token(cell)) {
            out.values.push_back(0.0);
            out.observed.push_back(0);
            continue;
        }
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
        if (ec != std::errc{} || ptr != cell.data() + cell.size())
            throw DataError("read_ett_csv: bad numeric cell '" + cell + "' at row " +
                            std::to_string(line_no));
        if (!std::isfinite(v)) {
            out.values.push_back(0.0);
            out.observed.push_back(0);
        } else {
            out.values.push_back(v);
            out.observed.push_back(1);
        }
    }
    if (out.values.empty()) throw DataError("read_ett_csv: no data rows in " + path);
    return out;
}

void write_ett_csv(const std::string& path, const std::vector<TimeSeries>& series,
                   const std::vector<std::string>& column_names) {
    if (series.empty() || series.size() != column_names.size())
        throw ConfigError("write_ett_csv: series/column name count mismatch");
    const std::size_t n = series.front().length();
    for (const auto& s : series)
        if (s.length() != n) throw DataError("write_ett_csv: series lengths differ");

    std::ofstream out(path);
    if (!out) throw IoError("write_ett_csv: cannot open " + path + " for writing");
    out << "date";
    for (const auto& name : column_names) out << ',' << name;
    out << '\n';
    for (std::size_t t = 0; t < n; ++t) {
        out << timestamp_at(t);
        for (const auto& s : series) {
            out << ',';
            if (s.observed[t]) out << format_double(s.values[t]);
        }
        out << '\n';
    }
    if (!out) throw IoError("write_ett_csv: write failed for " + path);
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
    std::ofstream out(path);
    if (!out) throw IoError("write_csv: cannot open " + path + " for writing");
    for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
    out << '\n';
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
        out << '\n';
    }
    if (!out) throw IoError("write_csv: write failed for " + path);
}

}  // namespace mrcdm
