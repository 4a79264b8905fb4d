#include "qawv/csv.hpp"

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace qawv::csv {

std::string format(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write(std::ostream& os, const std::vector<std::string>& header,
           const std::vector<std::vector<double>>& columns) {
    if (header.size() != columns.size()) throw std::invalid_argument("csv::write: header/column count mismatch");
    const std::size_t rows = columns.empty() ? 0 : columns.front().size();
    for (const auto& c : columns)
        if (c.size() != rows) throw std::invalid_argument("csv::write: ragged columns");
    for (std::size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
    os << '\n';
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < columns.size(); ++c) os << (c ? "," : "") << format(columns[c][r]);
        os << '\n';
    }
}

const std::vector<double>& Table::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return columns[i];
    throw std::out_of_range("csv::Table: no column '" + name + "'");
}

Table read(std::istream& is) {
    Table t;
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error("csv::read: empty input");
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) t.header.push_back(cell);
    }
    t.columns.resize(t.header.size());
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::size_t c = 0;
        while (std::getline(ss, cell, ',')) {
            if (c >= t.columns.size()) throw std::runtime_error("csv::read: too many cells in row");
            t.columns[c++].push_back(std::stod(cell));
        }
        if (c != t.columns.size()) throw std::runtime_error("csv::read: too few cells in row");
    }
    return t;
}

}  // namespace qawv::csv
