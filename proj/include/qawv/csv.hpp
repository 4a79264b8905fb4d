#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace qawv::csv {

// 17 significant digits, round-trip exact for doubles.
std::string format(double v);

// Header row then one row per index; all columns must share a length.
void write(std::ostream& os, const std::vector<std::string>& header,
           const std::vector<std::vector<double>>& columns);

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> columns;
    const std::vector<double>& column(const std::string& name) const;
};

Table read(std::istream& is);

}  // namespace qawv::csv
