#include "funnelkit/csv.hpp"

#include <charconv>
#include <cmath>
#include <ostream>

namespace funnelkit {

std::string format_double(double v) {
    if (std::isnan(v)) {
        return "nan";
    }
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

void write_csv_header(std::ostream& os, const std::vector<std::string>& columns) {
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (i) {
            os << ',';
        }
        os << columns[i];
    }
    os << '\n';
}

void write_csv_row(std::ostream& os, std::span<const double> row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) {
            os << ',';
        }
        os << format_double(row[i]);
    }
    os << '\n';
}

} // namespace funnelkit
