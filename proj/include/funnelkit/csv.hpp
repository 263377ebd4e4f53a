#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace funnelkit {

/// Fixed 17 significant digits, which round-trips every double.
std::string format_double(double v);

void write_csv_header(std::ostream& os, const std::vector<std::string>& columns);
void write_csv_row(std::ostream& os, std::span<const double> row);

} // namespace funnelkit
