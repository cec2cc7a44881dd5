#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace gofslope::cli {

/// Shortest round-trip decimal form; "inf", "-inf" and "nan" for non-finite values.
std::string format_double(double v);
std::string format_optional(const std::optional<double>& v);
double parse_double(const std::string& text);

/// RFC-4180 field quoting.
std::string csv_field(const std::string& raw);
void write_csv_row(std::ostream& out, const std::vector<std::string>& fields);
std::vector<std::vector<std::string>> read_csv(std::istream& in);

}  // namespace gofslope::cli
