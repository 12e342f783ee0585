#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace chirp::csv {

/// Splits one RFC 4180 record. Quoted fields may contain commas and doubled
/// quotes; embedded newlines are not supported.
std::vector<std::string> split(std::string_view line);

/// Quotes a field when it contains a comma, quote or leading/trailing space.
std::string escape(std::string_view field);

/// "%.17g": reads back to the identical double.
std::string format_double(double v);

}  // namespace chirp::csv
