#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace nckernel::csv {

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

/// RFC 4180 style: comma separated, double quotes escape commas and quotes.
Table read(const std::string& path);

std::vector<std::string> split_line(std::string_view line);

/// Quotes a field only when it contains a comma, quote or newline.
std::string escape(std::string_view field);

/// Shortest representation that parses back to the same double.
std::string format_double(double value);

/// Full-string parse; returns false on trailing junk or empty input.
bool parse_double(std::string_view text, double& out);

}  // namespace nckernel::csv
