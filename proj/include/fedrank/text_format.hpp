#pragma once

#include <istream>
#include <string>
#include <string_view>
#include <vector>

namespace fedrank::text {

std::vector<std::string_view> split(std::string_view line, char sep);
std::vector<std::string_view> split_whitespace(std::string_view line);
std::string_view trim(std::string_view s);

// Reads one line, dropping the LF terminator and a trailing CR.
bool next_line(std::istream& in, std::string& line);

// printf-style rendering of a double; the formats used in reports are fixed
// so reruns produce byte-identical files.
std::string real(double v, const char* format = "%.6f");
// Shortest text that parses back to the same double.
std::string exact(double v);

}  // namespace fedrank::text
