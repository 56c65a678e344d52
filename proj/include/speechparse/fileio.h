#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace speechparse::fileio {

std::string read_file(const std::string& path);

// Writes to `path.tmp` and renames over `path`.
void write_file_atomic(const std::string& path, std::string_view contents);

// Splits on '\n'; a trailing '\r' is stripped from each line and a final
// empty line (from a terminating newline) is dropped.
std::vector<std::string_view> split_lines(std::string_view text);

std::vector<std::string_view> split(std::string_view text, char sep);
std::vector<std::string_view> split_whitespace(std::string_view text);
std::string_view trim(std::string_view text);

// Strict numeric parsing; the whole field must be consumed.
bool parse_double(std::string_view text, double& out);
bool parse_int(std::string_view text, long long& out);

// Hex SHA-256 of a file's bytes.
std::string sha256_file(const std::string& path);
std::string sha256(std::string_view bytes);

// Shortest decimal that round-trips to the same double.
std::string format_double(double value);
// Fixed-point with `decimals` digits.
std::string format_fixed(double value, int decimals);

}  // namespace speechparse::fileio
