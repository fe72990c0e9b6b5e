#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

namespace taskimp::textio {

// First of ',', '\t', ';' present in the header line; ',' otherwise.
char detect_delimiter(std::string_view header);

std::vector<std::string> split(std::string_view line, char delim);

std::string_view trim(std::string_view s);

// Strict full-string parse; returns false on trailing garbage.
bool parse_double(std::string_view text, double& out);
bool parse_int(std::string_view text, long long& out);

// Shortest text that round-trips to the same double.
std::string format_double(double v);

// Exact binary round-trip through hexadecimal floating point.
std::string format_hex(double v);
bool parse_hex(std::string_view text, double& out);

std::ifstream open_input(const std::filesystem::path& path);
std::ofstream open_output(const std::filesystem::path& path);

// Reads all non-empty lines, stripping '\r'. Lines starting with '#' are
// returned separately as metadata.
struct DelimitedFile {
  std::vector<std::string> comments;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  char delimiter = ',';
};
DelimitedFile read_delimited(const std::filesystem::path& path);

}  // namespace taskimp::textio
