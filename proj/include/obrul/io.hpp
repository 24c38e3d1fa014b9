#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace obrul::io {

namespace fs = std::filesystem;

/// Shortest decimal form that round-trips a double exactly.
std::string format_double(double v);

std::string read_text_file(const fs::path& path);
void write_text_file(const fs::path& path, std::string_view content);

/// Locale-independent; throws ParseError naming `context` and `line` on failure.
double parse_double(std::string_view cell, const std::string& context, long line);
long parse_long(std::string_view cell, const std::string& context, long line);

/// Splits one CSV line on commas; trims spaces and the trailing CR.
std::vector<std::string> split_csv_line(std::string_view line);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

CsvTable read_csv(const fs::path& path);
void write_csv(const fs::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

/// Files with the given extension, sorted by filename.
std::vector<fs::path> list_files(const fs::path& dir, std::string_view extension);

/// key=value lines; '#' starts a comment; blank lines skipped.
std::vector<std::pair<std::string, std::string>> read_key_values(const fs::path& path);

std::string trim(std::string_view s);

}  // namespace obrul::io
